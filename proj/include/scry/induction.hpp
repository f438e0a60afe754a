#pragma once
// Online pattern learning: the replay buffer of final world models, masked
// training-data generation, and maximum-likelihood reweighting of the
// pattern library under the mixture objective.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scry/pattern.hpp"
#include "scry/world.hpp"

namespace scry {

struct ReplayEntry {
  int episode = 0;
  bool success = false;
  bool reflected = false;  // already used in a proposal context
  WorldModel model;
};

class ReplayBuffer {
 public:
  void append(ReplayEntry entry) { entries_.push_back(std::move(entry)); }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const ReplayEntry& operator[](size_t i) const { return entries_[i]; }
  ReplayEntry& operator[](size_t i) { return entries_[i]; }
  const std::vector<ReplayEntry>& entries() const { return entries_; }

  std::string to_jsonl() const;
  static ReplayBuffer from_jsonl(const std::string& text);

 private:
  std::vector<ReplayEntry> entries_;
};

// One self-supervised training pair: the visible remainder of a final world
// model and the facts hidden from it.
struct MaskedSample {
  WorldModel visible;
  std::vector<SymbolicFact> hidden;
};

// Hides ceil(fraction * |facts|) merged facts per sample, uniformly without
// replacement; deterministic in the seed. Models with fewer than two facts
// are rejected.
std::vector<MaskedSample> generate_masks(const WorldModel& model, double fraction,
                                         int count, uint64_t seed);

// Masks every buffered model.
std::vector<MaskedSample> build_mask_dataset(const ReplayBuffer& buffer,
                                             double fraction, int count,
                                             uint64_t seed);

// Sum over samples and hidden facts of log p_w(value | visible), with the
// mixture's uniform fallback when nothing is active.
double log_likelihood(std::span<const double> weights,
                      const std::vector<MaskedSample>& dataset,
                      const PatternLibrary& library);

// Analytic gradient of the log-likelihood with respect to the weights.
// Entries for patterns that are never active are exactly zero.
std::vector<double> grad_log_likelihood(std::span<const double> weights,
                                        const std::vector<MaskedSample>& dataset,
                                        const PatternLibrary& library);

enum class Reparam { exponential, softplus };

struct OptimizerConfig {
  double step_size = 1.0;
  int max_iterations = 50;
  Reparam reparameterization = Reparam::exponential;
  double grad_tol = 1e-8;
};

OptimizerConfig default_optimizer_config(Domain d);

struct OptimizeResult {
  std::vector<double> weights;
  double initial_ll = 0.0;
  double final_ll = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> ll_history;  // nondecreasing by construction
};

// Maximizes the masked log-likelihood over non-negative weights via L-BFGS
// on an unconstrained reparameterization, warm-started from the library's
// current weights. The library is updated in place; the returned
// log-likelihood never falls below the starting one.
OptimizeResult optimize_weights(PatternLibrary& library,
                                const std::vector<MaskedSample>& dataset,
                                const OptimizerConfig& config);

// Induction checkpoints: every `period` episodes, skipping a trailing
// checkpoint that would fall after the final episode.
std::vector<int> proposal_trigger_episodes(int episodes, int period);

}  // namespace scry
