#pragma once
// Experiment harness: the reveal-impute-plan episode loop for each domain,
// ablation wiring, induction scheduling, metric aggregation, run artifact
// persistence, and report validation.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "scry/crafter.hpp"
#include "scry/cube.hpp"
#include "scry/induction.hpp"
#include "scry/lake.hpp"
#include "scry/pattern.hpp"
#include "scry/proposer.hpp"
#include "scry/world.hpp"

namespace scry::harness {

enum class Mode { full, no_inference, no_reweight };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& name);

struct ExperimentConfig {
  Domain domain = Domain::lake;
  int episodes = 100;
  std::vector<uint64_t> seeds = {1, 2, 3};
  int trials = 3;
  Mode mode = Mode::full;

  // Pattern inference.
  double tau = 0.99;
  double epsilon = 1e-3;
  GateMode gate_mode = GateMode::consistent;
  bool rerank = true;  // crafter full mode

  // Induction. Masking is sparse and dense (hide 75%, many masks per
  // model): pattern weights are anchored only by masked terms where several
  // experts compete, and those are rare under light masking. Reweighting
  // refits from uniform weights at each trigger and waits for a minimum
  // buffer size; fitting conditionals from a handful of models produces
  // false unanimity, and overconfident imputations then poison the replay
  // buffer they will be trained on next.
  double mask_fraction = 0.75;
  int masks_per_model = 20;
  int reweight_min_models = 30;
  OptimizerConfig optimizer;
  int proposal_period = 5;
  int proposer_k = 10;
  std::string proposer = "oracle";  // none | oracle | scripted:<file> | remote
  RemoteProposer remote;
  std::string initial_library;  // "", builtin:<name>, or a library file path

  // Environment.
  RevealBudget budget;
  int map_size = 16;
  int min_path = 25;
  lake::GenMethod gen_method = lake::GenMethod::reject;
  crafter::Quota quota;
  int scramble_moves = 20;

  // Run control.
  std::string out_dir;
  bool record_traces = false;
  std::string frozen_library;  // set by the OOD runner: no proposals/reweighting

  // Default experiment profile for one domain.
  static ExperimentConfig defaults(Domain d);

  json to_json() const;
  // Starts from defaults(domain) and overlays the given keys.
  static ExperimentConfig from_json(const json& j);
};

struct EpisodeReport {
  int episode = 0;
  uint64_t seed = 0;
  int trial = 0;
  int revealed_total = 0;
  int revealed_correct = 0;
  int imputed_total = 0;
  int imputed_correct = 0;
  double grounding = 0.0;
  bool planning_success = false;
  std::string failure_reason;
  std::string trace_ref;  // "traces.jsonl#<episode>" when a trace was recorded
  TokenLedger ledger;

  json to_json() const;
};

struct RunReport {
  std::string domain;
  std::string mode;
  uint64_t seed = 0;
  int trial = 0;
  int episodes = 0;
  std::vector<EpisodeReport> episode_reports;

  double grounding_mean = 0.0;
  double planning_accuracy = 0.0;
  double perception_in_mean = 0.0;
  double perception_out_mean = 0.0;
  int proposal_count = 0;
  uint64_t proposal_in_total = 0;
  uint64_t proposal_out_total = 0;
  double proposal_in_per_proposal = 0.0;
  double proposal_out_per_proposal = 0.0;
  double total_in_mean = 0.0;
  double total_out_mean = 0.0;
  double reveal_mean = 0.0;
  std::vector<double> reveal_series;
  std::vector<double> reveal_series_smoothed;

  void compute_aggregates();
  json to_json() const;
};

// Discrete Gaussian smoothing with reflective boundaries (default sigma 2.0
// for the reveal-count series).
std::vector<double> smooth_series(const std::vector<double>& values, double sigma);

using EnvInstance =
    std::variant<lake::LakeInstance, crafter::CrafterMap, cube::CubeState>;

EnvInstance make_instance(const ExperimentConfig& config, uint64_t seed, int episode);

// One reveal-impute-plan episode. The library is read-only here; the final
// world model is written to *final_world for the replay buffer. Crafter
// episodes optionally emit their action/reveal trace.
EpisodeReport run_episode(const EnvInstance& instance, const PatternLibrary* library,
                          const ExperimentConfig& config, uint64_t agent_seed,
                          WorldModel* final_world,
                          std::vector<crafter::TraceEvent>* trace_out = nullptr);

// Builtin initial libraries: lake_templates, lake_salted, crafter_oracle,
// cube_dataset_corners, cube_placeholder.
PatternLibrary builtin_library(const std::string& name, const ExperimentConfig& config,
                               uint64_t run_seed);

struct RunArtifacts {
  RunReport report;
  ReplayBuffer buffer;
  PatternLibrary library{Domain::lake};
};

// One (seed, trial) run: episodes in sequence with induction triggers every
// proposal_period episodes (none after the final episode); writes the run
// directory when out_dir is set.
RunArtifacts run_single(const ExperimentConfig& config, uint64_t seed, int trial);

// Every configured (seed, trial) pair, plus a summary file.
std::vector<RunReport> run_experiment(const ExperimentConfig& config);

// Frozen-library transfer: patterns and weights fixed, proposals and
// reweighting disabled, larger maps per config.
std::vector<RunReport> run_ood(const ExperimentConfig& config,
                               const std::string& frozen_library_path);

json report_schema();
// Structural validation against the published schema; throws on violation.
void validate_report(const json& report);

json library_snapshot_json(Domain domain, const PatternLibrary& library);
PatternLibrary library_from_snapshot(const json& snapshot,
                                     std::optional<Domain> expect_domain);

}  // namespace scry::harness
