#pragma once
// Pattern library and gated mixture-of-experts inference. A pattern is an
// expert with an applicability predicate (does it anchor at this variable?),
// a context gate (do the surrounding known facts match?), a point prediction,
// and a non-negative reliability weight. Active experts vote with smoothed
// categorical distributions; the argmax is imputed when confident enough,
// and the same distribution scores reveal candidates for reranking.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scry/world.hpp"

namespace scry {

enum class PatternKind { grid_block, cross, corner };

std::string pattern_kind_name(PatternKind k);
PatternKind pattern_kind_from_name(const std::string& name);

// Context entry: (relative slot, expected value). Slot meaning by kind:
//   grid_block: cell 0..15 inside the aligned 4x4 block, row-major;
//   cross:      0 up, 1 down, 2 left, 3 right of the target cell;
//   corner:     slot 0..2 of the anchored corner cubie.
struct ContextEntry {
  int slot = 0;
  int value = 0;

  auto operator<=>(const ContextEntry&) const = default;
};

struct Pattern {
  PatternKind kind = PatternKind::cross;
  int anchor = -1;  // corner cubie index for corner patterns, -1 otherwise
  int target = 0;   // grid_block: cell 0..15; corner: slot 0..2; cross: unused
  std::vector<ContextEntry> context;
  int prediction = 0;
  double weight = 1.0;
};

// Macro patterns as proposed: a full 4x4 value grid, a cross (center plus
// four neighbors), or one corner cubie token.
struct GridBlockMacro {
  std::array<int, 16> cells{};
};
struct CrossMacro {
  int center = 0;
  std::array<int, 4> neighbors{};  // up, down, left, right
};
struct CornerMacro {
  int corner = 0;            // corner cubie index
  std::array<int, 3> colors{};  // slot order of the corner name
};

struct MacroPattern {
  std::variant<GridBlockMacro, CrossMacro, CornerMacro> payload;

  PatternKind kind() const;
};

// Expands a macro into its constituent patterns: 16 for a grid block (each
// cell predicted from the other 15), 1 for a cross (center from the four
// neighbors), 3 for a corner (each slot from the other two).
std::vector<Pattern> parse_macro(const MacroPattern& macro,
                                 double initial_weight = 1.0);

// Parses a strict-JSON proposal response ({"patterns": [...]}) using the
// domain's macro shape. Invalid entries are dropped and described in
// `errors` (one message per rejected macro).
std::vector<MacroPattern> parse_macros_json(Domain domain, const json& response,
                                            std::vector<std::string>* errors);

json macro_to_json(Domain domain, const MacroPattern& macro);

enum class GateMode { consistent, strict };

std::string gate_mode_name(GateMode m);
GateMode gate_mode_from_name(const std::string& name);

class PatternLibrary {
 public:
  explicit PatternLibrary(Domain domain, double epsilon = 1e-3,
                          GateMode gate_mode = GateMode::consistent);

  Domain domain() const { return domain_; }
  double epsilon() const { return epsilon_; }
  GateMode gate_mode() const { return gate_mode_; }
  void set_gate_mode(GateMode m) { gate_mode_ = m; }

  size_t size() const { return patterns_.size(); }
  bool empty() const { return patterns_.empty(); }
  const Pattern& operator[](size_t i) const { return patterns_[i]; }
  const std::vector<Pattern>& patterns() const { return patterns_; }

  // Structural dedup on (kind, anchor, target, context, prediction); the
  // weight of an existing duplicate is left untouched. Returns the index of
  // the inserted pattern, or nothing if it was a duplicate.
  std::optional<size_t> add_pattern(Pattern p);
  // Returns the number of genuinely new patterns.
  size_t add_macro(const MacroPattern& macro, double initial_weight = 1.0);
  size_t add_macros(const std::vector<MacroPattern>& macros,
                    double initial_weight = 1.0);

  std::vector<double> weights() const;
  void set_weights(std::span<const double> w);
  void reset_weights(double value);

  json to_json() const;  // {"patterns": [...], "epsilon": ..., "gate_mode": ...}
  static PatternLibrary from_json(Domain domain, const json& j);

 private:
  Domain domain_;
  double epsilon_;
  GateMode gate_mode_;
  std::vector<Pattern> patterns_;
};

// Indices of patterns that anchor at u and whose gate passes against the
// merged view. Under `consistent` gating at least one context entry must be
// known and matching and none may contradict; under `strict` gating every
// context entry must be known and matching.
std::vector<int> active_set(VariableId u, const WorldModel& world,
                            const PatternLibrary& library);

struct MixtureDistribution {
  std::vector<double> probabilities;  // over the variable's value domain
  std::vector<int> active_indices;

  int argmax() const;  // ties -> lowest value index
  double max_probability() const;
};

MixtureDistribution mixture(VariableId u, const WorldModel& world,
                            const PatternLibrary& library);
// Same, with the library's weights overridden (used by the optimizer).
MixtureDistribution mixture_with_weights(VariableId u, const WorldModel& world,
                                         const PatternLibrary& library,
                                         std::span<const double> weights);

struct ImputationConfig {
  double tau = 0.99;
};

double default_tau(Domain d);

// Adds the mixture argmax as an imputed fact when its confidence reaches
// tau; otherwise leaves the world untouched.
std::optional<SymbolicFact> impute(VariableId u, WorldModel& world,
                                   const PatternLibrary& library,
                                   const ImputationConfig& config);

// Repeats single-variable imputation over the candidates until no new fact
// appears (imputed facts can satisfy further gates) or the iteration cap is
// reached. Returns the facts added, in the order they were added.
std::vector<SymbolicFact> impute_closure(WorldModel& world,
                                         const PatternLibrary& library,
                                         const ImputationConfig& config,
                                         const std::vector<VariableId>& candidates,
                                         int max_sweeps = -1);

struct RerankSpec {
  std::vector<int> target_values;  // Z
};

// Mixture mass on the target value set Z.
double rerank_score(VariableId u, const WorldModel& world,
                    const PatternLibrary& library, const RerankSpec& spec);

// Candidates sorted by descending score; ties keep ascending variable order
// (row-major for grids). Never adds facts to the world model.
std::vector<VariableId> rerank(const std::vector<VariableId>& candidates,
                               const WorldModel& world,
                               const PatternLibrary& library,
                               const RerankSpec& spec);

}  // namespace scry
