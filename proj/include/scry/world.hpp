#pragma once
// Symbolic world model core: visual variables over finite symbolic value
// domains, the two fact sets (directly revealed vs pattern-imputed) with
// override merge, the exact reveal oracle, and per-episode token accounting.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scry/errors.hpp"

namespace scry {

using json = nlohmann::json;

enum class Domain { lake, crafter, cube };

std::string domain_name(Domain d);
Domain domain_from_name(const std::string& name);

// Ordered list of symbolic value names for one domain. Values are stored
// everywhere as indices into this list.
struct ValueDomain {
  std::vector<std::string> values;
  int cardinality() const { return static_cast<int>(values.size()); }
};

const ValueDomain& value_domain(Domain d);
std::optional<int> value_index(Domain d, const std::string& name);
const std::string& value_name(Domain d, int value);

// One inspectable unit of the scene: a grid cell (row-major index) or a
// cube facelet (0..53).
struct VariableId {
  Domain domain = Domain::lake;
  uint32_t index = 0;

  auto operator<=>(const VariableId&) const = default;
};

enum class FactSource { revealed, imputed };

struct SymbolicFact {
  VariableId var;
  int value = 0;
  FactSource source = FactSource::revealed;
};

struct RevealBudget {
  uint32_t input_tokens_per_reveal = 0;
  uint32_t output_tokens_per_reveal = 0;
};

// Fixed per-reveal costs used in the experiments.
RevealBudget default_reveal_budget(Domain d);

// Tracks perception tokens (proportional to reveal count under a fixed
// per-reveal budget) and proposal tokens separately.
struct TokenLedger {
  RevealBudget budget;
  uint64_t perception_in = 0;
  uint64_t perception_out = 0;
  uint64_t proposal_in = 0;
  uint64_t proposal_out = 0;
  uint64_t reveal_count = 0;

  void charge_reveal() {
    ++reveal_count;
    perception_in += budget.input_tokens_per_reveal;
    perception_out += budget.output_tokens_per_reveal;
  }
  uint64_t total_in() const { return perception_in + proposal_in; }
  uint64_t total_out() const { return perception_out + proposal_out; }
  // Perception counters stay linear in the reveal count.
  bool linear() const {
    return perception_in == budget.input_tokens_per_reveal * reveal_count &&
           perception_out == budget.output_tokens_per_reveal * reveal_count;
  }

  json to_json() const;
  static TokenLedger from_json(const json& j);
};

void charge_proposal(TokenLedger& ledger, uint64_t in_tokens, uint64_t out_tokens);

// Two fact maps with override merge: revealed facts win over imputed ones
// for the same variable. Geometry (rows/cols) rides along so pattern gates
// can resolve relative positions; a cube world has 54 variables and no grid.
class WorldModel {
 public:
  WorldModel() = default;
  WorldModel(Domain domain, int rows, int cols);
  static WorldModel for_cube();

  Domain domain() const { return domain_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t var_count() const;

  const std::map<VariableId, int>& revealed() const { return revealed_; }
  const std::map<VariableId, int>& imputed() const { return imputed_; }

  bool is_revealed(VariableId u) const { return revealed_.count(u) > 0; }
  bool known(VariableId u) const {
    return revealed_.count(u) > 0 || imputed_.count(u) > 0;
  }

  // Revealed value if present, else imputed value, else nothing.
  std::optional<int> merged_value(VariableId u) const;

  void add_revealed(VariableId u, int value);
  // Overwrites an existing imputed value (latest inference wins); refuses
  // variables that are already revealed.
  void add_imputed(VariableId u, int value);

  size_t merged_size() const;
  // Merged facts in variable order; each attributed to its effective source.
  std::vector<SymbolicFact> merged_facts() const;

  json to_json() const;
  static WorldModel from_json(const json& j);

 private:
  Domain domain_ = Domain::lake;
  int rows_ = 0;
  int cols_ = 0;
  std::map<VariableId, int> revealed_;
  std::map<VariableId, int> imputed_;
};

std::optional<int> merged_value(const WorldModel& world, VariableId u);

// Hidden full assignment plus instance geometry/task payload. Only the
// reveal oracle reads the assignment during an episode.
struct GroundTruthInstance {
  Domain domain = Domain::lake;
  int rows = 0;
  int cols = 0;
  std::vector<int> assignment;
  std::optional<std::pair<int, int>> start;  // lake
  std::optional<std::pair<int, int>> goal;   // lake
  std::optional<std::pair<int, int>> spawn;  // crafter

  size_t var_count() const { return assignment.size(); }
  int true_value(VariableId u) const;
  WorldModel empty_world() const;

  json to_json() const;
  static GroundTruthInstance from_json(const json& j);
};

// Optional perception-noise hook; off by default (per-variable perception
// is exact in all experiments).
struct RevealNoise {
  double flip_probability = 0.0;
};

// Grounds one variable to its true value, records the fact, and charges
// the fixed per-reveal budget. Re-revealing is a contract violation.
SymbolicFact reveal(const GroundTruthInstance& truth, VariableId u,
                    WorldModel& world, TokenLedger& ledger);
SymbolicFact reveal(const GroundTruthInstance& truth, VariableId u,
                    WorldModel& world, TokenLedger& ledger,
                    const RevealNoise& noise, class Rng& rng);

struct GroundingBreakdown {
  int revealed_total = 0;
  int revealed_correct = 0;
  int imputed_total = 0;
  int imputed_correct = 0;

  double accuracy() const;
};

GroundingBreakdown grounding_breakdown(const WorldModel& world,
                                       const GroundTruthInstance& truth);
// (correct imputed + correct revealed) / (imputed + revealed), over the
// merged view. Empty world model is an error.
double grounding_accuracy(const WorldModel& world,
                          const GroundTruthInstance& truth);

}  // namespace scry
