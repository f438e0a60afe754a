#include "scry/world.hpp"

#include <algorithm>

#include "scry/rng.hpp"

namespace scry {

std::string domain_name(Domain d) {
  switch (d) {
    case Domain::lake: return "lake";
    case Domain::crafter: return "crafter";
    case Domain::cube: return "cube";
  }
  throw ContractError("unknown domain tag");
}

Domain domain_from_name(const std::string& name) {
  if (name == "lake") return Domain::lake;
  if (name == "crafter") return Domain::crafter;
  if (name == "cube") return Domain::cube;
  throw ContractError("unknown domain name: " + name);
}

const ValueDomain& value_domain(Domain d) {
  static const ValueDomain kLake{{"SAFE", "HOLE"}};
  static const ValueDomain kCrafter{{"grass", "sand", "water", "tree", "stone",
                                     "coal", "iron", "diamond", "lava", "path"}};
  static const ValueDomain kCube{{"R", "G", "B", "Y", "O", "W"}};
  switch (d) {
    case Domain::lake: return kLake;
    case Domain::crafter: return kCrafter;
    case Domain::cube: return kCube;
  }
  throw ContractError("unknown domain tag");
}

std::optional<int> value_index(Domain d, const std::string& name) {
  const auto& vals = value_domain(d).values;
  for (size_t i = 0; i < vals.size(); ++i) {
    if (vals[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

const std::string& value_name(Domain d, int value) {
  const auto& vals = value_domain(d).values;
  if (value < 0 || value >= static_cast<int>(vals.size())) {
    throw ContractError("value index out of range for domain " + domain_name(d));
  }
  return vals[static_cast<size_t>(value)];
}

RevealBudget default_reveal_budget(Domain d) {
  switch (d) {
    case Domain::lake: return {98, 5};
    case Domain::crafter: return {184, 5};
    case Domain::cube: return {88, 5};
  }
  throw ContractError("unknown domain tag");
}

json TokenLedger::to_json() const {
  return json{{"budget_in", budget.input_tokens_per_reveal},
              {"budget_out", budget.output_tokens_per_reveal},
              {"perception_in", perception_in},
              {"perception_out", perception_out},
              {"proposal_in", proposal_in},
              {"proposal_out", proposal_out},
              {"reveal_count", reveal_count}};
}

TokenLedger TokenLedger::from_json(const json& j) {
  TokenLedger l;
  l.budget.input_tokens_per_reveal = j.at("budget_in").get<uint32_t>();
  l.budget.output_tokens_per_reveal = j.at("budget_out").get<uint32_t>();
  l.perception_in = j.at("perception_in").get<uint64_t>();
  l.perception_out = j.at("perception_out").get<uint64_t>();
  l.proposal_in = j.at("proposal_in").get<uint64_t>();
  l.proposal_out = j.at("proposal_out").get<uint64_t>();
  l.reveal_count = j.at("reveal_count").get<uint64_t>();
  return l;
}

void charge_proposal(TokenLedger& ledger, uint64_t in_tokens, uint64_t out_tokens) {
  ledger.proposal_in += in_tokens;
  ledger.proposal_out += out_tokens;
}

WorldModel::WorldModel(Domain domain, int rows, int cols)
    : domain_(domain), rows_(rows), cols_(cols) {
  if (domain != Domain::cube && (rows <= 0 || cols <= 0)) {
    throw ContractError("grid world model needs positive dimensions");
  }
}

WorldModel WorldModel::for_cube() {
  WorldModel w;
  w.domain_ = Domain::cube;
  w.rows_ = 0;
  w.cols_ = 0;
  return w;
}

size_t WorldModel::var_count() const {
  if (domain_ == Domain::cube) return 54;
  return static_cast<size_t>(rows_) * static_cast<size_t>(cols_);
}

std::optional<int> WorldModel::merged_value(VariableId u) const {
  if (auto it = revealed_.find(u); it != revealed_.end()) return it->second;
  if (auto it = imputed_.find(u); it != imputed_.end()) return it->second;
  return std::nullopt;
}

std::optional<int> merged_value(const WorldModel& world, VariableId u) {
  return world.merged_value(u);
}

void WorldModel::add_revealed(VariableId u, int value) {
  if (u.domain != domain_) throw ContractError("fact domain mismatch");
  if (u.index >= var_count()) throw ContractError("variable index out of range");
  if (revealed_.count(u)) {
    throw ContractError("variable already revealed (re-reveal forbidden)");
  }
  revealed_[u] = value;
}

void WorldModel::add_imputed(VariableId u, int value) {
  if (u.domain != domain_) throw ContractError("fact domain mismatch");
  if (u.index >= var_count()) throw ContractError("variable index out of range");
  if (revealed_.count(u)) {
    throw ContractError("cannot impute a revealed variable");
  }
  imputed_[u] = value;
}

size_t WorldModel::merged_size() const {
  size_t n = revealed_.size();
  for (const auto& [u, v] : imputed_) {
    (void)v;
    if (!revealed_.count(u)) ++n;
  }
  return n;
}

std::vector<SymbolicFact> WorldModel::merged_facts() const {
  std::vector<SymbolicFact> facts;
  facts.reserve(merged_size());
  auto r = revealed_.begin();
  auto i = imputed_.begin();
  while (r != revealed_.end() || i != imputed_.end()) {
    if (i == imputed_.end() || (r != revealed_.end() && r->first <= i->first)) {
      if (i != imputed_.end() && i->first == r->first) ++i;  // shadowed
      facts.push_back({r->first, r->second, FactSource::revealed});
      ++r;
    } else {
      facts.push_back({i->first, i->second, FactSource::imputed});
      ++i;
    }
  }
  return facts;
}

namespace {

json facts_to_json(Domain d, const std::map<VariableId, int>& facts,
                   const char* source) {
  json arr = json::array();
  for (const auto& [u, v] : facts) {
    arr.push_back(json{{"var", u.index}, {"value", value_name(d, v)}, {"source", source}});
  }
  return arr;
}

void facts_from_json(Domain d, const json& arr,
                     const std::function<void(VariableId, int)>& add) {
  for (const auto& f : arr) {
    VariableId u{d, f.at("var").get<uint32_t>()};
    auto v = value_index(d, f.at("value").get<std::string>());
    if (!v) throw ContractError("unknown value name in serialized fact");
    add(u, *v);
  }
}

}  // namespace

json WorldModel::to_json() const {
  return json{{"domain", domain_name(domain_)},
              {"rows", rows_},
              {"cols", cols_},
              {"revealed", facts_to_json(domain_, revealed_, "revealed")},
              {"imputed", facts_to_json(domain_, imputed_, "imputed")}};
}

WorldModel WorldModel::from_json(const json& j) {
  Domain d = domain_from_name(j.at("domain").get<std::string>());
  WorldModel w;
  if (d == Domain::cube) {
    w = WorldModel::for_cube();
  } else {
    w = WorldModel(d, j.at("rows").get<int>(), j.at("cols").get<int>());
  }
  facts_from_json(d, j.at("revealed"),
                  [&w](VariableId u, int v) { w.add_revealed(u, v); });
  facts_from_json(d, j.at("imputed"),
                  [&w](VariableId u, int v) { w.add_imputed(u, v); });
  return w;
}

int GroundTruthInstance::true_value(VariableId u) const {
  if (u.domain != domain) throw ContractError("truth domain mismatch");
  if (u.index >= assignment.size()) {
    throw ContractError("variable index out of range for instance");
  }
  return assignment[u.index];
}

WorldModel GroundTruthInstance::empty_world() const {
  if (domain == Domain::cube) return WorldModel::for_cube();
  return WorldModel(domain, rows, cols);
}

namespace {

json cell_to_json(const std::optional<std::pair<int, int>>& c) {
  if (!c) return nullptr;
  return json::array({c->first, c->second});
}

std::optional<std::pair<int, int>> cell_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return std::make_pair(j.at(0).get<int>(), j.at(1).get<int>());
}

}  // namespace

json GroundTruthInstance::to_json() const {
  json values = json::array();
  for (int v : assignment) values.push_back(value_name(domain, v));
  return json{{"domain", domain_name(domain)}, {"rows", rows},   {"cols", cols},
              {"assignment", values},          {"start", cell_to_json(start)},
              {"goal", cell_to_json(goal)},    {"spawn", cell_to_json(spawn)}};
}

GroundTruthInstance GroundTruthInstance::from_json(const json& j) {
  GroundTruthInstance g;
  g.domain = domain_from_name(j.at("domain").get<std::string>());
  g.rows = j.at("rows").get<int>();
  g.cols = j.at("cols").get<int>();
  for (const auto& v : j.at("assignment")) {
    auto idx = value_index(g.domain, v.get<std::string>());
    if (!idx) throw ContractError("unknown value name in instance");
    g.assignment.push_back(*idx);
  }
  g.start = cell_from_json(j.at("start"));
  g.goal = cell_from_json(j.at("goal"));
  g.spawn = cell_from_json(j.at("spawn"));
  return g;
}

SymbolicFact reveal(const GroundTruthInstance& truth, VariableId u,
                    WorldModel& world, TokenLedger& ledger) {
  int value = truth.true_value(u);
  world.add_revealed(u, value);
  ledger.charge_reveal();
  return {u, value, FactSource::revealed};
}

SymbolicFact reveal(const GroundTruthInstance& truth, VariableId u,
                    WorldModel& world, TokenLedger& ledger,
                    const RevealNoise& noise, Rng& rng) {
  int value = truth.true_value(u);
  if (noise.flip_probability > 0.0 && rng.uniform01() < noise.flip_probability) {
    int n = value_domain(truth.domain).cardinality();
    value = (value + 1 + static_cast<int>(rng.below(static_cast<uint64_t>(n - 1)))) % n;
  }
  world.add_revealed(u, value);
  ledger.charge_reveal();
  return {u, value, FactSource::revealed};
}

double GroundingBreakdown::accuracy() const {
  int total = revealed_total + imputed_total;
  if (total == 0) {
    throw ContractError("grounding accuracy undefined on empty world model");
  }
  return static_cast<double>(revealed_correct + imputed_correct) / total;
}

GroundingBreakdown grounding_breakdown(const WorldModel& world,
                                       const GroundTruthInstance& truth) {
  GroundingBreakdown b;
  for (const SymbolicFact& f : world.merged_facts()) {
    bool correct = truth.true_value(f.var) == f.value;
    if (f.source == FactSource::revealed) {
      ++b.revealed_total;
      b.revealed_correct += correct ? 1 : 0;
    } else {
      ++b.imputed_total;
      b.imputed_correct += correct ? 1 : 0;
    }
  }
  return b;
}

double grounding_accuracy(const WorldModel& world,
                          const GroundTruthInstance& truth) {
  return grounding_breakdown(world, truth).accuracy();
}

}  // namespace scry
