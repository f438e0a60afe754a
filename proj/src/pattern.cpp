#include "scry/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "scry/cube_geometry.hpp"

namespace scry {

std::string pattern_kind_name(PatternKind k) {
  switch (k) {
    case PatternKind::grid_block: return "grid_block";
    case PatternKind::cross: return "cross";
    case PatternKind::corner: return "corner";
  }
  throw ContractError("unknown pattern kind");
}

PatternKind pattern_kind_from_name(const std::string& name) {
  if (name == "grid_block") return PatternKind::grid_block;
  if (name == "cross") return PatternKind::cross;
  if (name == "corner") return PatternKind::corner;
  throw ContractError("unknown pattern kind name: " + name);
}

std::string gate_mode_name(GateMode m) {
  return m == GateMode::consistent ? "consistent" : "strict";
}

GateMode gate_mode_from_name(const std::string& name) {
  if (name == "consistent") return GateMode::consistent;
  if (name == "strict") return GateMode::strict;
  throw ContractError("unknown gate mode: " + name);
}

PatternKind MacroPattern::kind() const {
  if (std::holds_alternative<GridBlockMacro>(payload)) return PatternKind::grid_block;
  if (std::holds_alternative<CrossMacro>(payload)) return PatternKind::cross;
  return PatternKind::corner;
}

std::vector<Pattern> parse_macro(const MacroPattern& macro, double initial_weight) {
  std::vector<Pattern> out;
  if (const auto* grid = std::get_if<GridBlockMacro>(&macro.payload)) {
    for (int t = 0; t < 16; ++t) {
      Pattern p;
      p.kind = PatternKind::grid_block;
      p.target = t;
      p.prediction = grid->cells[static_cast<size_t>(t)];
      p.weight = initial_weight;
      for (int s = 0; s < 16; ++s) {
        if (s != t) p.context.push_back({s, grid->cells[static_cast<size_t>(s)]});
      }
      out.push_back(std::move(p));
    }
  } else if (const auto* cross = std::get_if<CrossMacro>(&macro.payload)) {
    Pattern p;
    p.kind = PatternKind::cross;
    p.target = 0;
    p.prediction = cross->center;
    p.weight = initial_weight;
    for (int s = 0; s < 4; ++s) {
      p.context.push_back({s, cross->neighbors[static_cast<size_t>(s)]});
    }
    out.push_back(std::move(p));
  } else {
    const auto& corner = std::get<CornerMacro>(macro.payload);
    for (int t = 0; t < 3; ++t) {
      Pattern p;
      p.kind = PatternKind::corner;
      p.anchor = corner.corner;
      p.target = t;
      p.prediction = corner.colors[static_cast<size_t>(t)];
      p.weight = initial_weight;
      for (int s = 0; s < 3; ++s) {
        if (s != t) p.context.push_back({s, corner.colors[static_cast<size_t>(s)]});
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

namespace {

std::optional<MacroPattern> parse_one_macro(Domain domain, const json& entry,
                                            std::string* error) {
  switch (domain) {
    case Domain::lake: {
      if (!entry.is_array() || entry.size() != 4) {
        *error = "grid macro must be a 4x4 array of rows";
        return std::nullopt;
      }
      GridBlockMacro m;
      for (int r = 0; r < 4; ++r) {
        const auto& row = entry[static_cast<size_t>(r)];
        if (!row.is_array() || row.size() != 4) {
          *error = "grid macro must be a 4x4 array of rows";
          return std::nullopt;
        }
        for (int c = 0; c < 4; ++c) {
          const auto& cell = row[static_cast<size_t>(c)];
          if (!cell.is_string()) {
            *error = "every cell must be labeled exactly \"SAFE\" or \"HOLE\"";
            return std::nullopt;
          }
          auto v = value_index(Domain::lake, cell.get<std::string>());
          if (!v) {
            *error = "every cell must be labeled exactly \"SAFE\" or \"HOLE\"";
            return std::nullopt;
          }
          m.cells[static_cast<size_t>(r * 4 + c)] = *v;
        }
      }
      return MacroPattern{m};
    }
    case Domain::crafter: {
      static const std::array<const char*, 5> kKeys = {"center", "top", "bottom",
                                                       "left", "right"};
      if (!entry.is_object()) {
        *error = "cross macro must be an object with center/top/bottom/left/right";
        return std::nullopt;
      }
      std::array<int, 5> vals{};
      for (size_t k = 0; k < kKeys.size(); ++k) {
        if (!entry.contains(kKeys[k]) || !entry[kKeys[k]].is_string()) {
          *error = "cross macro must be an object with center/top/bottom/left/right";
          return std::nullopt;
        }
        std::string name = entry[kKeys[k]].get<std::string>();
        if (name == "unknown") {
          *error = "cross macro cells must not be unknown";
          return std::nullopt;
        }
        auto v = value_index(Domain::crafter, name);
        if (!v) {
          *error = "unknown material name: " + name;
          return std::nullopt;
        }
        vals[k] = *v;
      }
      CrossMacro m;
      m.center = vals[0];
      m.neighbors = {vals[1], vals[2], vals[3], vals[4]};
      return MacroPattern{m};
    }
    case Domain::cube: {
      if (!entry.is_object() || !entry.contains("cubies") ||
          !entry["cubies"].is_object() || entry["cubies"].size() != 1) {
        *error = "each proposed pattern must contain exactly one corner cubie";
        return std::nullopt;
      }
      const auto& cubies = entry["cubies"];
      const std::string name = cubies.begin().key();
      const auto& names = cube::corner_names();
      auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) {
        *error = "unknown corner cubie: " + name;
        return std::nullopt;
      }
      if (!cubies.begin().value().is_string()) {
        *error = "corner token must be a string";
        return std::nullopt;
      }
      std::string token = cubies.begin().value().get<std::string>();
      if (token.size() != 3) {
        *error = "Corner token length must be exactly 3";
        return std::nullopt;
      }
      CornerMacro m;
      m.corner = static_cast<int>(it - names.begin());
      for (int s = 0; s < 3; ++s) {
        auto v = value_index(Domain::cube, std::string(1, token[static_cast<size_t>(s)]));
        if (!v) {
          *error = "corner token characters must be one of R,G,B,Y,O,W";
          return std::nullopt;
        }
        m.colors[static_cast<size_t>(s)] = *v;
      }
      return MacroPattern{m};
    }
  }
  *error = "unknown domain";
  return std::nullopt;
}

}  // namespace

std::vector<MacroPattern> parse_macros_json(Domain domain, const json& response,
                                            std::vector<std::string>* errors) {
  std::vector<MacroPattern> out;
  if (!response.is_object() || !response.contains("patterns") ||
      !response["patterns"].is_array()) {
    if (errors) errors->push_back("response must be an object with a patterns array");
    return out;
  }
  for (const auto& entry : response["patterns"]) {
    std::string error;
    auto macro = parse_one_macro(domain, entry, &error);
    if (macro) {
      out.push_back(*macro);
    } else if (errors) {
      errors->push_back(error);
    }
  }
  return out;
}

json macro_to_json(Domain domain, const MacroPattern& macro) {
  if (const auto* grid = std::get_if<GridBlockMacro>(&macro.payload)) {
    json rows = json::array();
    for (int r = 0; r < 4; ++r) {
      json row = json::array();
      for (int c = 0; c < 4; ++c) {
        row.push_back(value_name(domain, grid->cells[static_cast<size_t>(r * 4 + c)]));
      }
      rows.push_back(row);
    }
    return rows;
  }
  if (const auto* cross = std::get_if<CrossMacro>(&macro.payload)) {
    return json{{"center", value_name(domain, cross->center)},
                {"top", value_name(domain, cross->neighbors[0])},
                {"bottom", value_name(domain, cross->neighbors[1])},
                {"left", value_name(domain, cross->neighbors[2])},
                {"right", value_name(domain, cross->neighbors[3])}};
  }
  const auto& corner = std::get<CornerMacro>(macro.payload);
  std::string token;
  for (int c : corner.colors) token += value_name(Domain::cube, c);
  return json{{"cubies", {{cube::corner_names()[static_cast<size_t>(corner.corner)], token}}}};
}

PatternLibrary::PatternLibrary(Domain domain, double epsilon, GateMode gate_mode)
    : domain_(domain), epsilon_(epsilon), gate_mode_(gate_mode) {
  int n = value_domain(domain).cardinality();
  if (!(epsilon > 0.0 && epsilon < 1.0 / n)) {
    throw ContractError("epsilon must lie in (0, 1/|Y|)");
  }
}

namespace {

using DedupKey =
    std::tuple<int, int, int, std::vector<ContextEntry>, int>;

DedupKey dedup_key(const Pattern& p) {
  std::vector<ContextEntry> ctx = p.context;
  std::sort(ctx.begin(), ctx.end());
  return {static_cast<int>(p.kind), p.anchor, p.target, std::move(ctx), p.prediction};
}

}  // namespace

std::optional<size_t> PatternLibrary::add_pattern(Pattern p) {
  if (p.weight < 0.0) throw ContractError("pattern weight must be non-negative");
  if (p.context.empty()) throw ContractError("pattern context must be nonempty");
  DedupKey key = dedup_key(p);
  for (const Pattern& existing : patterns_) {
    if (dedup_key(existing) == key) return std::nullopt;
  }
  std::sort(p.context.begin(), p.context.end());
  patterns_.push_back(std::move(p));
  return patterns_.size() - 1;
}

size_t PatternLibrary::add_macro(const MacroPattern& macro, double initial_weight) {
  size_t added = 0;
  for (Pattern& p : parse_macro(macro, initial_weight)) {
    if (add_pattern(std::move(p))) ++added;
  }
  return added;
}

size_t PatternLibrary::add_macros(const std::vector<MacroPattern>& macros,
                                  double initial_weight) {
  size_t added = 0;
  for (const MacroPattern& m : macros) added += add_macro(m, initial_weight);
  return added;
}

std::vector<double> PatternLibrary::weights() const {
  std::vector<double> w;
  w.reserve(patterns_.size());
  for (const Pattern& p : patterns_) w.push_back(p.weight);
  return w;
}

void PatternLibrary::set_weights(std::span<const double> w) {
  if (w.size() != patterns_.size()) {
    throw ContractError("weight vector length must match library size");
  }
  for (size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0)) throw ContractError("pattern weight must be non-negative");
    patterns_[i].weight = w[i];
  }
}

void PatternLibrary::reset_weights(double value) {
  for (Pattern& p : patterns_) p.weight = value;
}

json PatternLibrary::to_json() const {
  json patterns = json::array();
  for (const Pattern& p : patterns_) {
    json ctx = json::array();
    for (const ContextEntry& e : p.context) {
      ctx.push_back(json::array({e.slot, value_name(domain_, e.value)}));
    }
    json jp{{"kind", pattern_kind_name(p.kind)},
            {"target", p.target},
            {"context", ctx},
            {"prediction", value_name(domain_, p.prediction)},
            {"weight", p.weight}};
    if (p.kind == PatternKind::corner) {
      jp["anchor"] = cube::corner_names()[static_cast<size_t>(p.anchor)];
    }
    patterns.push_back(jp);
  }
  return json{{"patterns", patterns},
              {"epsilon", epsilon_},
              {"gate_mode", gate_mode_name(gate_mode_)}};
}

PatternLibrary PatternLibrary::from_json(Domain domain, const json& j) {
  PatternLibrary lib(domain, j.at("epsilon").get<double>(),
                     gate_mode_from_name(j.at("gate_mode").get<std::string>()));
  for (const auto& jp : j.at("patterns")) {
    Pattern p;
    p.kind = pattern_kind_from_name(jp.at("kind").get<std::string>());
    p.target = jp.at("target").get<int>();
    if (p.kind == PatternKind::corner) {
      const std::string name = jp.at("anchor").get<std::string>();
      const auto& names = cube::corner_names();
      auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) throw ContractError("unknown corner anchor: " + name);
      p.anchor = static_cast<int>(it - names.begin());
    }
    for (const auto& e : jp.at("context")) {
      auto v = value_index(domain, e.at(1).get<std::string>());
      if (!v) throw ContractError("unknown context value in library file");
      p.context.push_back({e.at(0).get<int>(), *v});
    }
    auto pred = value_index(domain, jp.at("prediction").get<std::string>());
    if (!pred) throw ContractError("unknown prediction value in library file");
    p.prediction = *pred;
    p.weight = jp.at("weight").get<double>();
    lib.add_pattern(std::move(p));
  }
  return lib;
}

namespace {

// Resolves a pattern's context slot to an absolute variable for target u,
// or nothing when the slot falls outside the grid.
std::optional<VariableId> context_var(const Pattern& p, VariableId u,
                                      const WorldModel& world, int slot) {
  switch (p.kind) {
    case PatternKind::grid_block: {
      int cols = world.cols();
      int r = static_cast<int>(u.index) / cols;
      int c = static_cast<int>(u.index) % cols;
      int base_r = r - r % 4;
      int base_c = c - c % 4;
      int sr = base_r + slot / 4;
      int sc = base_c + slot % 4;
      return VariableId{u.domain, static_cast<uint32_t>(sr * cols + sc)};
    }
    case PatternKind::cross: {
      int cols = world.cols();
      int r = static_cast<int>(u.index) / cols;
      int c = static_cast<int>(u.index) % cols;
      static constexpr int dr[4] = {-1, 1, 0, 0};
      static constexpr int dc[4] = {0, 0, -1, 1};
      int nr = r + dr[slot];
      int nc = c + dc[slot];
      if (nr < 0 || nr >= world.rows() || nc < 0 || nc >= world.cols()) {
        return std::nullopt;
      }
      return VariableId{u.domain, static_cast<uint32_t>(nr * cols + nc)};
    }
    case PatternKind::corner: {
      int facelet = cube::corner_facelets()[static_cast<size_t>(p.anchor)]
                                           [static_cast<size_t>(slot)];
      return VariableId{u.domain, static_cast<uint32_t>(facelet)};
    }
  }
  return std::nullopt;
}

bool applicable(const Pattern& p, VariableId u, const WorldModel& world) {
  switch (p.kind) {
    case PatternKind::grid_block: {
      if (world.domain() == Domain::cube) return false;
      if (world.rows() % 4 != 0 || world.cols() % 4 != 0) return false;
      int cols = world.cols();
      int r = static_cast<int>(u.index) / cols;
      int c = static_cast<int>(u.index) % cols;
      return (r % 4) * 4 + (c % 4) == p.target;
    }
    case PatternKind::cross: {
      if (world.domain() == Domain::cube) return false;
      int cols = world.cols();
      int r = static_cast<int>(u.index) / cols;
      int c = static_cast<int>(u.index) % cols;
      return r > 0 && r < world.rows() - 1 && c > 0 && c < world.cols() - 1;
    }
    case PatternKind::corner: {
      if (world.domain() != Domain::cube) return false;
      const auto& triple = cube::corner_facelets()[static_cast<size_t>(p.anchor)];
      return triple[static_cast<size_t>(p.target)] == static_cast<int>(u.index);
    }
  }
  return false;
}

bool gate_passes(const Pattern& p, VariableId u, const WorldModel& world,
                 GateMode mode) {
  int matched = 0;
  for (const ContextEntry& e : p.context) {
    auto var = context_var(p, u, world, e.slot);
    if (!var) return false;  // context leaves the grid
    auto value = world.merged_value(*var);
    if (!value) {
      if (mode == GateMode::strict) return false;
      continue;
    }
    if (*value != e.value) return false;  // contradiction
    ++matched;
  }
  if (mode == GateMode::strict) {
    return matched == static_cast<int>(p.context.size());
  }
  return matched >= 1;
}

}  // namespace

std::vector<int> active_set(VariableId u, const WorldModel& world,
                            const PatternLibrary& library) {
  if (u.domain != world.domain() || library.domain() != world.domain()) {
    throw ContractError("variable, world, and library domains must agree");
  }
  std::vector<int> active;
  for (size_t i = 0; i < library.size(); ++i) {
    const Pattern& p = library[i];
    if (applicable(p, u, world) && gate_passes(p, u, world, library.gate_mode())) {
      active.push_back(static_cast<int>(i));
    }
  }
  return active;
}

int MixtureDistribution::argmax() const {
  int best = 0;
  for (size_t v = 1; v < probabilities.size(); ++v) {
    if (probabilities[v] > probabilities[static_cast<size_t>(best)]) {
      best = static_cast<int>(v);
    }
  }
  return best;
}

double MixtureDistribution::max_probability() const {
  return probabilities[static_cast<size_t>(argmax())];
}

MixtureDistribution mixture_with_weights(VariableId u, const WorldModel& world,
                                         const PatternLibrary& library,
                                         std::span<const double> weights) {
  if (weights.size() != library.size()) {
    throw ContractError("weight vector length must match library size");
  }
  const int n = value_domain(u.domain).cardinality();
  MixtureDistribution dist;
  dist.active_indices = active_set(u, world, library);

  double total_weight = 0.0;
  for (int i : dist.active_indices) total_weight += weights[static_cast<size_t>(i)];

  if (dist.active_indices.empty() || total_weight <= 0.0) {
    dist.probabilities.assign(static_cast<size_t>(n), 1.0 / n);
    if (total_weight <= 0.0) dist.active_indices.clear();
    return dist;
  }

  const double eps = library.epsilon();
  const double off = eps / (n - 1);
  dist.probabilities.assign(static_cast<size_t>(n), off);
  for (int i : dist.active_indices) {
    const Pattern& p = library[static_cast<size_t>(i)];
    dist.probabilities[static_cast<size_t>(p.prediction)] +=
        weights[static_cast<size_t>(i)] / total_weight * (1.0 - eps - off);
  }
  return dist;
}

MixtureDistribution mixture(VariableId u, const WorldModel& world,
                            const PatternLibrary& library) {
  std::vector<double> w = library.weights();
  return mixture_with_weights(u, world, library, w);
}

double default_tau(Domain d) {
  switch (d) {
    case Domain::lake: return 0.99;
    case Domain::crafter: return 1.00;
    case Domain::cube: return 0.99;
  }
  throw ContractError("unknown domain tag");
}

std::optional<SymbolicFact> impute(VariableId u, WorldModel& world,
                                   const PatternLibrary& library,
                                   const ImputationConfig& config) {
  if (world.is_revealed(u)) {
    throw ContractError("cannot impute a revealed variable");
  }
  MixtureDistribution dist = mixture(u, world, library);
  int value = dist.argmax();
  double confidence = dist.probabilities[static_cast<size_t>(value)];
  if (confidence < config.tau) return std::nullopt;
  world.add_imputed(u, value);
  return SymbolicFact{u, value, FactSource::imputed};
}

std::vector<SymbolicFact> impute_closure(WorldModel& world,
                                         const PatternLibrary& library,
                                         const ImputationConfig& config,
                                         const std::vector<VariableId>& candidates,
                                         int max_sweeps) {
  std::vector<SymbolicFact> added;
  if (max_sweeps < 0) max_sweeps = static_cast<int>(candidates.size());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool progress = false;
    for (VariableId u : candidates) {
      if (world.known(u)) continue;
      if (auto fact = impute(u, world, library, config)) {
        added.push_back(*fact);
        progress = true;
      }
    }
    if (!progress) break;
  }
  return added;
}

double rerank_score(VariableId u, const WorldModel& world,
                    const PatternLibrary& library, const RerankSpec& spec) {
  MixtureDistribution dist = mixture(u, world, library);
  double s = 0.0;
  for (int v : spec.target_values) s += dist.probabilities[static_cast<size_t>(v)];
  return s;
}

std::vector<VariableId> rerank(const std::vector<VariableId>& candidates,
                               const WorldModel& world,
                               const PatternLibrary& library,
                               const RerankSpec& spec) {
  if (candidates.empty()) throw ContractError("rerank needs candidates");
  if (spec.target_values.empty()) throw ContractError("rerank needs target values");
  std::vector<std::pair<double, VariableId>> scored;
  scored.reserve(candidates.size());
  for (VariableId u : candidates) {
    scored.emplace_back(rerank_score(u, world, library, spec), u);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) {
                     if (a.first != b.first) return a.first > b.first;
                     return a.second < b.second;
                   });
  std::vector<VariableId> out;
  out.reserve(scored.size());
  for (const auto& [s, u] : scored) {
    (void)s;
    out.push_back(u);
  }
  return out;
}

}  // namespace scry
