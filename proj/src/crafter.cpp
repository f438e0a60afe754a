#include "scry/crafter.hpp"

#include <algorithm>
#include <deque>
#include <functional>

#include "scry/errors.hpp"
#include "scry/rng.hpp"

namespace scry::crafter {

namespace {

constexpr int kMaxWorldRejects = 1000;

using Cell = std::pair<int, int>;

constexpr int kStepR[4] = {-1, 0, 0, 1};
constexpr int kStepC[4] = {0, -1, 1, 0};

int cheb(Cell a, Cell b) {
  return std::max(std::abs(a.first - b.first), std::abs(a.second - b.second));
}

struct WorldgenGrid {
  int size;
  std::vector<int> cells;

  int& at(int r, int c) { return cells[static_cast<size_t>(r * size + c)]; }
  int get(int r, int c) const { return cells[static_cast<size_t>(r * size + c)]; }
  bool in_bounds(int r, int c) const {
    return r >= 0 && r < size && c >= 0 && c < size;
  }
};

// Frontier-style cluster growth: converts up to `target` eligible cells
// reachable from a random eligible seed.
template <typename Eligible>
void grow_blob(WorldgenGrid& g, Rng& rng, int material, int target,
               const Eligible& eligible) {
  Cell seed{-1, -1};
  for (int tries = 0; tries < 200; ++tries) {
    int r = rng.uniform_int(1, g.size - 2);
    int c = rng.uniform_int(1, g.size - 2);
    if (eligible(r, c)) {
      seed = {r, c};
      break;
    }
  }
  if (seed.first < 0) return;
  std::vector<Cell> blob{seed};
  g.at(seed.first, seed.second) = material;
  for (int step = 0; step < target * 6 && static_cast<int>(blob.size()) < target; ++step) {
    Cell base = blob[rng.below(blob.size())];
    int k = static_cast<int>(rng.below(4));
    int nr = base.first + kStepR[k], nc = base.second + kStepC[k];
    if (!g.in_bounds(nr, nc) || !eligible(nr, nc)) continue;
    g.at(nr, nc) = material;
    blob.push_back({nr, nc});
  }
}

bool all_neighbors_are(const WorldgenGrid& g, int r, int c,
                       std::initializer_list<int> allowed) {
  for (int k = 0; k < 4; ++k) {
    int nr = r + kStepR[k], nc = c + kStepC[k];
    if (!g.in_bounds(nr, nc)) return false;
    int v = g.get(nr, nc);
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) return false;
  }
  return true;
}

// Small same-material veins seeded at interior stone cells.
void place_veins(WorldgenGrid& g, Rng& rng, int material, int veins, int vein_len) {
  for (int v = 0; v < veins; ++v) {
    Cell seed{-1, -1};
    for (int tries = 0; tries < 400; ++tries) {
      int r = rng.uniform_int(1, g.size - 2);
      int c = rng.uniform_int(1, g.size - 2);
      if (g.get(r, c) == kStone && all_neighbors_are(g, r, c, {kStone})) {
        seed = {r, c};
        break;
      }
    }
    if (seed.first < 0) continue;
    g.at(seed.first, seed.second) = material;
    Cell cur = seed;
    for (int grown = 1; grown < vein_len; ++grown) {
      bool extended = false;
      for (int tries = 0; tries < 8 && !extended; ++tries) {
        int k = static_cast<int>(rng.below(4));
        int nr = cur.first + kStepR[k], nc = cur.second + kStepC[k];
        if (g.in_bounds(nr, nc) && g.get(nr, nc) == kStone &&
            all_neighbors_are(g, nr, nc, {kStone, material})) {
          g.at(nr, nc) = material;
          cur = {nr, nc};
          extended = true;
        }
      }
      if (!extended) break;
    }
  }
}

// Cells reachable from spawn when the listed materials are traversable.
std::map<int, int> tier_reach_counts(const WorldgenGrid& g, Cell spawn,
                                     const std::set<int>& pass) {
  std::map<int, int> counts;
  if (!pass.count(g.get(spawn.first, spawn.second))) return counts;
  std::vector<uint8_t> seen(static_cast<size_t>(g.size * g.size), 0);
  std::deque<Cell> queue{spawn};
  seen[static_cast<size_t>(spawn.first * g.size + spawn.second)] = 1;
  counts[g.get(spawn.first, spawn.second)]++;
  while (!queue.empty()) {
    auto [r, c] = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      int nr = r + kStepR[k], nc = c + kStepC[k];
      if (!g.in_bounds(nr, nc)) continue;
      size_t ni = static_cast<size_t>(nr * g.size + nc);
      if (seen[ni] || !pass.count(g.get(nr, nc))) continue;
      seen[ni] = 1;
      counts[g.get(nr, nc)]++;
      queue.push_back({nr, nc});
    }
  }
  return counts;
}

bool quota_reachable(const WorldgenGrid& g, Cell spawn, const Quota& quota) {
  std::set<int> tier0{kGrass, kSand, kPath, kTree};
  auto c0 = tier_reach_counts(g, spawn, tier0);
  if (c0[kTree] < quota.trees) return false;

  std::set<int> tier1 = tier0;
  tier1.insert(kStone);
  tier1.insert(kCoal);
  auto c1 = tier_reach_counts(g, spawn, tier1);
  if (c1[kStone] < quota.stones || c1[kCoal] < quota.coal) return false;

  std::set<int> tier2 = tier1;
  tier2.insert(kIron);
  auto c2 = tier_reach_counts(g, spawn, tier2);
  if (c2[kIron] < quota.iron) return false;

  std::set<int> tier3 = tier2;
  tier3.insert(kDiamond);
  auto c3 = tier_reach_counts(g, spawn, tier3);
  return c3[kDiamond] >= quota.diamond;
}

bool ores_touch_stone(const WorldgenGrid& g) {
  for (int r = 0; r < g.size; ++r) {
    for (int c = 0; c < g.size; ++c) {
      int v = g.get(r, c);
      if (v != kCoal && v != kIron && v != kDiamond) continue;
      bool ok = false;
      for (int k = 0; k < 4 && !ok; ++k) {
        int nr = r + kStepR[k], nc = c + kStepC[k];
        ok = g.in_bounds(nr, nc) && g.get(nr, nc) == kStone;
      }
      if (!ok) return false;
    }
  }
  return true;
}

}  // namespace

GroundTruthInstance CrafterMap::truth() const {
  GroundTruthInstance t;
  t.domain = Domain::crafter;
  t.rows = size;
  t.cols = size;
  t.assignment = grid;
  t.spawn = spawn;
  return t;
}

json CrafterMap::to_json() const {
  json rows = json::array();
  for (int r = 0; r < size; ++r) {
    json row = json::array();
    for (int c = 0; c < size; ++c) {
      row.push_back(value_name(Domain::crafter, grid[static_cast<size_t>(r * size + c)]));
    }
    rows.push_back(row);
  }
  return json{{"materials", rows},
              {"spawn", json::array({spawn.first, spawn.second})},
              {"seed", seed}};
}

CrafterMap CrafterMap::from_json(const json& j) {
  CrafterMap m;
  const json& rows = j.at("materials");
  m.size = static_cast<int>(rows.size());
  for (const auto& row : rows) {
    for (const auto& cell : row) {
      m.grid.push_back(*value_index(Domain::crafter, cell.get<std::string>()));
    }
  }
  m.spawn = {j.at("spawn")[0].get<int>(), j.at("spawn")[1].get<int>()};
  m.seed = j.at("seed").get<uint64_t>();
  return m;
}

CrafterMap generate_world(uint64_t seed, int size, const Quota& quota) {
  if (size < 16) throw ContractError("crafter worlds need size >= 16");
  const int scale = std::max(1, (size * size) / 4096);

  for (int attempt = 0; attempt < kMaxWorldRejects; ++attempt) {
    Rng rng(mix_seed({seed, static_cast<uint64_t>(attempt), 0xC7AF7E7ull}));
    WorldgenGrid g{size, std::vector<int>(static_cast<size_t>(size * size), kGrass)};

    auto on_grass = [&g](int r, int c) { return g.get(r, c) == kGrass; };

    for (int i = 0; i < 3 * scale; ++i) grow_blob(g, rng, kWater, 70, on_grass);
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        if (g.get(r, c) != kGrass) continue;
        for (int k = 0; k < 4; ++k) {
          int nr = r + kStepR[k], nc = c + kStepC[k];
          if (g.in_bounds(nr, nc) && g.get(nr, nc) == kWater) {
            g.at(r, c) = kSand;
            break;
          }
        }
      }
    }
    for (int i = 0; i < 3 * scale; ++i) grow_blob(g, rng, kStone, 140, on_grass);

    // Cave tunnels and a lava pocket inside the rock.
    auto interior_stone = [&g](int r, int c) {
      return g.get(r, c) == kStone && all_neighbors_are(g, r, c, {kStone, kPath});
    };
    for (int i = 0; i < 2 * scale; ++i) grow_blob(g, rng, kPath, 3, interior_stone);
    auto lava_ok = [&g](int r, int c) {
      return g.get(r, c) == kStone && all_neighbors_are(g, r, c, {kStone, kLava});
    };
    for (int i = 0; i < scale; ++i) grow_blob(g, rng, kLava, 4, lava_ok);

    place_veins(g, rng, kCoal, 5 * scale, 3);
    place_veins(g, rng, kIron, 4 * scale, 2);
    place_veins(g, rng, kDiamond, 2 * scale, 1);

    auto tree_spot = [&g](int r, int c) { return g.get(r, c) == kGrass; };
    for (int i = 0; i < 5 * scale; ++i) grow_blob(g, rng, kTree, 5, tree_spot);

    Cell spawn{-1, -1};
    for (int tries = 0; tries < 400; ++tries) {
      int r = rng.uniform_int(1, size - 2);
      int c = rng.uniform_int(1, size - 2);
      if (g.get(r, c) == kGrass) {
        spawn = {r, c};
        break;
      }
    }
    if (spawn.first < 0) continue;
    if (!ores_touch_stone(g)) continue;
    if (!quota_reachable(g, spawn, quota)) continue;

    CrafterMap map;
    map.size = size;
    map.grid = std::move(g.cells);
    map.spawn = spawn;
    map.seed = seed;
    return map;
  }
  throw GenerationError("crafter worldgen rejected 1000 candidate maps");
}

std::string item_name(Item item) {
  static const std::array<const char*, kItemCount> kNames = {
      "wood",          "stone",        "coal",       "iron",
      "diamond",       "wood_pickaxe", "stone_pickaxe", "iron_pickaxe",
      "wood_sword",    "stone_sword",  "iron_sword"};
  return kNames[static_cast<size_t>(item)];
}

bool passable(int material, const Inventory& inventory) {
  switch (material) {
    case kGrass:
    case kSand:
    case kPath:
      return true;
    case kTree:
      return true;  // minable bare-handed
    case kStone:
    case kCoal:
      return inventory.has(Item::wood_pickaxe);
    case kIron:
      return inventory.has(Item::stone_pickaxe);
    case kDiamond:
      return inventory.has(Item::iron_pickaxe);
    case kWater:
    case kLava:
      return false;
  }
  return false;
}

const std::array<Achievement, kAchievementCount>& achievement_order() {
  static const std::array<Achievement, kAchievementCount> kOrder = {
      Achievement::collect_wood,      Achievement::place_table,
      Achievement::make_wood_pickaxe, Achievement::make_wood_sword,
      Achievement::collect_stone,     Achievement::place_stone,
      Achievement::make_stone_pickaxe, Achievement::make_stone_sword,
      Achievement::place_furnace,     Achievement::collect_coal,
      Achievement::collect_iron,      Achievement::make_iron_pickaxe,
      Achievement::make_iron_sword,   Achievement::collect_diamond};
  return kOrder;
}

std::string achievement_name(Achievement a) {
  static const std::array<const char*, kAchievementCount> kNames = {
      "collect_wood",      "place_table",      "make_wood_pickaxe",
      "make_wood_sword",   "collect_stone",    "place_stone",
      "make_stone_pickaxe", "make_stone_sword", "place_furnace",
      "collect_coal",      "collect_iron",     "make_iron_pickaxe",
      "make_iron_sword",   "collect_diamond"};
  return kNames[static_cast<size_t>(a)];
}

const Recipe& recipe_for(Achievement a) {
  static const std::map<Achievement, Recipe> kRecipes = {
      {Achievement::place_table, {{{Item::wood, 1}}, false, false}},
      {Achievement::place_stone, {{{Item::stone, 1}}, false, false}},
      {Achievement::place_furnace, {{{Item::stone, 1}}, true, false}},
      {Achievement::make_wood_pickaxe, {{{Item::wood, 1}}, true, false}},
      {Achievement::make_wood_sword, {{{Item::wood, 1}}, true, false}},
      {Achievement::make_stone_pickaxe,
       {{{Item::wood, 1}, {Item::stone, 1}}, true, false}},
      {Achievement::make_stone_sword,
       {{{Item::wood, 1}, {Item::stone, 1}}, true, false}},
      {Achievement::make_iron_pickaxe,
       {{{Item::wood, 1}, {Item::coal, 1}, {Item::iron, 1}}, true, true}},
      {Achievement::make_iron_sword,
       {{{Item::wood, 1}, {Item::coal, 1}, {Item::iron, 1}}, true, true}},
  };
  auto it = kRecipes.find(a);
  if (it == kRecipes.end()) {
    static const Recipe kEmpty;
    return kEmpty;
  }
  return it->second;
}

json recipes_json() {
  json out = json::object();
  for (Achievement a : achievement_order()) {
    const Recipe& r = recipe_for(a);
    if (r.uses.empty() && !r.needs_table && !r.needs_furnace) continue;
    json uses = json::object();
    for (const auto& [item, n] : r.uses) uses[item_name(item)] = n;
    out[achievement_name(a)] = json{{"uses", uses},
                                    {"needs_table", r.needs_table},
                                    {"needs_furnace", r.needs_furnace}};
  }
  return out;
}

SubtaskSpec subtask_spec(Achievement a) {
  switch (a) {
    case Achievement::collect_wood: return {a, {kTree}};
    case Achievement::collect_stone: return {a, {kStone}};
    case Achievement::collect_coal: return {a, {kCoal}};
    case Achievement::collect_iron: return {a, {kIron}};
    case Achievement::collect_diamond: return {a, {kDiamond}};
    case Achievement::place_table:
    case Achievement::make_wood_pickaxe:
    case Achievement::make_wood_sword: return {a, {kTree}};
    case Achievement::place_stone:
    case Achievement::place_furnace: return {a, {kStone}};
    case Achievement::make_stone_pickaxe:
    case Achievement::make_stone_sword: return {a, {kTree, kStone}};
    case Achievement::make_iron_pickaxe:
    case Achievement::make_iron_sword: return {a, {kTree, kCoal, kIron}};
  }
  return {a, {}};
}

bool GameState::done(Achievement a) const {
  return std::find(achievements.begin(), achievements.end(), a) != achievements.end();
}

namespace {

int overlay_material(const GameState& state, Cell cell, int revealed_value) {
  auto placed = state.placed.find(cell);
  if (placed != state.placed.end()) {
    return placed->second == Structure::stone_block ? kStone : -1;  // -1 = solid
  }
  auto mined = state.mined.find(cell);
  if (mined != state.mined.end()) return mined->second;
  return revealed_value;
}

}  // namespace

std::vector<VariableId> frontier_candidates(const WorldModel& world,
                                            const GameState& state) {
  const int size = world.cols();
  auto cell_walkable = [&](int r, int c) {
    VariableId u{Domain::crafter, static_cast<uint32_t>(r * size + c)};
    auto it = world.revealed().find(u);
    if (it == world.revealed().end()) return false;
    int mat = overlay_material(state, {r, c}, it->second);
    return mat >= 0 && passable(mat, state.inventory);
  };

  std::set<uint32_t> frontier;
  std::vector<uint8_t> seen(world.var_count(), 0);
  std::deque<Cell> queue;
  if (cell_walkable(state.pos.first, state.pos.second)) {
    queue.push_back(state.pos);
    seen[static_cast<size_t>(state.pos.first * size + state.pos.second)] = 1;
  }
  while (!queue.empty()) {
    auto [r, c] = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      int nr = r + kStepR[k], nc = c + kStepC[k];
      if (nr < 0 || nr >= size || nc < 0 || nc >= size) continue;
      uint32_t ni = static_cast<uint32_t>(nr * size + nc);
      if (seen[ni]) continue;
      VariableId u{Domain::crafter, ni};
      if (!world.is_revealed(u)) {
        frontier.insert(ni);
        continue;
      }
      if (!cell_walkable(nr, nc)) continue;
      seen[ni] = 1;
      queue.push_back({nr, nc});
    }
  }
  std::vector<VariableId> out;
  out.reserve(frontier.size());
  for (uint32_t i : frontier) out.push_back({Domain::crafter, i});
  return out;
}

const std::vector<MacroPattern>& oracle_cross_macros() {
  static const std::vector<MacroPattern> kMacros = [] {
    std::vector<MacroPattern> macros;
    auto cross = [&macros](int center, std::array<int, 4> n) {
      macros.push_back(MacroPattern{CrossMacro{center, n}});
    };
    auto rotations = [&cross](int center, int odd, int rest) {
      for (int pos = 0; pos < 4; ++pos) {
        std::array<int, 4> n{rest, rest, rest, rest};
        n[static_cast<size_t>(pos)] = odd;
        cross(center, n);
      }
    };
    cross(kGrass, {kGrass, kGrass, kGrass, kGrass});
    cross(kWater, {kWater, kWater, kWater, kWater});
    cross(kSand, {kSand, kSand, kSand, kSand});
    cross(kTree, {kTree, kTree, kTree, kTree});
    rotations(kTree, kTree, kGrass);
    cross(kStone, {kStone, kStone, kStone, kStone});
    cross(kCoal, {kStone, kStone, kStone, kStone});
    cross(kIron, {kStone, kStone, kStone, kStone});
    cross(kDiamond, {kStone, kStone, kStone, kStone});
    rotations(kCoal, kCoal, kStone);
    rotations(kIron, kIron, kStone);
    rotations(kDiamond, kDiamond, kStone);
    return macros;
  }();
  return kMacros;
}

// ---------------------------------------------------------------------------
// Episode runner
// ---------------------------------------------------------------------------

CrafterEpisode::CrafterEpisode(const CrafterMap& map, Options options,
                               TokenLedger& ledger)
    : map_(map),
      options_(options),
      ledger_(ledger),
      truth_(map.truth()),
      world_(truth_.empty_world()),
      revealed_(static_cast<size_t>(map.size * map.size), 0) {
  state_.pos = map.spawn;
  do_reveal({Domain::crafter,
             static_cast<uint32_t>(map.spawn.first * map.size + map.spawn.second)});
}

int CrafterEpisode::effective_material(int r, int c) const {
  return overlay_material(state_, {r, c},
                          map_.grid[static_cast<size_t>(r * map_.size + c)]);
}

bool CrafterEpisode::walkable(int r, int c) const {
  if (!revealed_[static_cast<size_t>(r * map_.size + c)]) return false;
  int mat = effective_material(r, c);
  return mat >= 0 && passable(mat, state_.inventory);
}

void CrafterEpisode::step_guard() {
  if (++action_count_ > options_.max_actions) {
    throw std::runtime_error("crafter episode exceeded the action cap");
  }
}

void CrafterEpisode::record_action(const std::string& action) {
  step_guard();
  if (options_.record_trace) {
    trace_.push_back({action_count_, "action", json{{"name", action}}});
  }
}

void CrafterEpisode::do_reveal(VariableId u) {
  SymbolicFact fact = reveal(truth_, u, world_, ledger_);
  int idx = static_cast<int>(u.index);
  revealed_[u.index] = 1;
  Cell cell{idx / map_.size, idx % map_.size};
  targets_by_material_[fact.value].insert(cell);
  // A new fact can change the scores of candidates it neighbors.
  for (int k = 0; k < 4; ++k) {
    int nr = cell.first + kStepR[k], nc = cell.second + kStepC[k];
    if (nr < 0 || nr >= map_.size || nc < 0 || nc >= map_.size) continue;
    score_cache_.erase(static_cast<uint32_t>(nr * map_.size + nc));
  }
  if (options_.record_trace) {
    trace_.push_back({action_count_,
                      "reveal",
                      json{{"var", u.index},
                           {"value", value_name(Domain::crafter, fact.value)}}});
  }
}

std::vector<uint32_t> CrafterEpisode::frontier() const {
  std::set<uint32_t> frontier;
  std::vector<uint8_t> seen(static_cast<size_t>(map_.size * map_.size), 0);
  std::deque<Cell> queue{state_.pos};
  seen[static_cast<size_t>(state_.pos.first * map_.size + state_.pos.second)] = 1;
  while (!queue.empty()) {
    auto [r, c] = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      int nr = r + kStepR[k], nc = c + kStepC[k];
      if (nr < 0 || nr >= map_.size || nc < 0 || nc >= map_.size) continue;
      uint32_t ni = static_cast<uint32_t>(nr * map_.size + nc);
      if (seen[ni]) continue;
      if (!revealed_[ni]) {
        frontier.insert(ni);
        continue;
      }
      if (!walkable(nr, nc)) continue;
      seen[ni] = 1;
      queue.push_back({nr, nc});
    }
  }
  return {frontier.begin(), frontier.end()};
}

void CrafterEpisode::explore_step(const std::vector<int>& targets) {
  std::vector<uint32_t> cands = frontier();
  if (cands.empty()) {
    throw ExplorationExhaustedError("frontier is empty with the subtask unsatisfied");
  }

  uint32_t pick = cands.front();
  if (options_.rerank && options_.library != nullptr && !targets.empty()) {
    if (targets != cached_targets_) {
      score_cache_.clear();
      cached_targets_ = targets;
    }
    RerankSpec spec{targets};
    double best = -1.0;
    for (uint32_t u : cands) {
      auto it = score_cache_.find(u);
      double s;
      if (it != score_cache_.end()) {
        s = it->second;
      } else {
        s = rerank_score({Domain::crafter, u}, world_, *options_.library, spec);
        score_cache_[u] = s;
      }
      if (s > best) {
        best = s;
        pick = u;
      }
    }
  }
  do_reveal({Domain::crafter, pick});

  if (options_.tau < 1.0 && options_.library != nullptr) {
    std::vector<VariableId> vars;
    for (uint32_t u : cands) {
      if (u != pick) vars.push_back({Domain::crafter, u});
    }
    auto added = impute_closure(world_, *options_.library, {options_.tau}, vars);
    imputation_count_ += static_cast<int>(added.size());
    for (const SymbolicFact& f : added) {
      int idx = static_cast<int>(f.var.index);
      for (int k = 0; k < 4; ++k) {
        int nr = idx / map_.size + kStepR[k], nc = idx % map_.size + kStepC[k];
        if (nr < 0 || nr >= map_.size || nc < 0 || nc >= map_.size) continue;
        score_cache_.erase(static_cast<uint32_t>(nr * map_.size + nc));
      }
      if (options_.record_trace) {
        trace_.push_back({action_count_, "impute", json{{"var", f.var.index}}});
      }
    }
  }
}

namespace {

struct BfsResult {
  std::vector<int> dist;
  std::vector<int> parent;
};

// BFS over currently walkable cells from the player.
BfsResult grid_bfs(int size, Cell pos,
                   const std::function<bool(int, int)>& walkable) {
  BfsResult out;
  out.dist.assign(static_cast<size_t>(size * size), -1);
  out.parent.assign(static_cast<size_t>(size * size), -1);
  std::deque<Cell> queue{pos};
  out.dist[static_cast<size_t>(pos.first * size + pos.second)] = 0;
  while (!queue.empty()) {
    auto [r, c] = queue.front();
    queue.pop_front();
    int d = out.dist[static_cast<size_t>(r * size + c)];
    for (int k = 0; k < 4; ++k) {
      int nr = r + kStepR[k], nc = c + kStepC[k];
      if (nr < 0 || nr >= size || nc < 0 || nc >= size) continue;
      size_t ni = static_cast<size_t>(nr * size + nc);
      if (out.dist[ni] >= 0 || !walkable(nr, nc)) continue;
      out.dist[ni] = d + 1;
      out.parent[ni] = r * size + c;
      queue.push_back({nr, nc});
    }
  }
  return out;
}

}  // namespace

void CrafterEpisode::move_to(Cell dest, const std::vector<Cell>& path) {
  for (size_t i = 1; i < path.size(); ++i) {
    Cell next = path[i];
    int dr = next.first - state_.pos.first;
    int dc = next.second - state_.pos.second;
    const char* dir = dr == -1 ? "move_up"
                      : dr == 1 ? "move_down"
                      : dc == -1 ? "move_left"
                                 : "move_right";
    int mat = effective_material(next.first, next.second);
    if (mat != kGrass && mat != kSand && mat != kPath) {
      // Blocked: the move only turns the player, then "do" mines the cell.
      record_action(dir);
      record_action("do");
      mine_cell(next);
    }
    record_action(dir);
    state_.pos = next;
    state_.facing = dir[5];  // u/d/l/r
  }
  (void)dest;
}

void CrafterEpisode::mine_cell(Cell cell) {
  int mat = effective_material(cell.first, cell.second);
  Item yield;
  int replacement = kPath;
  switch (mat) {
    case kTree:
      yield = Item::wood;
      replacement = kGrass;
      break;
    case kStone: yield = Item::stone; break;
    case kCoal: yield = Item::coal; break;
    case kIron: yield = Item::iron; break;
    case kDiamond: yield = Item::diamond; break;
    default:
      throw std::logic_error("mining a non-resource cell");
  }
  if (state_.placed.count(cell)) {
    state_.placed.erase(cell);  // re-mining a placed stone block
  }
  state_.inventory.add(yield);
  state_.total_collected[static_cast<size_t>(yield)]++;
  state_.mined[cell] = replacement;
  int original = map_.grid[static_cast<size_t>(cell.first * map_.size + cell.second)];
  targets_by_material_[original].erase(cell);
}

std::optional<Cell> CrafterEpisode::nearest_target(const std::vector<int>& materials,
                                                   std::vector<Cell>* path_out) {
  BfsResult bfs = grid_bfs(map_.size, state_.pos,
                             [this](int r, int c) { return walkable(r, c); });
  std::optional<Cell> best;
  int best_dist = -1;
  Cell best_stand{-1, -1};
  for (int m : materials) {
    auto it = targets_by_material_.find(m);
    if (it == targets_by_material_.end()) continue;
    for (const Cell& t : it->second) {
      if (effective_material(t.first, t.second) != m) continue;
      for (int k = 0; k < 4; ++k) {
        int nr = t.first + kStepR[k], nc = t.second + kStepC[k];
        if (nr < 0 || nr >= map_.size || nc < 0 || nc >= map_.size) continue;
        int d = bfs.dist[static_cast<size_t>(nr * map_.size + nc)];
        if (d < 0) continue;
        if (!best || d < best_dist || (d == best_dist && t < *best)) {
          best = t;
          best_dist = d;
          best_stand = {nr, nc};
        }
      }
    }
  }
  if (!best) return std::nullopt;
  if (path_out) {
    path_out->clear();
    int at = best_stand.first * map_.size + best_stand.second;
    std::vector<Cell> rev;
    while (at != -1) {
      rev.push_back({at / map_.size, at % map_.size});
      at = bfs.parent[static_cast<size_t>(at)];
    }
    path_out->assign(rev.rbegin(), rev.rend());
  }
  return best;
}

void CrafterEpisode::acquire(int material) {
  std::vector<Cell> path;
  auto target = nearest_target({material}, &path);
  if (!target) {
    explore_step({material});
    return;
  }
  move_to(path.empty() ? state_.pos : path.back(), path);
  if (effective_material(target->first, target->second) != material) {
    return;  // mined en route; caller rechecks
  }
  int dr = target->first - state_.pos.first;
  int dc = target->second - state_.pos.second;
  const char* dir = dr == -1 ? "move_up"
                    : dr == 1 ? "move_down"
                    : dc == -1 ? "move_left"
                               : "move_right";
  record_action(dir);  // face the target (move into a blocked cell turns)
  record_action("do");
  mine_cell(*target);
}

void CrafterEpisode::ensure_item(Item item, int n) {
  static const std::map<Item, int> kSources = {{Item::wood, kTree},
                                               {Item::stone, kStone},
                                               {Item::coal, kCoal},
                                               {Item::iron, kIron},
                                               {Item::diamond, kDiamond}};
  auto src = kSources.find(item);
  if (src == kSources.end()) {
    throw std::logic_error("ensure_item on a crafted item");
  }
  if (!passable(src->second, state_.inventory) && src->second != kTree) {
    throw std::logic_error("recipe-precondition violation: tool tier too low");
  }
  while (state_.inventory.count(item) < n) {
    step_guard();
    acquire(src->second);
  }
}

void CrafterEpisode::place_structure(Structure s, Achievement a) {
  const Recipe& recipe = recipe_for(a);
  for (const auto& [item, n] : recipe.uses) ensure_item(item, n);
  if (recipe.needs_table) {
    if (!state_.table_pos) throw std::logic_error("placement needs a table first");
    navigate_near(*state_.table_pos, std::nullopt);
  }

  auto placeable = [this](int r, int c) {
    if (!revealed_[static_cast<size_t>(r * map_.size + c)]) return false;
    if (Cell{r, c} == state_.pos) return false;
    int mat = effective_material(r, c);
    return (mat == kGrass || mat == kSand || mat == kPath) &&
           !state_.placed.count({r, c});
  };

  BfsResult bfs = grid_bfs(map_.size, state_.pos,
                             [this](int r, int c) { return walkable(r, c); });

  // Candidate (stand, site) pairs ranked by blocking risk then distance.
  struct Candidate {
    int risk;
    int dist;
    Cell stand;
    Cell site;
  };
  std::vector<Candidate> candidates;
  for (int r = 0; r < map_.size; ++r) {
    for (int c = 0; c < map_.size; ++c) {
      int d = bfs.dist[static_cast<size_t>(r * map_.size + c)];
      if (d < 0) continue;
      Cell stand{r, c};
      if (recipe.needs_table && cheb(stand, *state_.table_pos) > 1) continue;
      for (int k = 0; k < 4; ++k) {
        int nr = r + kStepR[k], nc = c + kStepC[k];
        if (nr < 0 || nr >= map_.size || nc < 0 || nc >= map_.size) continue;
        if (!placeable(nr, nc)) continue;
        candidates.push_back({-1, d, stand, {nr, nc}});
      }
    }
  }
  if (candidates.empty()) {
    throw std::runtime_error("no placeable cell reachable for structure");
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a1, const Candidate& b1) {
                     if (a1.dist != b1.dist) return a1.dist < b1.dist;
                     if (a1.site != b1.site) return a1.site < b1.site;
                     return a1.stand < b1.stand;
                   });

  // Prefer sites whose removal keeps every walkable cell reachable and that
  // do not border unknown terrain (they may be someone's only doorway).
  auto site_risk = [this, &bfs](const Candidate& cand) {
    bool unknown_neighbor = false;
    for (int k = 0; k < 4; ++k) {
      int nr = cand.site.first + kStepR[k], nc = cand.site.second + kStepC[k];
      if (nr < 0 || nr >= map_.size || nc < 0 || nc >= map_.size) continue;
      if (!revealed_[static_cast<size_t>(nr * map_.size + nc)]) unknown_neighbor = true;
    }
    int reachable_now = 0;
    for (int d : bfs.dist) reachable_now += d >= 0 ? 1 : 0;
    BfsResult excl = grid_bfs(map_.size, state_.pos,
                                [this, &cand](int r, int c) {
                                  if (Cell{r, c} == cand.site) return false;
                                  return walkable(r, c);
                                });
    int reachable_excl = 0;
    for (int d : excl.dist) reachable_excl += d >= 0 ? 1 : 0;
    bool articulation = reachable_excl < reachable_now - 1;
    if (!articulation && !unknown_neighbor) return 0;
    if (!articulation) return 1;
    return 2;
  };

  const Candidate* chosen = nullptr;
  for (int accepted_risk = 0; accepted_risk <= 2 && !chosen; ++accepted_risk) {
    for (const Candidate& cand : candidates) {
      if (site_risk(cand) <= accepted_risk) {
        chosen = &cand;
        break;
      }
    }
  }

  std::vector<Cell> path;
  int at = chosen->stand.first * map_.size + chosen->stand.second;
  std::vector<Cell> rev;
  while (at != -1) {
    rev.push_back({at / map_.size, at % map_.size});
    at = bfs.parent[static_cast<size_t>(at)];
  }
  path.assign(rev.rbegin(), rev.rend());
  move_to(chosen->stand, path);

  for (const auto& [item, n] : recipe.uses) {
    if (!state_.inventory.spend(item, n)) {
      throw std::logic_error("recipe-precondition violation: missing materials");
    }
  }
  const char* action = s == Structure::table     ? "place_table"
                       : s == Structure::furnace ? "place_furnace"
                                                 : "place_stone";
  record_action(action);
  state_.placed[chosen->site] = s;
  if (s == Structure::table) state_.table_pos = chosen->site;
  if (s == Structure::furnace) state_.furnace_pos = chosen->site;
}

void CrafterEpisode::navigate_near(Cell anchor, std::optional<Cell> second_anchor) {
  auto qualifies = [&](Cell cell) {
    if (cheb(cell, anchor) > 1) return false;
    if (second_anchor && cheb(cell, *second_anchor) > 1) return false;
    return true;
  };
  if (qualifies(state_.pos)) return;

  BfsResult bfs = grid_bfs(map_.size, state_.pos,
                             [this](int r, int c) { return walkable(r, c); });
  Cell best{-1, -1};
  int best_dist = -1;
  for (int r = 0; r < map_.size; ++r) {
    for (int c = 0; c < map_.size; ++c) {
      int d = bfs.dist[static_cast<size_t>(r * map_.size + c)];
      if (d < 0 || !qualifies({r, c})) continue;
      if (best_dist < 0 || d < best_dist) {
        best = {r, c};
        best_dist = d;
      }
    }
  }
  if (best_dist < 0) {
    throw std::runtime_error("crafting spot unreachable");
  }
  std::vector<Cell> rev;
  int at = best.first * map_.size + best.second;
  while (at != -1) {
    rev.push_back({at / map_.size, at % map_.size});
    at = bfs.parent[static_cast<size_t>(at)];
  }
  std::vector<Cell> path(rev.rbegin(), rev.rend());
  move_to(best, path);
}

void CrafterEpisode::craft(Achievement a) {
  const Recipe& recipe = recipe_for(a);
  for (const auto& [item, n] : recipe.uses) ensure_item(item, n);
  if (recipe.needs_table && !state_.table_pos) {
    throw std::logic_error("recipe-precondition violation: no table placed");
  }
  if (recipe.needs_furnace && !state_.furnace_pos) {
    throw std::logic_error("recipe-precondition violation: no furnace placed");
  }
  if (recipe.needs_table) {
    navigate_near(*state_.table_pos,
                  recipe.needs_furnace ? state_.furnace_pos : std::nullopt);
  }
  for (const auto& [item, n] : recipe.uses) {
    if (!state_.inventory.spend(item, n)) {
      throw std::logic_error("recipe-precondition violation: missing materials");
    }
  }
  static const std::map<Achievement, std::pair<const char*, Item>> kCrafts = {
      {Achievement::make_wood_pickaxe, {"make_wood_pickaxe", Item::wood_pickaxe}},
      {Achievement::make_wood_sword, {"make_wood_sword", Item::wood_sword}},
      {Achievement::make_stone_pickaxe, {"make_stone_pickaxe", Item::stone_pickaxe}},
      {Achievement::make_stone_sword, {"make_stone_sword", Item::stone_sword}},
      {Achievement::make_iron_pickaxe, {"make_iron_pickaxe", Item::iron_pickaxe}},
      {Achievement::make_iron_sword, {"make_iron_sword", Item::iron_sword}},
  };
  const auto& [action, item] = kCrafts.at(a);
  record_action(action);
  state_.inventory.add(item);
}

void CrafterEpisode::run_subtask(Achievement a) {
  // Prior achievements in the fixed order must already be complete.
  for (Achievement prior : achievement_order()) {
    if (prior == a) break;
    if (!state_.done(prior)) {
      throw std::logic_error("subtask run out of order");
    }
  }

  switch (a) {
    case Achievement::collect_wood:
    case Achievement::collect_stone:
    case Achievement::collect_coal:
    case Achievement::collect_iron:
    case Achievement::collect_diamond: {
      static const std::map<Achievement, Item> kCollect = {
          {Achievement::collect_wood, Item::wood},
          {Achievement::collect_stone, Item::stone},
          {Achievement::collect_coal, Item::coal},
          {Achievement::collect_iron, Item::iron},
          {Achievement::collect_diamond, Item::diamond}};
      Item item = kCollect.at(a);
      int src = subtask_spec(a).target_materials[0];
      while (state_.total_collected[static_cast<size_t>(item)] == 0) {
        step_guard();
        acquire(src);
      }
      break;
    }
    case Achievement::place_table:
      place_structure(Structure::table, a);
      break;
    case Achievement::place_stone:
      place_structure(Structure::stone_block, a);
      break;
    case Achievement::place_furnace:
      place_structure(Structure::furnace, a);
      break;
    default:
      craft(a);
      break;
  }
  state_.achievements.push_back(a);
  if (options_.record_trace) {
    trace_.push_back({action_count_, "achievement", json{{"name", achievement_name(a)}}});
  }
}

void CrafterEpisode::run_all() {
  for (Achievement a : achievement_order()) run_subtask(a);
}

}  // namespace scry::crafter
