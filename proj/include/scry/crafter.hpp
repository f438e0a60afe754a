#pragma once
// Deterministic crafting environment: procedural terrain with resource
// quotas and tiered reachability, tool-dependent passability, the
// frontier-expansion grounding controller, and a subtask planner-executor
// that completes the fixed 14-achievement order with optional reveal
// reranking.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scry/pattern.hpp"
#include "scry/world.hpp"

namespace scry::crafter {

// Indices into the crafter value domain.
enum Material : int {
  kGrass = 0,
  kSand = 1,
  kWater = 2,
  kTree = 3,
  kStone = 4,
  kCoal = 5,
  kIron = 6,
  kDiamond = 7,
  kLava = 8,
  kPath = 9,
};

struct Quota {
  int trees = 9;
  int stones = 8;
  int coal = 3;
  int iron = 3;
  int diamond = 1;
};

struct CrafterMap {
  int size = 64;
  std::vector<int> grid;
  std::pair<int, int> spawn{0, 0};
  uint64_t seed = 0;

  GroundTruthInstance truth() const;
  json to_json() const;
  static CrafterMap from_json(const json& j);
};

// Clustered biomes (lakes with sand shores, stone regions holding ore veins,
// tree clusters on grass) rejected until the quota is reachable from spawn
// through the tool tier that unlocks each resource. Deterministic per seed.
CrafterMap generate_world(uint64_t seed, int size, const Quota& quota);

enum class Item : int {
  wood = 0,
  stone,
  coal,
  iron,
  diamond,
  wood_pickaxe,
  stone_pickaxe,
  iron_pickaxe,
  wood_sword,
  stone_sword,
  iron_sword,
};
inline constexpr int kItemCount = 11;

std::string item_name(Item item);

struct Inventory {
  std::array<int, kItemCount> counts{};

  int count(Item item) const { return counts[static_cast<size_t>(item)]; }
  void add(Item item, int n = 1) { counts[static_cast<size_t>(item)] += n; }
  bool spend(Item item, int n) {
    if (count(item) < n) return false;
    counts[static_cast<size_t>(item)] -= n;
    return true;
  }
  bool has(Item item) const { return count(item) > 0; }
};

// A cell you can walk through, directly or after mining it with the tools
// in hand.
bool passable(int material, const Inventory& inventory);

enum class Structure { table, furnace, stone_block };

enum class Achievement : int {
  collect_wood = 0,
  place_table,
  make_wood_pickaxe,
  make_wood_sword,
  collect_stone,
  place_stone,
  make_stone_pickaxe,
  make_stone_sword,
  place_furnace,
  collect_coal,
  collect_iron,
  make_iron_pickaxe,
  make_iron_sword,
  collect_diamond,
};
inline constexpr int kAchievementCount = 14;

const std::array<Achievement, kAchievementCount>& achievement_order();
std::string achievement_name(Achievement a);

struct Recipe {
  std::vector<std::pair<Item, int>> uses;
  bool needs_table = false;
  bool needs_furnace = false;
};

// Pinned crafting/placement costs for the place_*/make_* achievements.
const Recipe& recipe_for(Achievement a);
json recipes_json();

struct SubtaskSpec {
  Achievement id;
  std::vector<int> target_materials;  // Z: resource types the subtask hunts
};
SubtaskSpec subtask_spec(Achievement a);

struct GameState {
  std::pair<int, int> pos{0, 0};
  char facing = 'D';
  Inventory inventory;
  std::map<std::pair<int, int>, Structure> placed;
  std::map<std::pair<int, int>, int> mined;  // cell -> replacement material
  std::vector<Achievement> achievements;
  std::array<int, kItemCount> total_collected{};
  std::optional<std::pair<int, int>> table_pos;
  std::optional<std::pair<int, int>> furnace_pos;

  bool done(Achievement a) const;
};

// Unknown cells 4-adjacent to a revealed-passable cell connected to the
// player, in row-major order. Reference implementation of the grounding
// controller; the episode runner keeps an equivalent dense version.
std::vector<VariableId> frontier_candidates(const WorldModel& world,
                                            const GameState& state);

// Fixed cross macros matching the generator's regularities; used as the
// oracle proposer's macro set.
const std::vector<MacroPattern>& oracle_cross_macros();

struct TraceEvent {
  int step = 0;
  std::string kind;  // "action", "reveal", "impute", "achievement"
  json detail;
};

class CrafterEpisode {
 public:
  struct Options {
    const PatternLibrary* library = nullptr;
    bool rerank = false;
    double tau = 1.0;  // < 1 enables imputation over frontier candidates
    int max_actions = 1000000;
    bool record_trace = false;
  };

  CrafterEpisode(const CrafterMap& map, Options options, TokenLedger& ledger);

  // Runs one achievement to completion (explores, gathers, crafts).
  // Throws ExplorationExhaustedError when the frontier empties first.
  void run_subtask(Achievement a);
  // All 14 achievements in order.
  void run_all();

  const WorldModel& world() const { return world_; }
  const GameState& state() const { return state_; }
  const std::vector<TraceEvent>& trace() const { return trace_; }
  int imputations() const { return imputation_count_; }

 private:
  bool walkable(int r, int c) const;
  int effective_material(int r, int c) const;
  void do_reveal(VariableId u);
  std::vector<uint32_t> frontier() const;
  void explore_step(const std::vector<int>& targets);
  void record_action(const std::string& action);
  void move_to(std::pair<int, int> dest,
               const std::vector<std::pair<int, int>>& path);
  void mine_cell(std::pair<int, int> cell);
  std::optional<std::pair<int, int>> nearest_target(const std::vector<int>& materials,
                                                    std::vector<std::pair<int, int>>* path_out);
  void ensure_item(Item item, int n);
  void acquire(int material);
  void place_structure(Structure s, Achievement a);
  void craft(Achievement a);
  void navigate_near(std::pair<int, int> anchor,
                     std::optional<std::pair<int, int>> second_anchor);
  void step_guard();

  const CrafterMap& map_;
  Options options_;
  TokenLedger& ledger_;
  GroundTruthInstance truth_;
  WorldModel world_;
  GameState state_;
  std::vector<uint8_t> revealed_;
  std::vector<TraceEvent> trace_;
  std::map<int, std::set<std::pair<int, int>>> targets_by_material_;
  std::map<uint32_t, double> score_cache_;
  std::vector<int> cached_targets_;
  int action_count_ = 0;
  int imputation_count_ = 0;
};

}  // namespace scry::crafter
