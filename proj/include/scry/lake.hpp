#pragma once
// FrozenLake-style shortest-path environment: template-stamped map
// generation with a minimum-path constraint, the lazy shortest-path
// grounding controller (optimistic planning over the merged world model),
// and exact plan execution against the hidden map.

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "scry/pattern.hpp"
#include "scry/world.hpp"

namespace scry::lake {

// One 4x4 block motif over {SAFE, HOLE}, row-major.
struct LakeTemplate {
  std::array<int, 16> cells{};

  bool operator==(const LakeTemplate&) const = default;
};

// The six block motifs the generator stamps: corridor, turn, junction,
// open, diagonal, dead-end. The oracle proposer shares this exact set.
const std::vector<LakeTemplate>& default_templates();

std::vector<MacroPattern> template_macros(const std::vector<LakeTemplate>& templates);

// The original templates plus, for each, a corrupted twin with `flips`
// cells inverted: distractor experts for reweighting studies.
std::vector<LakeTemplate> salted_templates(const std::vector<LakeTemplate>& templates,
                                           int flips, uint64_t seed);

using Cell = std::pair<int, int>;

struct LakeGeometry {
  int size = 16;
  Cell start{0, 0};
  Cell goal{0, 0};
};

struct LakeInstance {
  int size = 16;
  std::vector<int> grid;  // row-major SAFE/HOLE values
  Cell start{0, 0};
  Cell goal{0, 0};
  uint64_t seed = 0;
  std::vector<int> template_ids;  // stamped template per aligned block

  LakeGeometry geometry() const { return {size, start, goal}; }
  GroundTruthInstance truth() const;

  json to_json() const;
  static LakeInstance from_json(const json& j);
};

enum class GenMethod { reject, allpairs };

// Stamps a uniformly chosen template onto each aligned 4x4 block, then
// draws (start, goal) until the true shortest path reaches min_path.
// `reject` resamples the whole map per failed draw; `allpairs` computes
// all-pairs distances once per map and samples a qualifying pair.
LakeInstance generate_map(const std::vector<LakeTemplate>& templates, int size,
                          int min_path, uint64_t seed, GenMethod method);

struct PathPlan {
  std::vector<Cell> cells;  // start..goal, 4-adjacent steps

  int length() const { return static_cast<int>(cells.size()) - 1; }
  std::vector<char> moves() const;  // 'U','D','L','R'
};

struct LazyStep {
  bool done = false;
  PathPlan path;      // the optimistic shortest path used
  VariableId next{};  // first unknown cell along it (when !done)
};

// Plans optimistically on the merged view (unknown cells passable, merged
// HOLE cells blocked; start/goal are known-safe by construction) with
// smaller-(row,col) tie-breaking. Done when the path crosses no unknown
// cell; that plan is certifiably optimal.
LazyStep lazysp_step(const WorldModel& world, const LakeGeometry& geom);

struct ExecResult {
  bool success = false;
  std::string reason;  // "hole_hit" or "suboptimal" on failure
};

// Success iff every plan cell is truly SAFE and the plan length equals the
// true shortest path length.
ExecResult execute_plan(const PathPlan& plan, const GroundTruthInstance& truth);

// BFS over the true grid; -1 when no path exists.
int true_shortest_path(const GroundTruthInstance& truth);

// Unknown cells in the aligned 4x4 blocks the path touches: the imputation
// candidate set used by the episode loop.
std::vector<VariableId> path_block_candidates(const WorldModel& world,
                                              const PathPlan& path);

}  // namespace scry::lake
