#include "scry/lake.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "scry/rng.hpp"

namespace scry::lake {

namespace {

constexpr int kSafe = 0;
constexpr int kHole = 1;
constexpr int kMaxRejects = 10000;

LakeTemplate from_rows(const std::array<const char*, 4>& rows) {
  LakeTemplate t;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      t.cells[static_cast<size_t>(r * 4 + c)] = rows[static_cast<size_t>(r)][c] == 'S' ? kSafe : kHole;
    }
  }
  return t;
}

}  // namespace

const std::vector<LakeTemplate>& default_templates() {
  static const std::vector<LakeTemplate> kTemplates = {
      // corridor
      from_rows({"HHHH",
                 "SSSS",
                 "SSSS",
                 "HHHH"}),
      // turn
      from_rows({"HHSH",
                 "HHSH",
                 "SSSS",
                 "HHHH"}),
      // junction
      from_rows({"HHSH",
                 "SSSS",
                 "HHSH",
                 "HHSH"}),
      // open
      from_rows({"SSSS",
                 "SSSS",
                 "SSSS",
                 "SHHS"}),
      // diagonal
      from_rows({"SSHH",
                 "SSSH",
                 "HSSS",
                 "HHSS"}),
      // dead-end
      from_rows({"SSSS",
                 "SHHH",
                 "SSSH",
                 "HHSH"}),
  };
  return kTemplates;
}

std::vector<MacroPattern> template_macros(const std::vector<LakeTemplate>& templates) {
  std::vector<MacroPattern> macros;
  macros.reserve(templates.size());
  for (const LakeTemplate& t : templates) {
    macros.push_back(MacroPattern{GridBlockMacro{t.cells}});
  }
  return macros;
}

std::vector<LakeTemplate> salted_templates(const std::vector<LakeTemplate>& templates,
                                           int flips, uint64_t seed) {
  Rng rng(seed);
  std::vector<LakeTemplate> out = templates;
  for (const LakeTemplate& t : templates) {
    LakeTemplate twin = t;
    auto picks = rng.sample_indices(16, static_cast<size_t>(flips));
    for (size_t i : picks) twin.cells[i] = twin.cells[i] == kSafe ? kHole : kSafe;
    if (std::find(out.begin(), out.end(), twin) == out.end()) out.push_back(twin);
  }
  return out;
}

GroundTruthInstance LakeInstance::truth() const {
  GroundTruthInstance t;
  t.domain = Domain::lake;
  t.rows = size;
  t.cols = size;
  t.assignment = grid;
  t.start = start;
  t.goal = goal;
  return t;
}

json LakeInstance::to_json() const {
  json rows = json::array();
  for (int r = 0; r < size; ++r) {
    json row = json::array();
    for (int c = 0; c < size; ++c) {
      row.push_back(value_name(Domain::lake, grid[static_cast<size_t>(r * size + c)]));
    }
    rows.push_back(row);
  }
  return json{{"grid", rows},
              {"start", json::array({start.first, start.second})},
              {"goal", json::array({goal.first, goal.second})},
              {"seed", seed},
              {"template_ids", template_ids}};
}

LakeInstance LakeInstance::from_json(const json& j) {
  LakeInstance m;
  const json& rows = j.at("grid");
  m.size = static_cast<int>(rows.size());
  for (const auto& row : rows) {
    for (const auto& cell : row) {
      m.grid.push_back(*value_index(Domain::lake, cell.get<std::string>()));
    }
  }
  m.start = {j.at("start")[0].get<int>(), j.at("start")[1].get<int>()};
  m.goal = {j.at("goal")[0].get<int>(), j.at("goal")[1].get<int>()};
  m.seed = j.at("seed").get<uint64_t>();
  m.template_ids = j.at("template_ids").get<std::vector<int>>();
  return m;
}

namespace {

// Plain BFS distance over SAFE cells.
int bfs_distance(const std::vector<int>& grid, int size, Cell start, Cell goal) {
  if (grid[static_cast<size_t>(start.first * size + start.second)] != kSafe ||
      grid[static_cast<size_t>(goal.first * size + goal.second)] != kSafe) {
    return -1;
  }
  std::vector<int> dist(static_cast<size_t>(size * size), -1);
  std::deque<Cell> queue{start};
  dist[static_cast<size_t>(start.first * size + start.second)] = 0;
  while (!queue.empty()) {
    auto [r, c] = queue.front();
    queue.pop_front();
    int d = dist[static_cast<size_t>(r * size + c)];
    if (Cell{r, c} == goal) return d;
    static constexpr int dr[4] = {-1, 0, 0, 1};
    static constexpr int dc[4] = {0, -1, 1, 0};
    for (int k = 0; k < 4; ++k) {
      int nr = r + dr[k], nc = c + dc[k];
      if (nr < 0 || nr >= size || nc < 0 || nc >= size) continue;
      size_t ni = static_cast<size_t>(nr * size + nc);
      if (grid[ni] != kSafe || dist[ni] >= 0) continue;
      dist[ni] = d + 1;
      queue.push_back({nr, nc});
    }
  }
  return -1;
}

std::vector<int> bfs_all_distances(const std::vector<int>& grid, int size, Cell start) {
  std::vector<int> dist(static_cast<size_t>(size * size), -1);
  if (grid[static_cast<size_t>(start.first * size + start.second)] != kSafe) return dist;
  std::deque<Cell> queue{start};
  dist[static_cast<size_t>(start.first * size + start.second)] = 0;
  while (!queue.empty()) {
    auto [r, c] = queue.front();
    queue.pop_front();
    int d = dist[static_cast<size_t>(r * size + c)];
    static constexpr int dr[4] = {-1, 0, 0, 1};
    static constexpr int dc[4] = {0, -1, 1, 0};
    for (int k = 0; k < 4; ++k) {
      int nr = r + dr[k], nc = c + dc[k];
      if (nr < 0 || nr >= size || nc < 0 || nc >= size) continue;
      size_t ni = static_cast<size_t>(nr * size + nc);
      if (grid[ni] != kSafe || dist[ni] >= 0) continue;
      dist[ni] = d + 1;
      queue.push_back({nr, nc});
    }
  }
  return dist;
}

std::vector<int> stamp_map(const std::vector<LakeTemplate>& templates, int size,
                           Rng& rng, std::vector<int>* template_ids) {
  std::vector<int> grid(static_cast<size_t>(size * size), kHole);
  template_ids->clear();
  for (int br = 0; br < size / 4; ++br) {
    for (int bc = 0; bc < size / 4; ++bc) {
      int tid = static_cast<int>(rng.below(templates.size()));
      template_ids->push_back(tid);
      const LakeTemplate& t = templates[static_cast<size_t>(tid)];
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
          grid[static_cast<size_t>((br * 4 + r) * size + bc * 4 + c)] =
              t.cells[static_cast<size_t>(r * 4 + c)];
        }
      }
    }
  }
  return grid;
}

std::vector<Cell> safe_cells(const std::vector<int>& grid, int size) {
  std::vector<Cell> cells;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      if (grid[static_cast<size_t>(r * size + c)] == kSafe) cells.push_back({r, c});
    }
  }
  return cells;
}

}  // namespace

LakeInstance generate_map(const std::vector<LakeTemplate>& templates, int size,
                          int min_path, uint64_t seed, GenMethod method) {
  if (size % 4 != 0) throw ContractError("lake size must be divisible by 4");
  if (templates.empty()) throw ContractError("template set must be nonempty");

  Rng rng(seed);
  LakeInstance out;
  out.size = size;
  out.seed = seed;

  for (int rejects = 0; rejects < kMaxRejects; ++rejects) {
    out.grid = stamp_map(templates, size, rng, &out.template_ids);
    std::vector<Cell> safe = safe_cells(out.grid, size);
    if (safe.size() < 2) continue;

    if (method == GenMethod::reject) {
      Cell start = safe[rng.below(safe.size())];
      Cell goal = safe[rng.below(safe.size())];
      if (start == goal) continue;
      if (bfs_distance(out.grid, size, start, goal) < min_path) continue;
      out.start = start;
      out.goal = goal;
      return out;
    }

    // allpairs: one BFS per safe cell, then sample a qualifying pair.
    std::vector<std::pair<Cell, Cell>> qualifying;
    for (const Cell& s : safe) {
      std::vector<int> dist = bfs_all_distances(out.grid, size, s);
      for (const Cell& g : safe) {
        int d = dist[static_cast<size_t>(g.first * size + g.second)];
        if (d >= min_path) qualifying.push_back({s, g});
      }
    }
    if (qualifying.empty()) continue;
    auto [start, goal] = qualifying[rng.below(qualifying.size())];
    out.start = start;
    out.goal = goal;
    return out;
  }
  throw GenerationError("lake generation rejected 10000 candidate maps; "
                        "template set likely cannot satisfy the path minimum");
}

std::vector<char> PathPlan::moves() const {
  std::vector<char> out;
  for (size_t i = 1; i < cells.size(); ++i) {
    int dr = cells[i].first - cells[i - 1].first;
    int dc = cells[i].second - cells[i - 1].second;
    if (dr == -1 && dc == 0) out.push_back('U');
    else if (dr == 1 && dc == 0) out.push_back('D');
    else if (dr == 0 && dc == -1) out.push_back('L');
    else if (dr == 0 && dc == 1) out.push_back('R');
    else throw ContractError("plan cells are not 4-adjacent");
  }
  return out;
}

LazyStep lazysp_step(const WorldModel& world, const LakeGeometry& geom) {
  const int size = geom.size;
  auto blocked = [&](int r, int c) {
    Cell cell{r, c};
    if (cell == geom.start || cell == geom.goal) return false;  // known safe
    auto v = world.merged_value({Domain::lake, static_cast<uint32_t>(r * size + c)});
    return v.has_value() && *v == kHole;
  };

  // BFS with smaller-(row,col) successor preference: neighbors expanded in
  // lexicographic order, parents fixed at first discovery.
  std::vector<int> parent(static_cast<size_t>(size * size), -2);
  std::deque<Cell> queue{geom.start};
  parent[static_cast<size_t>(geom.start.first * size + geom.start.second)] = -1;
  bool reached = false;
  while (!queue.empty() && !reached) {
    auto [r, c] = queue.front();
    queue.pop_front();
    static constexpr int dr[4] = {-1, 0, 0, 1};
    static constexpr int dc[4] = {0, -1, 1, 0};
    for (int k = 0; k < 4; ++k) {
      int nr = r + dr[k], nc = c + dc[k];
      if (nr < 0 || nr >= size || nc < 0 || nc >= size) continue;
      size_t ni = static_cast<size_t>(nr * size + nc);
      if (parent[ni] != -2 || blocked(nr, nc)) continue;
      parent[ni] = r * size + c;
      if (Cell{nr, nc} == geom.goal) {
        reached = true;
        break;
      }
      queue.push_back({nr, nc});
    }
  }
  if (geom.start != geom.goal && !reached) {
    throw PlanningInfeasibleError("no optimistic path from start to goal");
  }

  LazyStep step;
  std::vector<Cell> rev;
  int at = geom.goal.first * size + geom.goal.second;
  while (at != -1) {
    rev.push_back({at / size, at % size});
    at = parent[static_cast<size_t>(at)];
  }
  step.path.cells.assign(rev.rbegin(), rev.rend());

  for (const Cell& cell : step.path.cells) {
    if (cell == geom.start || cell == geom.goal) continue;
    VariableId u{Domain::lake, static_cast<uint32_t>(cell.first * size + cell.second)};
    if (!world.known(u)) {
      step.done = false;
      step.next = u;
      return step;
    }
  }
  step.done = true;
  return step;
}

ExecResult execute_plan(const PathPlan& plan, const GroundTruthInstance& truth) {
  if (plan.cells.empty()) return {false, "empty_plan"};
  for (const Cell& cell : plan.cells) {
    int v = truth.assignment[static_cast<size_t>(cell.first * truth.cols + cell.second)];
    if (v != kSafe) return {false, "hole_hit"};
  }
  int shortest = true_shortest_path(truth);
  if (plan.length() != shortest) return {false, "suboptimal"};
  return {true, ""};
}

int true_shortest_path(const GroundTruthInstance& truth) {
  return bfs_distance(truth.assignment, truth.cols, *truth.start, *truth.goal);
}

std::vector<VariableId> path_block_candidates(const WorldModel& world,
                                              const PathPlan& path) {
  const int size = world.cols();
  std::set<int> blocks;
  for (const Cell& cell : path.cells) {
    blocks.insert((cell.first / 4) * (size / 4) + cell.second / 4);
  }
  std::vector<VariableId> candidates;
  for (int b : blocks) {
    int base_r = (b / (size / 4)) * 4;
    int base_c = (b % (size / 4)) * 4;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        VariableId u{Domain::lake,
                     static_cast<uint32_t>((base_r + r) * size + base_c + c)};
        if (!world.known(u)) candidates.push_back(u);
      }
    }
  }
  return candidates;
}

}  // namespace scry::lake
