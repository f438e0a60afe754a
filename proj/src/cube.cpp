#include "scry/cube.hpp"

#include <algorithm>
#include <set>

#include "scry/rng.hpp"

namespace scry::cube {

std::string CubeState::to_string() const {
  std::string s;
  s.reserve(kFaceletCount);
  for (int v : facelets) s += value_name(Domain::cube, v);
  return s;
}

CubeState CubeState::from_string(const std::string& s) {
  if (s.size() != kFaceletCount) {
    throw ContractError("cube state must be exactly 54 characters");
  }
  CubeState state;
  for (int i = 0; i < kFaceletCount; ++i) {
    auto v = value_index(Domain::cube, std::string(1, s[static_cast<size_t>(i)]));
    if (!v) throw ContractError("cube state characters must be one of R,G,B,Y,O,W");
    state.facelets[static_cast<size_t>(i)] = *v;
  }
  return state;
}

CubeState solved_state() {
  CubeState state;
  for (int i = 0; i < kFaceletCount; ++i) {
    state.facelets[static_cast<size_t>(i)] = solved_face_colors()[static_cast<size_t>(i / 9)];
  }
  return state;
}

CubeState apply_move(const CubeState& state, int move) {
  const auto& perm = move_permutations()[static_cast<size_t>(move)];
  CubeState out;
  for (int i = 0; i < kFaceletCount; ++i) {
    out.facelets[static_cast<size_t>(i)] =
        state.facelets[static_cast<size_t>(perm[static_cast<size_t>(i)])];
  }
  return out;
}

CubeState apply_moves(const CubeState& state, const std::vector<int>& moves) {
  CubeState out = state;
  for (int m : moves) out = apply_move(out, m);
  return out;
}

json CubeDataset::manifest() const {
  json seqs = json::array();
  for (const auto& seq : sequences) {
    json names = json::array();
    for (int m : seq) names.push_back(move_name(m));
    seqs.push_back(names);
  }
  json states_json = json::array();
  for (const CubeState& s : states) states_json.push_back(s.to_string());

  json corner_map = json::object();
  for (size_t c = 0; c < corner_names().size(); ++c) {
    corner_map[corner_names()[c]] = corner_facelets()[c];
  }
  // Sticker adjacency: facelets sharing a corner or an edge cubie.
  json adjacency = json::array();
  const auto& geom = facelet_geometry();
  for (int a = 0; a < kFaceletCount; ++a) {
    for (int b = a + 1; b < kFaceletCount; ++b) {
      if (geom[static_cast<size_t>(a)].position == geom[static_cast<size_t>(b)].position) {
        adjacency.push_back(json::array({a, b}));
      }
    }
  }
  return json{{"seed", seed},
              {"moves_per_state", moves_per_state},
              {"sequences", seqs},
              {"states", states_json},
              {"corner_map", corner_map},
              {"adjacency", adjacency}};
}

CubeDataset scramble_dataset(uint64_t seed, int count, int moves) {
  if (count < 1 || moves < 0) throw ContractError("bad scramble dataset arguments");
  CubeDataset ds;
  ds.seed = seed;
  ds.moves_per_state = moves;
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    std::vector<int> seq;
    seq.reserve(static_cast<size_t>(moves));
    for (int m = 0; m < moves; ++m) {
      seq.push_back(static_cast<int>(rng.below(kMoveCount)));
    }
    ds.states.push_back(apply_moves(solved_state(), seq));
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

GroundTruthInstance truth_of(const CubeState& state) {
  GroundTruthInstance t;
  t.domain = Domain::cube;
  t.assignment.assign(state.facelets.begin(), state.facelets.end());
  return t;
}

VariableId random_candidate(const WorldModel& world, Rng& rng) {
  std::vector<uint32_t> unknown;
  for (uint32_t i = 0; i < kFaceletCount; ++i) {
    if (!world.known({Domain::cube, i})) unknown.push_back(i);
  }
  if (unknown.empty()) {
    throw ContractError("random_candidate: all 54 facelets are known");
  }
  return {Domain::cube, unknown[rng.below(unknown.size())]};
}

bool sufficiency(const WorldModel& world) {
  return world.merged_size() == kFaceletCount;
}

std::string corner_token(const CubeState& state, int corner) {
  const auto& triple = corner_facelets()[static_cast<size_t>(corner)];
  std::string token;
  for (int f : triple) {
    token += value_name(Domain::cube, state.facelets[static_cast<size_t>(f)]);
  }
  return token;
}

std::string corner_token(const WorldModel& world, int corner) {
  const auto& triple = corner_facelets()[static_cast<size_t>(corner)];
  std::string token;
  for (int f : triple) {
    auto v = world.merged_value({Domain::cube, static_cast<uint32_t>(f)});
    token += v ? value_name(Domain::cube, *v) : std::string("?");
  }
  return token;
}

std::vector<MacroPattern> placeholder_corner_macros() {
  std::vector<MacroPattern> macros;
  const auto stickerings = legal_corner_stickerings();
  for (int corner = 0; corner < 8; ++corner) {
    for (const auto& colors : stickerings) {
      macros.push_back(MacroPattern{CornerMacro{corner, colors}});
    }
  }
  return macros;
}

std::vector<MacroPattern> state_corner_macros(const CubeState& state) {
  std::vector<MacroPattern> macros;
  for (int corner = 0; corner < 8; ++corner) {
    CornerMacro m;
    m.corner = corner;
    const auto& triple = corner_facelets()[static_cast<size_t>(corner)];
    for (int s = 0; s < 3; ++s) {
      m.colors[static_cast<size_t>(s)] =
          state.facelets[static_cast<size_t>(triple[static_cast<size_t>(s)])];
    }
    macros.push_back(MacroPattern{m});
  }
  return macros;
}

std::vector<MacroPattern> dataset_corner_macros(const std::vector<CubeState>& states) {
  std::vector<MacroPattern> macros;
  std::set<std::pair<int, std::array<int, 3>>> seen;
  for (const CubeState& state : states) {
    for (MacroPattern& m : state_corner_macros(state)) {
      const auto& corner = std::get<CornerMacro>(m.payload);
      if (seen.insert({corner.corner, corner.colors}).second) {
        macros.push_back(std::move(m));
      }
    }
  }
  return macros;
}

bool reconstruction_success(const WorldModel& world, const GroundTruthInstance& truth) {
  if (!sufficiency(world)) {
    throw ContractError("reconstruction checked before sufficiency holds");
  }
  for (uint32_t i = 0; i < kFaceletCount; ++i) {
    if (world.merged_value({Domain::cube, i}) != truth.assignment[i]) return false;
  }
  return true;
}

}  // namespace scry::cube
