#pragma once
// Facelet-level cube reconstruction environment: state and move engine on
// the shared geometry, scramble dataset generation, the random-selection
// grounding controller, corner-token utilities, and the placeholder /
// dataset-derived corner pattern libraries.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scry/cube_geometry.hpp"
#include "scry/pattern.hpp"
#include "scry/world.hpp"

namespace scry::cube {

struct CubeState {
  std::array<int, kFaceletCount> facelets{};  // color indices

  bool operator==(const CubeState&) const = default;

  std::string to_string() const;  // 54 characters over R,G,B,Y,O,W
  static CubeState from_string(const std::string& s);
};

CubeState solved_state();
CubeState apply_move(const CubeState& state, int move);
CubeState apply_moves(const CubeState& state, const std::vector<int>& moves);

struct CubeDataset {
  uint64_t seed = 0;
  int moves_per_state = 0;
  std::vector<std::vector<int>> sequences;
  std::vector<CubeState> states;

  // Seed, scramble metadata, corner map, and sticker adjacency.
  json manifest() const;
};

// `count` states, each scrambled from solved with `moves` uniformly random
// face turns; deterministic in the seed.
CubeDataset scramble_dataset(uint64_t seed, int count, int moves);

GroundTruthInstance truth_of(const CubeState& state);

// Uniformly random facelet outside the merged view.
VariableId random_candidate(const WorldModel& world, Rng& rng);

// True iff all 54 facelets are covered by the merged view.
bool sufficiency(const WorldModel& world);

// Colors of a corner's three facelets in slot order. World-model variant
// marks unknown slots with '?'.
std::string corner_token(const CubeState& state, int corner);
std::string corner_token(const WorldModel& world, int corner);

// All 24 legal stickerings for each corner position: 192 corner macros.
std::vector<MacroPattern> placeholder_corner_macros();
// The eight corner macros observed on one state.
std::vector<MacroPattern> state_corner_macros(const CubeState& state);
// Deduplicated corner macros across a dataset (the ground-truth library).
std::vector<MacroPattern> dataset_corner_macros(const std::vector<CubeState>& states);

// Merged view equals the ground truth on all 54 facelets. Calling this
// before sufficiency holds is a contract violation.
bool reconstruction_success(const WorldModel& world, const GroundTruthInstance& truth);

}  // namespace scry::cube
