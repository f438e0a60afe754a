#pragma once
// Facelet-level cube geometry. Faces are stored in U,R,F,D,L,B order, nine
// facelets each (row-major as seen from outside the face), so facelet index
// = face*9 + row*3 + col. Everything else (the corner cubie/sticker map,
// face-turn permutations, the legal corner stickerings) is derived from the
// 3D placement of each facelet rather than written out by hand.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace scry::cube {

inline constexpr int kFaceletCount = 54;
inline constexpr std::array<char, 6> kFaceLetters = {'U', 'R', 'F', 'D', 'L', 'B'};

// Solved colors by face, in face order: U=W, R=R, F=G, D=Y, L=O, B=B,
// expressed as indices into the cube value domain {R,G,B,Y,O,W}.
const std::array<int, 6>& solved_face_colors();

// Corner cubie names in canonical order; each name lists its faces clockwise
// as seen from outside the corner.
const std::array<std::string, 8>& corner_names();

// corner -> the three facelet indices, in the slot order of the corner name.
const std::array<std::array<int, 3>, 8>& corner_facelets();

// Facelet index for a (face, row, col) triple; face given by letter.
int facelet_index(char face, int row, int col);

struct FaceletGeom {
  std::array<int, 3> position;  // cubie coordinates in {0,1,2}^3
  std::array<int, 3> normal;    // outward unit normal
};

const std::array<FaceletGeom, kFaceletCount>& facelet_geometry();

// Permutations for the 18 face turns, ordered U,U',U2,R,R',R2,F,F',F2,
// D,D',D2,L,L',L2,B,B',B2. perm[i] = source facelet that lands on slot i.
const std::vector<std::array<int, kFaceletCount>>& move_permutations();

inline constexpr int kMoveCount = 18;
const std::string& move_name(int move);
int move_from_name(const std::string& name);
int inverse_move(int move);

// All 24 legal stickerings of one corner position: 8 physical corner pieces
// times 3 twists, each returned in the position's slot order.
std::vector<std::array<int, 3>> legal_corner_stickerings();

}  // namespace scry::cube
