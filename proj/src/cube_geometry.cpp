#include "scry/cube_geometry.hpp"

#include <map>
#include <stdexcept>

namespace scry::cube {

namespace {

using Vec3 = std::array<int, 3>;

// Outward normals in face order U,R,F,D,L,B.
constexpr std::array<Vec3, 6> kNormals = {{{0, 1, 0},
                                           {1, 0, 0},
                                           {0, 0, 1},
                                           {0, -1, 0},
                                           {-1, 0, 0},
                                           {0, 0, -1}}};

// Position of facelet (face, row, col) on the 3x3x3 cubie lattice. Row 0 is
// the top of the face as drawn in the usual unfolded layout (U's row 0
// borders B, D's row 0 borders F, side faces have row 0 at the U edge).
Vec3 facelet_position(int face, int r, int c) {
  switch (face) {
    case 0: return {c, 2, r};          // U
    case 1: return {2, 2 - r, 2 - c};  // R
    case 2: return {c, 2 - r, 2};      // F
    case 3: return {c, 0, 2 - r};      // D
    case 4: return {0, 2 - r, c};      // L
    case 5: return {2 - c, 2 - r, 0};  // B
  }
  throw std::logic_error("bad face index");
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

int dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

// Rotate v by -90 degrees about unit axis n (Rodrigues with cos=0, sin=-1):
// a clockwise quarter turn as seen from outside the face with normal n.
Vec3 rotate_cw(const Vec3& v, const Vec3& n) {
  Vec3 c = cross(n, v);
  int d = dot(n, v);
  return {-c[0] + n[0] * d, -c[1] + n[1] * d, -c[2] + n[2] * d};
}

Vec3 rotate_pos_cw(const Vec3& p, const Vec3& n) {
  Vec3 centered = {p[0] - 1, p[1] - 1, p[2] - 1};
  Vec3 r = rotate_cw(centered, n);
  return {r[0] + 1, r[1] + 1, r[2] + 1};
}

int face_of_letter(char f) {
  for (int i = 0; i < 6; ++i) {
    if (kFaceLetters[static_cast<size_t>(i)] == f) return i;
  }
  throw std::logic_error(std::string("bad face letter: ") + f);
}

std::array<FaceletGeom, kFaceletCount> build_geometry() {
  std::array<FaceletGeom, kFaceletCount> g{};
  for (int face = 0; face < 6; ++face) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        int idx = face * 9 + r * 3 + c;
        g[static_cast<size_t>(idx)] = {facelet_position(face, r, c),
                                       kNormals[static_cast<size_t>(face)]};
      }
    }
  }
  return g;
}

int facelet_at(const Vec3& pos, const Vec3& normal) {
  const auto& geom = facelet_geometry();
  for (int i = 0; i < kFaceletCount; ++i) {
    if (geom[static_cast<size_t>(i)].position == pos &&
        geom[static_cast<size_t>(i)].normal == normal) {
      return i;
    }
  }
  throw std::logic_error("no facelet at requested position/normal");
}

// One clockwise quarter turn of a face as a facelet permutation,
// perm[dst] = src.
std::array<int, kFaceletCount> base_turn(int face) {
  const auto& geom = facelet_geometry();
  const Vec3& n = kNormals[static_cast<size_t>(face)];
  int axis = n[0] != 0 ? 0 : (n[1] != 0 ? 1 : 2);
  int layer = (n[axis] > 0) ? 2 : 0;

  std::array<int, kFaceletCount> perm{};
  for (int i = 0; i < kFaceletCount; ++i) perm[static_cast<size_t>(i)] = i;
  for (int i = 0; i < kFaceletCount; ++i) {
    const auto& fg = geom[static_cast<size_t>(i)];
    if (fg.position[static_cast<size_t>(axis)] != layer) continue;
    int dst = facelet_at(rotate_pos_cw(fg.position, n), rotate_cw(fg.normal, n));
    perm[static_cast<size_t>(dst)] = i;
  }
  return perm;
}

std::array<int, kFaceletCount> compose(const std::array<int, kFaceletCount>& a,
                                       const std::array<int, kFaceletCount>& b) {
  // Apply a, then b.
  std::array<int, kFaceletCount> out{};
  for (int i = 0; i < kFaceletCount; ++i) {
    out[static_cast<size_t>(i)] = a[static_cast<size_t>(b[static_cast<size_t>(i)])];
  }
  return out;
}

}  // namespace

const std::array<int, 6>& solved_face_colors() {
  // {R,G,B,Y,O,W} indices: W=5, R=0, G=1, Y=3, O=4, B=2.
  static const std::array<int, 6> kColors = {5, 0, 1, 3, 4, 2};
  return kColors;
}

const std::array<std::string, 8>& corner_names() {
  static const std::array<std::string, 8> kNames = {
      "URF", "UFL", "ULB", "UBR", "DFR", "DLF", "DBL", "DRB"};
  return kNames;
}

const std::array<FaceletGeom, kFaceletCount>& facelet_geometry() {
  static const auto kGeom = build_geometry();
  return kGeom;
}

int facelet_index(char face, int row, int col) {
  return face_of_letter(face) * 9 + row * 3 + col;
}

const std::array<std::array<int, 3>, 8>& corner_facelets() {
  static const auto kCorners = [] {
    std::array<std::array<int, 3>, 8> out{};
    for (size_t ci = 0; ci < corner_names().size(); ++ci) {
      const std::string& name = corner_names()[ci];
      // Corner position: component fixed by each of the three faces.
      Vec3 pos = {1, 1, 1};
      for (char f : name) {
        const Vec3& n = kNormals[static_cast<size_t>(face_of_letter(f))];
        for (int a = 0; a < 3; ++a) {
          if (n[static_cast<size_t>(a)] != 0) {
            pos[static_cast<size_t>(a)] = n[static_cast<size_t>(a)] > 0 ? 2 : 0;
          }
        }
      }
      for (size_t slot = 0; slot < 3; ++slot) {
        const Vec3& n = kNormals[static_cast<size_t>(face_of_letter(name[slot]))];
        out[ci][slot] = facelet_at(pos, n);
      }
    }
    return out;
  }();
  return kCorners;
}

const std::vector<std::array<int, kFaceletCount>>& move_permutations() {
  static const auto kMoves = [] {
    std::vector<std::array<int, kFaceletCount>> moves;
    moves.reserve(kMoveCount);
    for (int face = 0; face < 6; ++face) {
      auto cw = base_turn(face);
      auto ccw = compose(compose(cw, cw), cw);
      auto dbl = compose(cw, cw);
      moves.push_back(cw);
      moves.push_back(ccw);
      moves.push_back(dbl);
    }
    return moves;
  }();
  return kMoves;
}

const std::string& move_name(int move) {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> names;
    for (char f : kFaceLetters) {
      names.push_back(std::string(1, f));
      names.push_back(std::string(1, f) + "'");
      names.push_back(std::string(1, f) + "2");
    }
    return names;
  }();
  if (move < 0 || move >= kMoveCount) throw std::logic_error("bad move index");
  return kNames[static_cast<size_t>(move)];
}

int move_from_name(const std::string& name) {
  for (int m = 0; m < kMoveCount; ++m) {
    if (move_name(m) == name) return m;
  }
  throw std::logic_error("bad move name: " + name);
}

int inverse_move(int move) {
  int variant = move % 3;
  if (variant == 2) return move;
  return move - variant + (1 - variant);
}

std::vector<std::array<int, 3>> legal_corner_stickerings() {
  // Each solved corner, read in its name's slot order, gives one physical
  // piece's clockwise color cycle; the legal stickerings of any corner
  // position are exactly the cyclic rotations of these 8 cycles.
  std::vector<std::array<int, 3>> out;
  out.reserve(24);
  for (size_t ci = 0; ci < corner_names().size(); ++ci) {
    const std::string& name = corner_names()[ci];
    std::array<int, 3> cycle{};
    for (size_t slot = 0; slot < 3; ++slot) {
      cycle[slot] = solved_face_colors()[static_cast<size_t>(face_of_letter(name[slot]))];
    }
    for (int rot = 0; rot < 3; ++rot) {
      out.push_back({cycle[static_cast<size_t>(rot % 3)],
                     cycle[static_cast<size_t>((rot + 1) % 3)],
                     cycle[static_cast<size_t>((rot + 2) % 3)]});
    }
  }
  return out;
}

}  // namespace scry::cube
