#pragma once

// Square-lattice geometry in doubled integer coordinates.  A point (x2, y2)
// is a vertex when both coordinates are even, a horizontal-edge midpoint when
// (odd, even), a vertical-edge midpoint when (even, odd), and a face center
// when both are odd.  All geometry below works with edge midpoints and face
// centers directly; actual lattice vertices only show up in the Euler check.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ising {

struct Coord2 {
  int x = 0, y = 0;  // doubled coordinates

  friend bool operator==(const Coord2&, const Coord2&) = default;
  friend auto operator<=>(const Coord2&, const Coord2&) = default;

  Coord2 operator+(Coord2 o) const { return {x + o.x, y + o.y}; }
  Coord2 operator-(Coord2 o) const { return {x - o.x, y - o.y}; }

  bool is_vertex() const { return x % 2 == 0 && y % 2 == 0; }
  bool is_hedge() const { return (x & 1) != 0 && y % 2 == 0; }
  bool is_vedge() const { return x % 2 == 0 && (y & 1) != 0; }
  bool is_edge() const { return is_hedge() || is_vedge(); }
  bool is_face() const { return (x & 1) != 0 && (y & 1) != 0; }
};

enum class Side { bottom, right, top, left };

inline const char* side_name(Side s) {
  switch (s) {
    case Side::bottom: return "bottom";
    case Side::right: return "right";
    case Side::top: return "top";
    case Side::left: return "left";
  }
  return "?";
}

struct BoundaryEdge {
  Coord2 edge;
  Side side;       // which side of its unique interior face it sits on
  Coord2 face_in;  // the interior face adjacent to it
};

// A finite edge-connected, simply connected union of faces, together with all
// edges of those faces.  Edges are indexed in a fixed deterministic order
// (lexicographic by (y, x)); every matrix in the project uses this order.
class Domain {
 public:
  std::vector<Coord2> faces;      // sorted (y, x)
  std::vector<Coord2> edges;      // sorted (y, x)
  std::vector<BoundaryEdge> boundary;  // subset of edges, same sort order

  std::map<Coord2, int> edge_index;
  std::set<Coord2> face_set;

  int index_of(Coord2 e) const {
    auto it = edge_index.find(e);
    if (it == edge_index.end()) throw std::invalid_argument("Domain: edge not in domain");
    return it->second;
  }
  bool has_edge(Coord2 e) const { return edge_index.count(e) != 0; }
  bool has_face(Coord2 f) const { return face_set.count(f) != 0; }

  bool is_boundary_edge(Coord2 e) const {
    int n = 0;
    for (Coord2 d : {Coord2{1, 0}, Coord2{-1, 0}, Coord2{0, 1}, Coord2{0, -1}})
      if ((e + d).is_face() && has_face(e + d)) ++n;
    return n == 1;
  }

  // The four edges of a face, in the order E, N, W, S.
  static std::array<Coord2, 4> face_edges(Coord2 f) {
    return {Coord2{f.x + 1, f.y}, Coord2{f.x, f.y + 1}, Coord2{f.x - 1, f.y},
            Coord2{f.x, f.y - 1}};
  }
};

namespace detail {

inline bool lex_yx(Coord2 a, Coord2 b) {
  return a.y != b.y ? a.y < b.y : a.x < b.x;
}

}  // namespace detail

// Build a domain from an explicit face list.  Validates: faces are (odd, odd),
// the set is edge-connected, and the union is simply connected (checked via
// the Euler characteristic V - E + F = 1 of the closed cell complex).
inline Domain build_from_faces(std::vector<Coord2> face_list) {
  if (face_list.empty()) throw std::invalid_argument("build_from_faces: empty face list");
  std::sort(face_list.begin(), face_list.end(), detail::lex_yx);
  face_list.erase(std::unique(face_list.begin(), face_list.end()), face_list.end());

  Domain dom;
  dom.faces = face_list;
  for (Coord2 f : face_list) {
    if (!f.is_face())
      throw std::invalid_argument("build_from_faces: coordinates must be odd/odd face centers");
    dom.face_set.insert(f);
  }

  // Edge-connectivity over shared primal edges (faces at doubled distance 2).
  std::vector<int> stack = {0};
  std::set<Coord2> seen = {face_list[0]};
  std::map<Coord2, int> fidx;
  for (size_t i = 0; i < face_list.size(); ++i) fidx[face_list[i]] = int(i);
  while (!stack.empty()) {
    Coord2 f = face_list[size_t(stack.back())];
    stack.pop_back();
    for (Coord2 d : {Coord2{2, 0}, Coord2{-2, 0}, Coord2{0, 2}, Coord2{0, -2}}) {
      Coord2 g = f + d;
      if (dom.face_set.count(g) && !seen.count(g)) {
        seen.insert(g);
        stack.push_back(fidx[g]);
      }
    }
  }
  if (seen.size() != face_list.size())
    throw std::invalid_argument("build_from_faces: face set is not edge-connected");

  // Collect edges and the Euler data of the closure.
  std::set<Coord2> edge_set, vertex_set;
  for (Coord2 f : face_list) {
    for (Coord2 e : Domain::face_edges(f)) edge_set.insert(e);
    vertex_set.insert({f.x - 1, f.y - 1});
    vertex_set.insert({f.x + 1, f.y - 1});
    vertex_set.insert({f.x - 1, f.y + 1});
    vertex_set.insert({f.x + 1, f.y + 1});
  }
  long euler = long(vertex_set.size()) - long(edge_set.size()) + long(face_list.size());
  if (euler != 1)
    throw std::invalid_argument("build_from_faces: face union is not simply connected");

  dom.edges.assign(edge_set.begin(), edge_set.end());
  std::sort(dom.edges.begin(), dom.edges.end(), detail::lex_yx);
  for (size_t i = 0; i < dom.edges.size(); ++i) dom.edge_index[dom.edges[i]] = int(i);

  for (Coord2 e : dom.edges) {
    Coord2 nbr[2];
    if (e.is_hedge()) {
      nbr[0] = {e.x, e.y + 1};  // face above -> edge is its S side -> boundary side 'bottom'
      nbr[1] = {e.x, e.y - 1};
    } else {
      nbr[0] = {e.x + 1, e.y};  // face right -> edge is its W side -> boundary side 'left'
      nbr[1] = {e.x - 1, e.y};
    }
    bool in0 = dom.face_set.count(nbr[0]) != 0, in1 = dom.face_set.count(nbr[1]) != 0;
    if (in0 && in1) continue;
    if (e.is_hedge())
      dom.boundary.push_back({e, in0 ? Side::bottom : Side::top, in0 ? nbr[0] : nbr[1]});
    else
      dom.boundary.push_back({e, in0 ? Side::left : Side::right, in0 ? nbr[0] : nbr[1]});
  }
  return dom;
}

// Axis-aligned box with `width` columns of vertices (x = a .. a+width-1) and
// `height` rows of vertices (y = y0 .. y0+height-1), i.e. (width-1)*(height-1)
// faces.  width >= 3 so the box has at least two face columns; the boundary
// propagator formulas need distinct left and right end columns.
inline Domain build_rectangle(int width, int height, int a = 0, int y0 = 0) {
  if (width < 3 || height < 2)
    throw std::invalid_argument("build_rectangle: need width >= 3 and height >= 2");
  std::vector<Coord2> faces;
  for (int fy = 2 * y0 + 1; fy <= 2 * (y0 + height - 1) - 1; fy += 2)
    for (int fx = 2 * a + 1; fx <= 2 * (a + width - 1) - 1; fx += 2)
      faces.push_back({fx, fy});
  return build_from_faces(std::move(faces));
}

// Split a rectangle-like domain along the horizontal vertex line y = k
// (doubled coordinate 2k).  Returns {lower, upper}; the cut row of horizontal
// edges (y2 = 2k) belongs to both pieces.
inline std::pair<Domain, Domain> split_domain(const Domain& dom, int k) {
  std::vector<Coord2> lo, hi;
  for (Coord2 f : dom.faces) (f.y < 2 * k ? lo : hi).push_back(f);
  if (lo.empty() || hi.empty())
    throw std::invalid_argument("split_domain: cut line does not split the domain");
  return {build_from_faces(std::move(lo)), build_from_faces(std::move(hi))};
}

// The ordered row of horizontal edges lying on the vertex line y = k.
inline std::vector<Coord2> cut_row(const Domain& dom, int k) {
  std::vector<Coord2> row;
  for (Coord2 e : dom.edges)
    if (e.is_hedge() && e.y == 2 * k) row.push_back(e);
  if (row.empty()) throw std::invalid_argument("cut_row: no horizontal edges on that line");
  return row;
}

}  // namespace ising
