#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace anisomesh {

// Tolerances shared by the planar kernel.
constexpr double kWeldTol = 1e-12;     // vertex quantization grid used when gluing
constexpr double kSliverArea = 1e-14;  // clip outputs below this area are discarded
constexpr double kOnLineTol = 1e-12;   // a point this close to a boundary line is on it

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }
inline double dist(Point2 a, Point2 b) { return norm(a - b); }

// Axis-aligned square, the cell shape of every partition in this project.
struct Square {
  double x0 = 0.0;
  double y0 = 0.0;
  double side = 1.0;

  double x1() const { return x0 + side; }
  double y1() const { return y0 + side; }
  Point2 lower_left() const { return {x0, y0}; }
  bool contains(Point2 p, double tol = 0.0) const {
    return p.x >= x0 - tol && p.x <= x1() + tol && p.y >= y0 - tol && p.y <= y1() + tol;
  }
  // Distance from p to the boundary lines, negative outside.
  double inset_depth(Point2 p) const {
    double dx = std::min(p.x - x0, x1() - p.x);
    double dy = std::min(p.y - y0, y1() - p.y);
    return std::min(dx, dy);
  }
};

// Triangle stored counterclockwise.  Degenerate data is representable (area 0);
// operations that need a proper triangle say so.
struct Triangle {
  Point2 v0, v1, v2;

  Triangle() = default;
  Triangle(Point2 a, Point2 b, Point2 c) : v0(a), v1(b), v2(c) { normalize(); }

  void normalize() {
    if (signed_area() < 0.0) std::swap(v1, v2);
  }
  double signed_area() const { return 0.5 * cross(v1 - v0, v2 - v0); }
  double area() const { return std::abs(signed_area()); }
  double diameter() const {
    return std::max({dist(v0, v1), dist(v1, v2), dist(v2, v0)});
  }
  Point2 centroid() const { return (1.0 / 3.0) * (v0 + v1 + v2); }
  Point2 vertex(int i) const { return i == 0 ? v0 : (i == 1 ? v1 : v2); }

  // Barycentric coordinates of p (valid for non-degenerate triangles).
  std::array<double, 3> barycentric(Point2 p) const;
  bool contains(Point2 p, double tol = 1e-12) const;
};

inline double area(const Triangle& t) { return t.area(); }

// Linear map x -> M x + shift.
struct AffineMap {
  double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;
  Point2 shift{};

  Point2 apply(Point2 p) const {
    return {m00 * p.x + m01 * p.y + shift.x, m10 * p.x + m11 * p.y + shift.y};
  }
  Triangle apply(const Triangle& t) const {
    return Triangle(apply(t.v0), apply(t.v1), apply(t.v2));
  }
  double det() const { return m00 * m11 - m01 * m10; }
  AffineMap inverse() const;
  static AffineMap translation(Point2 s) { return {1.0, 0.0, 0.0, 1.0, s}; }
};

// Convex polygon with 3..7 vertices, counterclockwise, no duplicates.
struct ConvexPolygon {
  std::vector<Point2> pts;

  size_t size() const { return pts.size(); }
  double area() const;
};

// Unit-area equilateral triangle in canonical pose: centroid at the origin,
// one vertex on the positive y-axis.
Triangle unit_equilateral();

// One placement of the doubly periodic tiling generated by a base triangle:
// the base (or its point reflection through the midpoint of edge v0-v1)
// translated by `shift`.
struct TilePlacement {
  Point2 shift{};
  bool reflected = false;
};

Triangle reflect_through_first_edge_midpoint(const Triangle& t);
Triangle place_tile(const Triangle& base, const TilePlacement& p);

// All tiles of the tiling whose intersection with the square has positive
// area.  The lattice is anchored so that vertex v2 of the base triangle lands
// on the square's lower-left corner.
std::vector<TilePlacement> tile_cover_placements(const Triangle& base, const Square& sq);
std::vector<Triangle> tile_cover(const Triangle& base, const Square& sq);

// Intersection polygon of a triangle with a square (at most 7 vertices);
// nullopt when the intersection has measure zero.
std::optional<ConvexPolygon> clip_to_square(const Triangle& t, const Square& sq);

// Split a convex k-gon into exactly k-2 triangles using only its vertices.
std::vector<Triangle> fan_triangulate(const ConvexPolygon& poly);

// Conforming subdivision of t whose vertex set is t's vertices plus `pts`,
// each of which must lie on an edge of t (within snap tolerance).
std::vector<Triangle> split_edge_conform(const Triangle& t, std::span<const Point2> pts);

// True when p lies on one of t's edges within the given tolerance.
bool on_triangle_boundary(const Triangle& t, Point2 p, double tol = 1e-9);

// Triangle mesh with per-cell provenance tags.
struct Mesh {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> group;         // 1..4
  std::vector<int> cell;          // owning square index
  std::vector<uint8_t> interior;  // true when the triangle avoids its cell boundary

  size_t triangle_count() const { return triangles.size(); }
  Triangle triangle(size_t i) const {
    const auto& tr = triangles[i];
    return Triangle(vertices[tr[0]], vertices[tr[1]], vertices[tr[2]]);
  }
  double total_area() const;
};

struct ConformityReport {
  bool conforming = false;
  bool orientation_ok = false;
  bool edges_ok = false;
  bool boundary_ok = false;
  double total_area = 0.0;
  std::string detail;
};

// Edge-to-edge check: every undirected edge is shared by exactly two cells
// with opposite orientation, or appears once and lies on the domain boundary.
ConformityReport check_conforming(const Mesh& mesh, const Square& domain);

// Builds a welded mesh; coordinates are quantized to the kWeldTol grid before
// identity comparison.
class MeshBuilder {
 public:
  int add_vertex(Point2 p);
  void add_triangle(const Triangle& t, int group, int cell, bool interior);
  Mesh take();

 private:
  struct Key {
    int64_t qx, qy;
    bool operator==(const Key& o) const { return qx == o.qx && qy == o.qy; }
  };
  struct KeyHash {
    size_t operator()(const Key& k) const {
      uint64_t h = static_cast<uint64_t>(k.qx) * 0x9e3779b97f4a7c15ull;
      h ^= static_cast<uint64_t>(k.qy) + 0x7f4a7c15u + (h << 6) + (h >> 2);
      return static_cast<size_t>(h);
    }
  };
  std::unordered_map<Key, int, KeyHash> index_;
  Mesh mesh_;
};

}  // namespace anisomesh
