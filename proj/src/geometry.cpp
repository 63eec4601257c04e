#include "anisomesh/geometry.hpp"

#include <map>
#include <stdexcept>

namespace anisomesh {

std::array<double, 3> Triangle::barycentric(Point2 p) const {
  double den = cross(v1 - v0, v2 - v0);
  double l1 = cross(p - v0, v2 - v0) / den;
  double l2 = cross(v1 - v0, p - v0) / den;
  return {1.0 - l1 - l2, l1, l2};
}

bool Triangle::contains(Point2 p, double tol) const {
  auto l = barycentric(p);
  return l[0] >= -tol && l[1] >= -tol && l[2] >= -tol;
}

AffineMap AffineMap::inverse() const {
  double d = det();
  if (d == 0.0) throw std::invalid_argument("AffineMap::inverse: singular map");
  AffineMap inv;
  inv.m00 = m11 / d;
  inv.m01 = -m01 / d;
  inv.m10 = -m10 / d;
  inv.m11 = m00 / d;
  inv.shift = {-(inv.m00 * shift.x + inv.m01 * shift.y),
               -(inv.m10 * shift.x + inv.m11 * shift.y)};
  return inv;
}

double ConvexPolygon::area() const {
  double a = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    const Point2& p = pts[i];
    const Point2& q = pts[(i + 1) % pts.size()];
    a += cross(p, q);
  }
  return 0.5 * std::abs(a);
}

Triangle unit_equilateral() {
  // Area (3*sqrt(3)/4) R^2 = 1 with circumradius R; bottom edge horizontal.
  double r = 2.0 * std::pow(3.0, -0.75);
  double h = std::sqrt(3.0) * 0.5 * r;
  return Triangle({0.0, r}, {-h, -0.5 * r}, {h, -0.5 * r});
}

Triangle reflect_through_first_edge_midpoint(const Triangle& t) {
  Point2 s = t.v0 + t.v1;  // point reflection p -> s - p through mid(v0, v1)
  return Triangle(s - t.v0, s - t.v1, s - t.v2);
}

Triangle place_tile(const Triangle& base, const TilePlacement& p) {
  Triangle t = p.reflected ? reflect_through_first_edge_midpoint(base) : base;
  return Triangle(t.v0 + p.shift, t.v1 + p.shift, t.v2 + p.shift);
}

namespace {

// Positive-area overlap test against a square, cheap bbox reject first.
bool overlaps_square(const Triangle& t, const Square& sq) {
  double xmin = std::min({t.v0.x, t.v1.x, t.v2.x});
  double xmax = std::max({t.v0.x, t.v1.x, t.v2.x});
  double ymin = std::min({t.v0.y, t.v1.y, t.v2.y});
  double ymax = std::max({t.v0.y, t.v1.y, t.v2.y});
  if (xmax <= sq.x0 + kOnLineTol || xmin >= sq.x1() - kOnLineTol ||
      ymax <= sq.y0 + kOnLineTol || ymin >= sq.y1() - kOnLineTol) {
    return false;
  }
  auto clipped = clip_to_square(t, sq);
  return clipped.has_value();
}

}  // namespace

std::vector<TilePlacement> tile_cover_placements(const Triangle& base, const Square& sq) {
  if (base.area() <= kSliverArea) {
    throw std::invalid_argument("tile_cover: degenerate base triangle");
  }
  // Lattice basis of the parallelogram base + reflected base, anchored so
  // that v2 sits on the square's lower-left corner.
  Point2 e1 = base.v0 - base.v2;
  Point2 e2 = base.v1 - base.v2;
  Point2 anchor = sq.lower_left() - base.v2;

  // Invert the basis to bound the (i, j) index window from the square corners.
  double den = cross(e1, e2);
  double imin = 1e300, imax = -1e300, jmin = 1e300, jmax = -1e300;
  const Point2 corners[4] = {{sq.x0, sq.y0}, {sq.x1(), sq.y0}, {sq.x1(), sq.y1()}, {sq.x0, sq.y1()}};
  for (const Point2& c : corners) {
    Point2 d = c - (anchor + base.v2);
    double i = cross(d, e2) / den;
    double j = cross(e1, d) / den;
    imin = std::min(imin, i);
    imax = std::max(imax, i);
    jmin = std::min(jmin, j);
    jmax = std::max(jmax, j);
  }
  // The base triangle may stick out of its parallelogram cell by one index.
  int i0 = static_cast<int>(std::floor(imin)) - 2;
  int i1 = static_cast<int>(std::ceil(imax)) + 2;
  int j0 = static_cast<int>(std::floor(jmin)) - 2;
  int j1 = static_cast<int>(std::ceil(jmax)) + 2;

  std::vector<TilePlacement> out;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      Point2 shift = anchor + static_cast<double>(i) * e1 + static_cast<double>(j) * e2;
      for (bool refl : {false, true}) {
        TilePlacement p{shift, refl};
        if (overlaps_square(place_tile(base, p), sq)) out.push_back(p);
      }
    }
  }
  return out;
}

std::vector<Triangle> tile_cover(const Triangle& base, const Square& sq) {
  std::vector<Triangle> out;
  for (const TilePlacement& p : tile_cover_placements(base, sq)) {
    out.push_back(place_tile(base, p));
  }
  return out;
}

namespace {

// Sutherland-Hodgman pass against the half-plane a*x + b*y <= c.
std::vector<Point2> clip_half_plane(const std::vector<Point2>& poly, double a, double b, double c) {
  std::vector<Point2> out;
  size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    Point2 p = poly[i];
    Point2 q = poly[(i + 1) % n];
    double dp = a * p.x + b * p.y - c;
    double dq = a * q.x + b * q.y - c;
    bool pin = dp <= kOnLineTol;
    bool qin = dq <= kOnLineTol;
    if (pin) out.push_back(p);
    if (pin != qin) {
      double t = dp / (dp - dq);
      out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
    }
  }
  return out;
}

std::vector<Point2> dedupe_ring(const std::vector<Point2>& poly) {
  std::vector<Point2> out;
  for (const Point2& p : poly) {
    if (out.empty() || dist(out.back(), p) > 1e-13) out.push_back(p);
  }
  while (out.size() > 1 && dist(out.front(), out.back()) <= 1e-13) out.pop_back();
  // Drop vertices that are collinear with their neighbours; a convex ring
  // stays convex and fans cleanly afterwards.
  if (out.size() > 3) {
    std::vector<Point2> slim;
    size_t n = out.size();
    for (size_t i = 0; i < n; ++i) {
      Point2 prev = out[(i + n - 1) % n];
      Point2 cur = out[i];
      Point2 next = out[(i + 1) % n];
      if (std::abs(cross(cur - prev, next - cur)) > 1e-13 * std::max(1.0, dist(prev, next))) {
        slim.push_back(cur);
      }
    }
    if (slim.size() >= 3) out = slim;
  }
  return out;
}

}  // namespace

std::optional<ConvexPolygon> clip_to_square(const Triangle& t, const Square& sq) {
  std::vector<Point2> poly = {t.v0, t.v1, t.v2};
  poly = clip_half_plane(poly, -1.0, 0.0, -sq.x0);  // x >= x0
  if (poly.size() < 3) return std::nullopt;
  poly = clip_half_plane(poly, 1.0, 0.0, sq.x1());  // x <= x1
  if (poly.size() < 3) return std::nullopt;
  poly = clip_half_plane(poly, 0.0, -1.0, -sq.y0);  // y >= y0
  if (poly.size() < 3) return std::nullopt;
  poly = clip_half_plane(poly, 0.0, 1.0, sq.y1());  // y <= y1
  poly = dedupe_ring(poly);
  if (poly.size() < 3) return std::nullopt;
  ConvexPolygon out{std::move(poly)};
  if (out.area() < kSliverArea) return std::nullopt;
  return out;
}

std::vector<Triangle> fan_triangulate(const ConvexPolygon& poly) {
  size_t k = poly.size();
  if (k < 3 || k > 7) throw std::invalid_argument("fan_triangulate: polygon must have 3..7 vertices");
  if (poly.area() <= kSliverArea) throw std::invalid_argument("fan_triangulate: degenerate polygon");
  // Pick the fan apex that maximizes the smallest part; k is tiny, try all.
  size_t best_apex = 0;
  double best_min = -1.0;
  for (size_t a = 0; a < k; ++a) {
    double mn = 1e300;
    for (size_t i = 1; i + 1 < k; ++i) {
      Triangle part(poly.pts[a], poly.pts[(a + i) % k], poly.pts[(a + i + 1) % k]);
      mn = std::min(mn, part.area());
    }
    if (mn > best_min) {
      best_min = mn;
      best_apex = a;
    }
  }
  std::vector<Triangle> out;
  for (size_t i = 1; i + 1 < k; ++i) {
    out.emplace_back(poly.pts[best_apex], poly.pts[(best_apex + i) % k],
                     poly.pts[(best_apex + i + 1) % k]);
  }
  return out;
}

namespace {

constexpr double kEdgeSnapTol = 1e-9;

// Parameter of p along segment [a, b] when p lies on it, else nullopt.
std::optional<double> on_segment(Point2 a, Point2 b, Point2 p) {
  Point2 ab = b - a;
  double len2 = dot(ab, ab);
  if (len2 == 0.0) return std::nullopt;
  double t = dot(p - a, ab) / len2;
  if (t < -kEdgeSnapTol || t > 1.0 + kEdgeSnapTol) return std::nullopt;
  Point2 proj = a + t * ab;
  if (dist(proj, p) > kEdgeSnapTol) return std::nullopt;
  return std::clamp(t, 0.0, 1.0);
}

void split_rec(const Triangle& t, std::vector<Point2> pts, std::vector<Triangle>& out) {
  // Find a point strictly inside an edge and cut through the opposite vertex.
  for (int e = 0; e < 3; ++e) {
    Point2 a = t.vertex(e);
    Point2 b = t.vertex((e + 1) % 3);
    Point2 o = t.vertex((e + 2) % 3);
    for (size_t k = 0; k < pts.size(); ++k) {
      auto tt = on_segment(a, b, pts[k]);
      if (!tt || *tt < kEdgeSnapTol || *tt > 1.0 - kEdgeSnapTol) continue;
      Point2 x = pts[k];
      std::vector<Point2> rest;
      rest.reserve(pts.size() - 1);
      for (size_t j = 0; j < pts.size(); ++j) {
        if (j != k && dist(pts[j], x) > kEdgeSnapTol) rest.push_back(pts[j]);
      }
      std::vector<Point2> left, right;
      for (const Point2& p : rest) {
        auto tp = on_segment(a, b, p);
        if (tp) {
          (*tp < *tt ? left : right).push_back(p);
        } else if (on_segment(a, o, p)) {
          left.push_back(p);
        } else {
          right.push_back(p);
        }
      }
      split_rec(Triangle(a, x, o), std::move(left), out);
      split_rec(Triangle(x, b, o), std::move(right), out);
      return;
    }
  }
  if (!pts.empty()) throw std::invalid_argument("split_edge_conform: point not on triangle boundary");
  out.push_back(t);
}

}  // namespace

bool on_triangle_boundary(const Triangle& t, Point2 p, double tol) {
  for (int e = 0; e < 3; ++e) {
    Point2 a = t.vertex(e);
    Point2 b = t.vertex((e + 1) % 3);
    Point2 ab = b - a;
    double len2 = dot(ab, ab);
    if (len2 == 0.0) continue;
    double s = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    if (dist(a + s * ab, p) <= tol) return true;
  }
  return false;
}

std::vector<Triangle> split_edge_conform(const Triangle& t, std::span<const Point2> pts) {
  std::vector<Triangle> out;
  // Points coinciding with triangle vertices need no split.
  std::vector<Point2> inner;
  for (const Point2& p : pts) {
    if (dist(p, t.v0) > kEdgeSnapTol && dist(p, t.v1) > kEdgeSnapTol && dist(p, t.v2) > kEdgeSnapTol) {
      inner.push_back(p);
    }
  }
  split_rec(t, std::move(inner), out);
  return out;
}

double Mesh::total_area() const {
  double a = 0.0;
  for (size_t i = 0; i < triangles.size(); ++i) a += triangle(i).area();
  return a;
}

ConformityReport check_conforming(const Mesh& mesh, const Square& domain) {
  ConformityReport rep;
  rep.orientation_ok = true;
  rep.edges_ok = true;
  rep.boundary_ok = true;

  for (size_t i = 0; i < mesh.triangles.size(); ++i) {
    if (mesh.triangle(i).signed_area() <= 0.0) {
      rep.orientation_ok = false;
      rep.detail = "non-positive orientation at triangle " + std::to_string(i);
      break;
    }
  }

  // Directed edge census: an interior edge must appear once per direction.
  std::map<std::pair<int, int>, int> count;
  for (const auto& tr : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = tr[e];
      int b = tr[(e + 1) % 3];
      count[{a, b}] += 1;
    }
  }
  auto on_domain_boundary = [&](Point2 a, Point2 b) {
    double tol = 1e-9;
    if (std::abs(a.x - domain.x0) < tol && std::abs(b.x - domain.x0) < tol) return true;
    if (std::abs(a.x - domain.x1()) < tol && std::abs(b.x - domain.x1()) < tol) return true;
    if (std::abs(a.y - domain.y0) < tol && std::abs(b.y - domain.y0) < tol) return true;
    if (std::abs(a.y - domain.y1()) < tol && std::abs(b.y - domain.y1()) < tol) return true;
    return false;
  };
  for (const auto& [edge, c] : count) {
    if (c > 1) {
      rep.edges_ok = false;
      rep.detail = "duplicated directed edge";
      break;
    }
    auto rev = count.find({edge.second, edge.first});
    if (rev == count.end()) {
      // Boundary edge: must lie on the domain boundary.
      if (!on_domain_boundary(mesh.vertices[edge.first], mesh.vertices[edge.second])) {
        rep.boundary_ok = false;
        rep.detail = "unmatched interior edge (hanging node)";
        break;
      }
    }
  }

  rep.total_area = mesh.total_area();
  double domain_area = domain.side * domain.side;
  rep.conforming = rep.orientation_ok && rep.edges_ok && rep.boundary_ok &&
                   std::abs(rep.total_area - domain_area) <= 1e-9;
  if (rep.conforming) rep.detail = "pass";
  return rep;
}

int MeshBuilder::add_vertex(Point2 p) {
  Key k{static_cast<int64_t>(std::llround(p.x / kWeldTol)),
        static_cast<int64_t>(std::llround(p.y / kWeldTol))};
  auto it = index_.find(k);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(mesh_.vertices.size());
  mesh_.vertices.push_back(p);
  index_.emplace(k, id);
  return id;
}

void MeshBuilder::add_triangle(const Triangle& t, int group, int cell, bool interior) {
  int a = add_vertex(t.v0);
  int b = add_vertex(t.v1);
  int c = add_vertex(t.v2);
  mesh_.triangles.push_back({a, b, c});
  mesh_.group.push_back(group);
  mesh_.cell.push_back(cell);
  mesh_.interior.push_back(interior ? 1 : 0);
}

Mesh MeshBuilder::take() {
  index_.clear();
  return std::move(mesh_);
}

}  // namespace anisomesh
