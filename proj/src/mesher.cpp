#include "anisomesh/mesher.hpp"

#include <cmath>
#include <stdexcept>

#include "anisomesh/parallel.hpp"

namespace anisomesh {

namespace {

constexpr double kBorderTol = 1e-9;

int count_safe_cap(long n) {
  int cap = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n) / 8.0)));
  return std::max(1, cap);
}

}  // namespace

ComputeMResult compute_m(const Field& f, double eps, long N, const Weights& w, int cap) {
  if (!(eps > 0.0) || N < 1) throw std::invalid_argument("compute_m: need eps > 0 and N >= 1");
  double wmax = std::max(w.alpha, w.beta);
  ComputeMResult res;
  res.m = cap;
  for (int m = 1; m <= cap; ++m) {
    double lhs = 2.0 * wmax * omega2(f, 1.0 / m) / (static_cast<double>(m) * m);
    if (lhs <= eps / static_cast<double>(N)) {
      res.m = m;
      res.mn_satisfied = true;
      break;
    }
  }
  res.omega_satisfied = lambda_min_modulus(f, 1.0 / res.m) <= eps;
  return res;
}

int classify_cell(const SpectralData& spec, double eps, double lambda_mod) {
  if (spec.lambda_min >= eps) return kElliptic;
  if (spec.lambda_min > lambda_mod) return kSmallPositive;
  if (spec.lambda_max >= eps * eps) return kCylinderLike;
  return kNearFlat;
}

void allocate_budgets(std::vector<SquareCell>& cells, long N, double eps, double mu, double p,
                      bool full_budget) {
  double t = std::isinf(p) ? 0.5 : p / (2.0 * (p + 1.0));
  double denom = 0.0;
  for (const SquareCell& c : cells) {
    if (c.group == kElliptic) denom += std::pow(std::max(c.hessian, 0.0), t);
  }
  if (denom <= 0.0) return;
  double factor = full_budget ? 1.0 : std::max(0.0, 1.0 - 23.0 * eps - 2.0 * mu);
  for (SquareCell& c : cells) {
    if (c.group != kElliptic) continue;
    double share = std::pow(std::max(c.hessian, 0.0), t) / denom;
    c.budget = static_cast<long>(std::floor(static_cast<double>(N) * factor * share)) + 1;
  }
}

namespace {

bool inside_square(const Triangle& t, const Square& sq) {
  return sq.inset_depth(t.v0) >= -kOnLineTol && sq.inset_depth(t.v1) >= -kOnLineTol &&
         sq.inset_depth(t.v2) >= -kOnLineTol;
}

bool strictly_interior(const Triangle& t, const Square& sq) {
  return sq.inset_depth(t.v0) > kBorderTol && sq.inset_depth(t.v1) > kBorderTol &&
         sq.inset_depth(t.v2) > kBorderTol;
}

void append_uniform_grid(std::vector<CellMeshEntry>& out, const Square& sq, int r) {
  double h = sq.side / r;
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      Point2 p00{sq.x0 + i * h, sq.y0 + j * h};
      Point2 p10{sq.x0 + (i + 1) * h, sq.y0 + j * h};
      Point2 p01{sq.x0 + i * h, sq.y0 + (j + 1) * h};
      Point2 p11{sq.x0 + (i + 1) * h, sq.y0 + (j + 1) * h};
      for (const Triangle& t : {Triangle(p00, p10, p11), Triangle(p00, p11, p01)}) {
        out.push_back({t, strictly_interior(t, sq), TileRef{}});
      }
    }
  }
}

void append_tiling(std::vector<CellMeshEntry>& out, const Triangle& base, const Square& sq,
                   bool carries_tile) {
  for (const TilePlacement& p : tile_cover_placements(base, sq)) {
    Triangle t = place_tile(base, p);
    TileRef ref{p.shift, p.reflected, carries_tile};
    if (inside_square(t, sq)) {
      out.push_back({t, strictly_interior(t, sq), ref});
      continue;
    }
    auto poly = clip_to_square(t, sq);
    if (!poly) continue;
    for (const Triangle& piece : fan_triangulate(*poly)) {
      out.push_back({piece, false, ref});
    }
  }
}

}  // namespace

std::vector<CellMeshEntry> build_cell_mesh(SquareCell& cell, int m, int r1, int r2) {
  std::vector<CellMeshEntry> out;
  const Square& sq = cell.square;
  switch (cell.group) {
    case kElliptic: {
      double tile_area = 1.0 / (static_cast<double>(m) * m * static_cast<double>(cell.budget));
      Triangle base = optimal_triangle(cell.taylor.quad_part, tile_area);
      if (base.diameter() > sq.side) {
        // Budget too small for the cell: the tile cannot fit, mesh plainly.
        cell.fallback = true;
        append_uniform_grid(out, sq, 1);
        break;
      }
      // When the tiling rows run parallel to the cell sides, rescale the tile
      // slightly so an integer number of rows fits: rows then sit flush on
      // the horizontal borders instead of being clipped.  The count/error
      // product is first-order invariant under this rescaling.
      Point2 row_dir = base.v1 - base.v2;
      Point2 rise = base.v0 - base.v2;
      double period = 0.0;
      if (std::abs(row_dir.y) < 1e-12) {
        period = std::abs(rise.y);
      } else if (std::abs(row_dir.x) < 1e-12) {
        period = std::abs(rise.x);
      }
      if (period > 0.0) {
        double rows = sq.side / period;
        double sigma = rows / std::max(1.0, std::round(rows));
        if (std::abs(sigma - 1.0) < 0.2) {
          base = Triangle(sigma * base.v0, sigma * base.v1, sigma * base.v2);
        }
      }
      cell.base = base;
      append_tiling(out, base, sq, true);
      break;
    }
    case kSmallPositive: {
      append_uniform_grid(out, sq, r1);
      break;
    }
    case kCylinderLike: {
      double len = sq.side;
      double wid = sq.side / (static_cast<double>(r2) * r2);
      Point2 xi = cell.spec.e_min;
      Point2 eta = cell.spec.e_max;
      Triangle base{{0.0, 0.0}, {len * xi.x, len * xi.y},
                    {len * xi.x + wid * eta.x, len * xi.y + wid * eta.y}};
      cell.base = base;
      append_tiling(out, base, sq, false);
      break;
    }
    case kNearFlat:
    default: {
      append_uniform_grid(out, sq, r2);
      break;
    }
  }
  return out;
}

namespace {

struct BorderPoints {
  // Vertices of a cell mesh lying on each of the four cell border lines.
  std::vector<Point2> side[4];  // 0 left, 1 right, 2 bottom, 3 top
};

BorderPoints collect_border_points(const std::vector<CellMeshEntry>& entries, const Square& sq) {
  BorderPoints bp;
  auto consider = [&](Point2 v) {
    if (std::abs(v.x - sq.x0) <= kBorderTol) bp.side[0].push_back(v);
    if (std::abs(v.x - sq.x1()) <= kBorderTol) bp.side[1].push_back(v);
    if (std::abs(v.y - sq.y0) <= kBorderTol) bp.side[2].push_back(v);
    if (std::abs(v.y - sq.y1()) <= kBorderTol) bp.side[3].push_back(v);
  };
  for (const CellMeshEntry& e : entries) {
    consider(e.tri.v0);
    consider(e.tri.v1);
    consider(e.tri.v2);
  }
  // Vertices are shared by several triangles; weld each side list.
  for (auto& side : bp.side) {
    std::sort(side.begin(), side.end(), [](Point2 a, Point2 b) {
      return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    side.erase(std::unique(side.begin(), side.end(),
                           [](Point2 a, Point2 b) { return dist(a, b) <= kWeldTol; }),
               side.end());
  }
  return bp;
}

}  // namespace

Triangulation glue(std::vector<std::vector<CellMeshEntry>> cell_meshes,
                   std::vector<SquareCell> cells, int m, const BuildParams& params) {
  std::vector<BorderPoints> borders(cells.size());
  for (size_t i = 0; i < cells.size(); ++i) {
    borders[i] = collect_border_points(cell_meshes[i], cells[i].square);
  }

  auto cell_index = [&](int ix, int iy) { return iy * m + ix; };

  Triangulation tri;
  MeshBuilder builder;
  tri.cells = std::move(cells);
  tri.cell_ranges.resize(tri.cells.size());

  std::vector<Point2> candidates;
  for (size_t ci = 0; ci < tri.cells.size(); ++ci) {
    int ix = static_cast<int>(ci) % m;
    int iy = static_cast<int>(ci) / m;
    const Square& sq = tri.cells[ci].square;
    size_t begin = tri.tiles.size();
    for (const CellMeshEntry& e : cell_meshes[ci]) {
      candidates.clear();
      double xmin = std::min({e.tri.v0.x, e.tri.v1.x, e.tri.v2.x});
      double xmax = std::max({e.tri.v0.x, e.tri.v1.x, e.tri.v2.x});
      double ymin = std::min({e.tri.v0.y, e.tri.v1.y, e.tri.v2.y});
      double ymax = std::max({e.tri.v0.y, e.tri.v1.y, e.tri.v2.y});
      // Neighbour border vertices on borders this triangle touches.
      if (ix > 0 && xmin <= sq.x0 + kBorderTol) {
        for (Point2 p : borders[cell_index(ix - 1, iy)].side[1]) {
          if (p.y >= ymin - kBorderTol && p.y <= ymax + kBorderTol) candidates.push_back(p);
        }
      }
      if (ix + 1 < m && xmax >= sq.x1() - kBorderTol) {
        for (Point2 p : borders[cell_index(ix + 1, iy)].side[0]) {
          if (p.y >= ymin - kBorderTol && p.y <= ymax + kBorderTol) candidates.push_back(p);
        }
      }
      if (iy > 0 && ymin <= sq.y0 + kBorderTol) {
        for (Point2 p : borders[cell_index(ix, iy - 1)].side[3]) {
          if (p.x >= xmin - kBorderTol && p.x <= xmax + kBorderTol) candidates.push_back(p);
        }
      }
      if (iy + 1 < m && ymax >= sq.y1() - kBorderTol) {
        for (Point2 p : borders[cell_index(ix, iy + 1)].side[2]) {
          if (p.x >= xmin - kBorderTol && p.x <= xmax + kBorderTol) candidates.push_back(p);
        }
      }
      // Only points that actually sit on this triangle's edges participate.
      std::erase_if(candidates, [&](Point2 p) { return !on_triangle_boundary(e.tri, p); });
      int group = tri.cells[ci].group;
      if (candidates.empty()) {
        builder.add_triangle(e.tri, group, static_cast<int>(ci), e.interior);
        tri.tiles.push_back(e.tile);
      } else {
        for (const Triangle& piece : split_edge_conform(e.tri, candidates)) {
          builder.add_triangle(piece, group, static_cast<int>(ci), e.interior);
          tri.tiles.push_back(e.tile);
        }
      }
    }
    tri.cell_ranges[ci] = {begin, tri.tiles.size()};
  }

  tri.mesh = builder.take();
  tri.params = params;
  tri.m = m;
  return tri;
}

Triangulation build(const Field& f, const BuildParams& params) {
  if (params.budget < 1) throw std::invalid_argument("build: budget must be positive");
  if (!(params.eps > 0.0 && params.eps < 1.0)) throw std::invalid_argument("build: eps must be in (0,1)");
  if (!params.weights.finite()) throw std::invalid_argument("build: weights must be finite");
  if (!f.hessian_nonnegative()) {
    throw std::invalid_argument("build: field fails the nonnegative-Hessian validation");
  }

  long N = params.budget;

  // Clamp eps until 23 eps + 2 mu(eps) < 1.
  double eps = params.eps;
  double mu = mu_G(f, eps);
  while (23.0 * eps + 2.0 * mu >= 1.0 && eps > 1e-9) {
    eps *= 0.9;
    mu = mu_G(f, eps);
  }

  ComputeMResult cm = compute_m(f, eps, N, params.weights, params.cap);
  int m;
  if (params.m_override) {
    m = std::clamp(*params.m_override, 1, params.cap);
  } else if (cm.mn_satisfied && cm.omega_satisfied) {
    m = cm.m;
  } else {
    // Desk-scale fallback: the asymptotic scale rule is out of reach, so take
    // the smallest grid on which both the lambda_min modulus and the
    // within-cell sqrt-Hessian variation settle, bounded so the triangle
    // count stays within the budget.
    int ccap = count_safe_cap(N);
    double sqh_scale = 0.7 * sqrtH_seminorm(f, kInf);
    m = ccap;
    for (int k = 1; k <= ccap; ++k) {
      if (lambda_min_modulus(f, 1.0 / k) <= eps && sqrtH_modulus(f, 1.0 / k) <= sqh_scale) {
        m = k;
        break;
      }
    }
  }

  double lambda_mod = lambda_min_modulus(f, 1.0 / m);

  std::vector<SquareCell> cells(static_cast<size_t>(m) * m);
  for (int iy = 0; iy < m; ++iy) {
    for (int ix = 0; ix < m; ++ix) {
      SquareCell& c = cells[static_cast<size_t>(iy) * m + ix];
      c.index = iy * m + ix;
      c.square = {static_cast<double>(ix) / m, static_cast<double>(iy) / m, 1.0 / m};
      c.center = {(ix + 0.5) / m, (iy + 0.5) / m};
      c.spec = spectral(f, c.center);
      c.taylor = taylor2(f, c.center);
      c.hessian = f.hessian(c.center.x, c.center.y);
      c.group = classify_cell(c.spec, eps, lambda_mod);
    }
  }

  allocate_budgets(cells, N, eps, mu, params.weights.p, params.full_budget);

  double cells_d = static_cast<double>(m) * m;
  int r1 = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(N) / cells_d) + 1e-12)));
  int r2 = std::max(1, static_cast<int>(std::floor(std::sqrt(eps * static_cast<double>(N) / cells_d) + 1e-12)));

  std::vector<std::vector<CellMeshEntry>> cell_meshes(cells.size());
  parallel_for(cells.size(), [&](size_t i) { cell_meshes[i] = build_cell_mesh(cells[i], m, r1, r2); });

  Triangulation tri = glue(std::move(cell_meshes), std::move(cells), m, params);
  tri.eps_effective = eps;
  tri.mu = mu;

  MesherDiagnostics& d = tri.diag;
  d.m = m;
  d.mn_satisfied = cm.mn_satisfied;
  d.omega_satisfied = cm.omega_satisfied;
  d.eps_effective = eps;
  d.mu = mu;
  d.r1 = r1;
  d.r2 = r2;
  for (const SquareCell& c : tri.cells) {
    d.group_histogram[c.group] += 1;
    if (c.fallback) d.fallback_cells += 1;
  }
  d.triangle_count = tri.count();
  d.count_within_budget = d.triangle_count <= N;
  d.conforming = check_conforming(tri.mesh, Square{0.0, 0.0, 1.0}).conforming;
  return tri;
}

}  // namespace anisomesh
