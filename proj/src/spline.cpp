#include "anisomesh/spline.hpp"

#include <cmath>
#include <stdexcept>

#include "anisomesh/parallel.hpp"

namespace anisomesh {

namespace {

constexpr double kBorderTol = 1e-9;

// Per-cell data for evaluating the tile-wise best approximation.
struct CellApprox {
  bool active = false;
  LinearPoly base_poly;  // best approximation of the cell form on the base tile
  Triangle base;
  QuadForm form;
};

double tile_deviation_at(const CellApprox& ca, const TileRef& ref, Point2 v) {
  Point2 local = v - ref.shift;
  if (ref.reflected) local = (ca.base.v0 + ca.base.v1) - local;
  return ca.form(local) - ca.base_poly(local);
}

// Mean over T of (vertex interpolant of Q) - Q, in closed form.
double mean_bubble(const QuadForm& Q, const Triangle& T) {
  double vertex_mean = (Q(T.v0) + Q(T.v1) + Q(T.v2)) / 3.0;
  Point2 c = T.centroid();
  Point2 e1 = T.v1 - T.v0;
  Point2 e2 = T.v2 - T.v1;
  Point2 e3 = T.v0 - T.v2;
  double mean_q = Q(c) + (Q(e1.x, e1.y) + Q(e2.x, e2.y) + Q(e3.x, e3.y)) / 36.0;
  return vertex_mean - mean_q;
}

LinearPoly interpolant_from_values(const Triangle& t, double f0, double f1, double f2) {
  double x0 = t.v0.x, y0 = t.v0.y, x1 = t.v1.x, y1 = t.v1.y, x2 = t.v2.x, y2 = t.v2.y;
  double det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
  double a = ((f1 - f0) * (y2 - y0) - (f2 - f0) * (y1 - y0)) / det;
  double b = ((x1 - x0) * (f2 - f0) - (x2 - x0) * (f1 - f0)) / det;
  return {a, b, f0 - a * x0 - b * y0};
}

}  // namespace

Spline assemble(const Field& f, std::shared_ptr<const Triangulation> tri, const Weights& w) {
  if (!tri) throw std::invalid_argument("assemble: null triangulation");
  if (!w.finite()) throw std::invalid_argument("assemble: weights must be finite");
  const Mesh& mesh = tri->mesh;

  // Best approximation of each tiled elliptic cell's quadratic form on its
  // base tile, solved once per cell.
  std::vector<CellApprox> cell_approx(tri->cells.size());
  std::vector<size_t> active_cells;
  for (size_t ci = 0; ci < tri->cells.size(); ++ci) {
    const SquareCell& c = tri->cells[ci];
    if (c.group == kElliptic && !c.fallback) {
      cell_approx[ci].active = true;
      cell_approx[ci].base = c.base;
      cell_approx[ci].form = c.taylor.quad_part;
      active_cells.push_back(ci);
    }
  }
  parallel_for(active_cells.size(), [&](size_t k) {
    CellApprox& ca = cell_approx[active_cells[k]];
    ScalarField form_field = ScalarField::from_quadratic({ca.form, LinearPoly{}});
    ca.base_poly = best_linear(form_field, ca.base, w, 1e-8).poly;
  });

  // Vertex classification: for each vertex record one tiled triangle per
  // incident cell.  Vertices served exclusively by tiled elliptic cells take
  // tile-wise approximation values (averaged when cells meet at a border);
  // everything else interpolates f.
  size_t nv = mesh.vertices.size();
  std::vector<std::vector<std::pair<int, int>>> incident(nv);  // (cell, tiled tri or -1)
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    int ci = mesh.cell[t];
    bool tiled = tri->tiles[t].tiled;
    for (int k = 0; k < 3; ++k) {
      int v = mesh.triangles[t][k];
      auto& list = incident[v];
      auto it = std::find_if(list.begin(), list.end(),
                             [ci](const auto& e) { return e.first == ci; });
      if (it == list.end()) {
        list.push_back({ci, tiled ? static_cast<int>(t) : -1});
      } else if (it->second < 0 && tiled) {
        it->second = static_cast<int>(t);
      }
    }
  }

  Spline s;
  s.tri = tri;
  s.vertex_values.resize(nv);
  for (size_t v = 0; v < nv; ++v) {
    Point2 p = mesh.vertices[v];
    bool all_tiled = !incident[v].empty();
    for (const auto& [ci, t] : incident[v]) {
      all_tiled = all_tiled && t >= 0 && cell_approx[ci].active;
    }
    if (!all_tiled) {
      s.vertex_values[v] = f(p.x, p.y);
      continue;
    }
    // The tile-wise best-approximation value: the local deviation profile
    // subtracted from the function itself.  Writing the profile against f
    // rather than the cell's Taylor polynomial keeps the Taylor remainder
    // out of the vertex data at coarse cell grids, and scaling it by the
    // local-to-center mean-bubble ratio tracks the Hessian variation inside
    // a cell; both refinements vanish as the grid refines and are exact for
    // quadratic fields.  At borders between tiled cells the participating
    // profiles are averaged, which keeps the spline continuous.
    QuadForm local{0.5 * f.fxx(p.x, p.y), 0.5 * f.fyy(p.x, p.y), 0.5 * f.fxy(p.x, p.y)};
    double dev_sum = 0.0;
    for (const auto& [ci, t] : incident[v]) {
      const CellApprox& ca = cell_approx[ci];
      double dev = tile_deviation_at(ca, tri->tiles[t], p);
      double mb_cell = mean_bubble(ca.form, ca.base);
      double mb_local = mean_bubble(local, ca.base);
      double ratio = 1.0;
      if (std::abs(mb_cell) > 1e-300) ratio = std::clamp(mb_local / mb_cell, 0.0, 4.0);
      dev_sum += dev * ratio;
    }
    s.vertex_values[v] = f(p.x, p.y) - dev_sum / static_cast<double>(incident[v].size());
  }

  s.tri_polys.resize(mesh.triangles.size());
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& idx = mesh.triangles[t];
    s.tri_polys[t] = interpolant_from_values(mesh.triangle(t), s.vertex_values[idx[0]],
                                             s.vertex_values[idx[1]], s.vertex_values[idx[2]]);
  }
  return s;
}

double evaluate(const Spline& s, Point2 pt) {
  const Triangulation& tri = *s.tri;
  if (pt.x < -kOnLineTol || pt.x > 1.0 + kOnLineTol || pt.y < -kOnLineTol || pt.y > 1.0 + kOnLineTol) {
    throw std::domain_error("evaluate: point outside the unit square");
  }
  int m = tri.m;
  auto scan_cell = [&](int ix, int iy, double tol) -> const LinearPoly* {
    if (ix < 0 || iy < 0 || ix >= m || iy >= m) return nullptr;
    auto [lo, hi] = tri.cell_ranges[static_cast<size_t>(iy) * m + ix];
    for (size_t t = lo; t < hi; ++t) {
      if (tri.mesh.triangle(t).contains(pt, tol)) return &s.tri_polys[t];
    }
    return nullptr;
  };
  int ix = std::clamp(static_cast<int>(std::floor(pt.x * m)), 0, m - 1);
  int iy = std::clamp(static_cast<int>(std::floor(pt.y * m)), 0, m - 1);
  if (const LinearPoly* p = scan_cell(ix, iy, 1e-12)) return (*p)(pt);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (const LinearPoly* p = scan_cell(ix + dx, iy + dy, 1e-10)) return (*p)(pt);
    }
  }
  // Roundoff pushed the point off every candidate; take the nearest triangle.
  for (size_t t = 0; t < tri.mesh.triangle_count(); ++t) {
    if (tri.mesh.triangle(t).contains(pt, 1e-8)) return s.tri_polys[t](pt);
  }
  throw std::domain_error("evaluate: point location failed");
}

namespace {

double combine_powersum(const std::vector<double>& parts, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : parts) m = std::max(m, v);
    return m;
  }
  double s = 0.0;
  for (double v : parts) s += std::pow(v, p);
  return s > 0.0 ? std::pow(s, 1.0 / p) : 0.0;
}

}  // namespace

ErrorReport global_error(const Field& f, const Spline& s, const Weights& w, double tol) {
  if (!w.finite()) throw std::invalid_argument("global_error: weights must be finite");
  const Triangulation& tri = *s.tri;
  size_t n = tri.mesh.triangle_count();

  ErrorReport rep;
  rep.per_triangle.resize(n);
  std::vector<double> achieved(n, 0.0);
  std::vector<uint8_t> ok(n, 1);

  // Cheap first pass sizes the per-triangle tolerance budget.
  std::vector<double> rough(n, 0.0);
  parallel_for(n, [&](size_t t) {
    Triangle tr = tri.mesh.triangle(t);
    const LinearPoly& P = s.tri_polys[t];
    if (w.p_finite()) {
      ScalarFn g = [&](double x, double y) {
        double d = w.apply(f(x, y) - P(x, y));
        return std::pow(d, w.p);
      };
      double v = apply_rule(rule_d8(), g, tr);
      rough[t] = v > 0.0 ? std::pow(v, 1.0 / w.p) : 0.0;
    } else {
      rough[t] = 1.0;
    }
  });
  double rough_sum = 1e-300;
  for (double v : rough) rough_sum += v;

  parallel_for(n, [&](size_t t) {
    Triangle tr = tri.mesh.triangle(t);
    const LinearPoly& P = s.tri_polys[t];
    double tol_t = w.p_finite()
                       ? std::max(1e-15, tol * std::max(rough[t], 1e-4 * rough_sum) / rough_sum)
                       : tol;
    DeviationResult dr = asym_deviation_full(f.eval, P, tr, w, tol_t);
    rep.per_triangle[t] = dr.value;
    achieved[t] = dr.achieved_tol;
    ok[t] = dr.converged ? 1 : 0;
  });

  rep.total = combine_powersum(rep.per_triangle, w.p);
  for (size_t t = 0; t < n; ++t) {
    rep.achieved_tol += achieved[t];
    rep.converged = rep.converged && ok[t];
  }
  return rep;
}

double free_spline_error(const Field& f, const Triangulation& tri, const Weights& w, double tol) {
  size_t n = tri.mesh.triangle_count();
  std::vector<double> parts(n, 0.0);
  ScalarField sf = f.as_scalar_field();
  parallel_for(n, [&](size_t t) {
    BestLinearOptions o;
    o.quality = SolveQuality::kFast;
    parts[t] = best_linear(sf, tri.mesh.triangle(t), w, std::max(tol, 1e-7), o).error;
  });
  return combine_powersum(parts, w.p);
}

std::vector<ConvergenceRow> convergence_run(const Field& f, const Weights& w,
                                            const std::vector<long>& n_list,
                                            const ConvergenceOptions& opts) {
  for (size_t i = 1; i < n_list.size(); ++i) {
    if (n_list[i] <= n_list[i - 1]) {
      throw std::invalid_argument("convergence_run: budgets must be increasing");
    }
  }
  double predicted = predicted_limit(f, w);
  std::vector<ConvergenceRow> rows;
  for (long n : n_list) {
    BuildParams bp;
    bp.budget = n;
    bp.eps = opts.eps;
    bp.weights = w;
    bp.m_override = opts.m_override;
    bp.full_budget = opts.full_budget;
    auto tri = std::make_shared<Triangulation>(build(f, bp));
    Spline s = assemble(f, tri, w);
    ErrorReport rep = global_error(f, s, w, opts.tol);

    ConvergenceRow row;
    row.n_requested = n;
    row.n_actual = tri->count();
    row.error = rep.total;
    row.n_times_error = static_cast<double>(row.n_actual) * rep.total;
    row.predicted = predicted;
    row.exact = rep.total <= 1e-12;
    row.ratio = predicted > 0.0 ? row.n_times_error / predicted : 0.0;
    if (opts.include_free) {
      row.free_error = free_spline_error(f, *tri, w, opts.tol);
      row.free_ratio = predicted > 0.0
                           ? static_cast<double>(row.n_actual) * row.free_error / predicted
                           : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

ConvergenceSummary summarize_convergence(const std::vector<ConvergenceRow>& rows) {
  ConvergenceSummary sum;
  if (rows.empty()) return sum;
  sum.last_ratio = rows.back().ratio;
  bool all_exact = true;
  bool non_increasing = true;
  for (size_t i = 0; i < rows.size(); ++i) {
    all_exact = all_exact && rows[i].exact;
    if (i > 0 && rows[i].ratio > rows[i - 1].ratio * 1.02) non_increasing = false;
  }
  sum.trend = all_exact ? "exact" : (non_increasing ? "decreasing" : "mixed");
  return sum;
}

}  // namespace anisomesh
