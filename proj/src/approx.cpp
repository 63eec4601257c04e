#include "anisomesh/approx.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace anisomesh {

namespace {

using Vec3 = std::array<double, 3>;

// Evaluation context for the simplex search.  Coefficients are optimized in a
// local frame (centroid-centered, diameter-scaled) to keep the simplex well
// conditioned on small or skinny triangles.
struct Objective {
  // p < inf: fixed-grid weighted power sum; p = inf: lattice max or closed
  // form on explicit quadratics.
  const ScalarField* f = nullptr;
  Triangle tri;
  Weights w;
  Point2 center{};
  double scale = 1.0;

  std::vector<double> gx, gy, gw, gf;  // grid
  std::vector<Point2> lat;             // sup-norm lattice
  std::vector<double> latf;
  bool exact_sup = false;
  mutable long evals = 0;

  LinearPoly to_global(const Vec3& th) const {
    double a = th[0] / scale;
    double b = th[1] / scale;
    double c = th[2] - a * center.x - b * center.y;
    return {a, b, c};
  }
  Vec3 from_global(const LinearPoly& P) const {
    return {P.a * scale, P.b * scale, P.c + P.a * center.x + P.b * center.y};
  }

  void prepare(int grid_levels, int lattice_n) {
    center = tri.centroid();
    scale = std::max(tri.diameter(), 1e-30);
    if (w.p_finite()) {
      FixedGrid g = FixedGrid::make(tri, grid_levels);
      gx = std::move(g.x);
      gy = std::move(g.y);
      gw = std::move(g.w);
      gf.resize(gx.size());
      for (size_t k = 0; k < gx.size(); ++k) gf[k] = f->eval(gx[k], gy[k]);
    } else if (f->quadratic) {
      exact_sup = true;
    } else {
      lat = barycentric_lattice(tri, lattice_n);
      latf.resize(lat.size());
      for (size_t k = 0; k < lat.size(); ++k) latf[k] = f->eval(lat[k].x, lat[k].y);
    }
  }

  // Monotone surrogate of the deviation (p-th power for finite p).
  double operator()(const Vec3& th) const {
    ++evals;
    LinearPoly P = to_global(th);
    if (w.p_finite()) {
      double s = 0.0;
      double p = w.p;
      for (size_t k = 0; k < gx.size(); ++k) {
        double g = gf[k] - (P.a * gx[k] + P.b * gy[k] + P.c);
        double v = g >= 0.0 ? w.alpha * g : -w.beta * g;
        s += gw[k] * std::pow(v, p);
      }
      return s;
    }
    if (exact_sup) return weighted_sup_quadratic(*f->quadratic, P, tri, w);
    double m = -1e300;
    for (size_t k = 0; k < lat.size(); ++k) {
      double g = latf[k] - (P.a * lat[k].x + P.b * lat[k].y + P.c);
      double v = g >= 0.0 ? w.alpha * g : -w.beta * g;
      m = std::max(m, v);
    }
    return m;
  }

  double to_deviation(double obj_value) const {
    if (!w.p_finite()) return obj_value;
    return obj_value > 0.0 ? std::pow(obj_value, 1.0 / w.p) : 0.0;
  }
};

// Standard Nelder-Mead on 3 parameters with shrinking restarts.
template <typename F>
double nelder_mead(const F& fn, Vec3& x, double step, int max_iter, double ftol) {
  std::array<Vec3, 4> s;
  std::array<double, 4> fv;
  s[0] = x;
  for (int i = 0; i < 3; ++i) {
    s[i + 1] = x;
    s[i + 1][i] += step;
  }
  for (int i = 0; i < 4; ++i) fv[i] = fn(s[i]);

  auto order = [&]() {
    for (int i = 1; i < 4; ++i) {
      Vec3 sv = s[i];
      double fvv = fv[i];
      int j = i - 1;
      while (j >= 0 && fv[j] > fvv) {
        s[j + 1] = s[j];
        fv[j + 1] = fv[j];
        --j;
      }
      s[j + 1] = sv;
      fv[j + 1] = fvv;
    }
  };
  order();

  for (int iter = 0; iter < max_iter; ++iter) {
    if (std::abs(fv[3] - fv[0]) <= ftol * (1.0 + std::abs(fv[0]))) break;
    Vec3 cen{};
    for (int i = 0; i < 3; ++i) cen = {cen[0] + s[i][0] / 3.0, cen[1] + s[i][1] / 3.0, cen[2] + s[i][2] / 3.0};
    auto blend = [&](double t) {
      return Vec3{cen[0] + t * (cen[0] - s[3][0]), cen[1] + t * (cen[1] - s[3][1]),
                  cen[2] + t * (cen[2] - s[3][2])};
    };
    Vec3 xr = blend(1.0);
    double fr = fn(xr);
    if (fr < fv[0]) {
      Vec3 xe = blend(2.0);
      double fe = fn(xe);
      if (fe < fr) {
        s[3] = xe;
        fv[3] = fe;
      } else {
        s[3] = xr;
        fv[3] = fr;
      }
    } else if (fr < fv[2]) {
      s[3] = xr;
      fv[3] = fr;
    } else {
      Vec3 xc = blend(fr < fv[3] ? 0.5 : -0.5);
      double fc = fn(xc);
      if (fc < std::min(fr, fv[3])) {
        s[3] = xc;
        fv[3] = fc;
      } else {
        for (int i = 1; i < 4; ++i) {
          for (int d = 0; d < 3; ++d) s[i][d] = s[0][d] + 0.5 * (s[i][d] - s[0][d]);
          fv[i] = fn(s[i]);
        }
      }
    }
    order();
  }
  x = s[0];
  return fv[0];
}

template <typename F>
double minimize_with_restarts(const F& fn, Vec3& x, double step, double ftol) {
  double best = fn(x);
  for (int round = 0; round < 4; ++round) {
    Vec3 cur = x;
    double v = nelder_mead(fn, cur, step, 260, ftol);
    if (v < best) {
      best = v;
      x = cur;
    }
    step *= 0.12;
    if (step < 1e-11) break;
  }
  return best;
}

LinearPoly vertex_interpolant(const ScalarField& f, const Triangle& t) {
  // Solve [x y 1] coeffs = f(v) for the three vertices.
  double x0 = t.v0.x, y0 = t.v0.y, x1 = t.v1.x, y1 = t.v1.y, x2 = t.v2.x, y2 = t.v2.y;
  double f0 = f(x0, y0), f1 = f(x1, y1), f2 = f(x2, y2);
  double det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
  if (std::abs(det) < 1e-300) return {0.0, 0.0, (f0 + f1 + f2) / 3.0};
  double a = ((f1 - f0) * (y2 - y0) - (f2 - f0) * (y1 - y0)) / det;
  double b = ((x1 - x0) * (f2 - f0) - (x2 - x0) * (f1 - f0)) / det;
  double c = f0 - a * x0 - b * y0;
  return {a, b, c};
}

LinearPoly least_squares_fit(const Objective& ob) {
  // Unweighted L2 projection onto linear polynomials over the prepared grid
  // (or lattice), a robust convex-interior start.
  const std::vector<double>* X;
  const std::vector<double>* Y;
  const std::vector<double>* F;
  std::vector<double> lx, ly, lf;
  if (!ob.gx.empty()) {
    X = &ob.gx;
    Y = &ob.gy;
    F = &ob.gf;
  } else if (!ob.lat.empty()) {
    for (const Point2& p : ob.lat) {
      lx.push_back(p.x);
      ly.push_back(p.y);
    }
    lf = ob.latf;
    X = &lx;
    Y = &ly;
    F = &lf;
  } else {
    // Exact-sup path: sample a small lattice for the seed only.
    for (const Point2& p : barycentric_lattice(ob.tri, 6)) {
      lx.push_back(p.x);
      ly.push_back(p.y);
      lf.push_back(ob.f->eval(p.x, p.y));
    }
    X = &lx;
    Y = &ly;
    F = &lf;
  }
  double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0, s1 = 0, sfx = 0, sfy = 0, sf = 0;
  for (size_t k = 0; k < X->size(); ++k) {
    double x = (*X)[k], y = (*Y)[k], fv = (*F)[k];
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    sx += x;
    sy += y;
    s1 += 1.0;
    sfx += fv * x;
    sfy += fv * y;
    sf += fv;
  }
  // Solve the 3x3 normal equations by Cramer.
  double m[3][3] = {{sxx, sxy, sx}, {sxy, syy, sy}, {sx, sy, s1}};
  double r[3] = {sfx, sfy, sf};
  double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  if (std::abs(det) < 1e-300) return {0.0, 0.0, sf / std::max(s1, 1.0)};
  auto solve_col = [&](int col) {
    double mm[3][3];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) mm[i][j] = (j == col) ? r[i] : m[i][j];
    }
    double d = mm[0][0] * (mm[1][1] * mm[2][2] - mm[1][2] * mm[2][1]) -
               mm[0][1] * (mm[1][0] * mm[2][2] - mm[1][2] * mm[2][0]) +
               mm[0][2] * (mm[1][0] * mm[2][1] - mm[1][1] * mm[2][0]);
    return d / det;
  };
  return {solve_col(0), solve_col(1), solve_col(2)};
}

}  // namespace

ApproxResult best_linear(const ScalarField& f, const Triangle& t, const Weights& w, double tol,
                         const BestLinearOptions& opts) {
  if (!w.finite()) throw std::invalid_argument("best_linear: weights must be finite");
  if (t.area() <= kSliverArea) throw std::invalid_argument("best_linear: degenerate triangle");
  if (!(tol > 0.0)) throw std::invalid_argument("best_linear: tol must be positive");

  bool accurate = opts.quality == SolveQuality::kAccurate;
  Objective ob;
  ob.f = &f;
  ob.tri = t;
  ob.w = w;
  ob.prepare(accurate ? 2 : 2, 16);

  // Deterministic multistarts: the vertex interpolant, the L2 fit and
  // weight-balanced shifts of both.
  LinearPoly interp = vertex_interpolant(f, t);
  LinearPoly l2 = least_squares_fit(ob);
  double dev_range = weighted_sup([&](double x, double y) { return f(x, y) - interp(x, y); }, t,
                                  Weights(kInf, 1.0, 1.0), 1e-6);
  double shift = dev_range * w.alpha / (w.alpha + w.beta);
  std::array<LinearPoly, 4> seeds = {interp,
                                     l2,
                                     LinearPoly{interp.a, interp.b, interp.c + shift},
                                     LinearPoly{l2.a, l2.b, l2.c - 0.5 * shift}};

  double step = 0.25 * std::max(dev_range, 1e-12);
  double ftol = ob.w.p_finite() ? 1e-12 : 1e-13;

  Vec3 best_x{};
  double best_v = 1e300;
  double worst_v = -1e300;
  auto run_seed = [&](const LinearPoly& seed) {
    Vec3 x = ob.from_global(seed);
    double v = minimize_with_restarts(ob, x, step, ftol);
    if (v < best_v) {
      best_v = v;
      best_x = x;
    }
    worst_v = std::max(worst_v, v);
  };
  for (const LinearPoly& s : seeds) run_seed(s);
  if (opts.warm_start) run_seed(*opts.warm_start);
  double spread = ob.to_deviation(worst_v) - ob.to_deviation(best_v);

  if (accurate && ob.w.p_finite()) {
    // Finer fixed grid, then a short polish against the adaptive quadrature.
    Objective fine = ob;
    fine.prepare(4, 32);
    best_v = minimize_with_restarts(fine, best_x, 0.02 * step, ftol);
    LinearPoly cur = fine.to_global(best_x);
    auto adaptive_obj = [&](const Vec3& th) {
      LinearPoly P = fine.to_global(th);
      return asym_deviation(f.eval, P, t, w, std::max(tol * 0.1, 1e-9));
    };
    Vec3 x = best_x;
    double polish_step = 2e-4 * std::max(dev_range, 1e-9);
    for (int round = 0; round < std::max(1, opts.polish_rounds); ++round) {
      nelder_mead(adaptive_obj, x, polish_step, 80, 1e-11);
      polish_step *= 0.15;
    }
    best_x = x;
    ob = fine;
    (void)cur;
  } else if (accurate && !ob.w.p_finite() && !ob.exact_sup) {
    Objective fine = ob;
    fine.prepare(2, 48);
    best_v = minimize_with_restarts(fine, best_x, 0.02 * step, ftol);
    ob = fine;
  }

  ApproxResult res;
  res.poly = ob.to_global(best_x);
  DeviationResult dr = asym_deviation_full(f.eval, res.poly, t, w, std::max(tol * 0.1, 1e-10));
  if (!w.p_finite() && f.quadratic) {
    res.error = weighted_sup_quadratic(*f.quadratic, res.poly, t, w);
  } else {
    res.error = dr.value;
  }
  res.evaluations = ob.evals + dr.evaluations;
  res.converged = dr.converged && spread <= 10.0 * tol * (1.0 + res.error);
  return res;
}

ApproxResult one_sided_best(const ScalarField& f, const Triangle& t, double p, Side side,
                            double tol) {
  if (!(p >= 1.0)) throw std::invalid_argument("one_sided_best: p must be >= 1");
  const double penalties[] = {1e2, 1e3, 1e4, 1e6};

  ApproxResult last;
  double prev_err = -1.0;
  bool settled = false;
  std::optional<LinearPoly> warm;
  long evals = 0;
  for (double pen : penalties) {
    Weights w = side == Side::kAbove ? Weights(p, pen, 1.0) : Weights(p, 1.0, pen);
    BestLinearOptions o;
    o.quality = SolveQuality::kAccurate;
    o.warm_start = warm;
    last = best_linear(f, t, w, tol, o);
    evals += last.evaluations;
    warm = last.poly;
    if (prev_err >= 0.0 && std::abs(last.error - prev_err) < tol) {
      settled = true;
      break;
    }
    prev_err = last.error;
  }

  // Feasibility projection: the smallest constant shift restoring the sign
  // constraint (exact extrema for quadratic fields, a dense lattice else).
  auto project = [&](LinearPoly P) -> LinearPoly {
    double violation = 0.0;
    if (f.quadratic) {
      double lo, hi;
      quadratic_range(*f.quadratic, P, t, lo, hi);
      violation = side == Side::kAbove ? std::max(hi, 0.0) : std::max(-lo, 0.0);
    } else {
      for (const Point2& pt : barycentric_lattice(t, 48)) {
        double g = f(pt.x, pt.y) - P(pt.x, pt.y);
        violation = std::max(violation, side == Side::kAbove ? g : -g);
      }
    }
    P.c += side == Side::kAbove ? violation : -violation;
    return P;
  };

  // Penalty methods stall near the constraint at extreme weights; polishing
  // the projected problem removes the stiffness.
  Weights plain(p, 1.0, 1.0);
  FixedGrid grid = std::isfinite(p) ? FixedGrid::make(t, 3) : FixedGrid{};
  std::vector<double> fvals(grid.size());
  for (size_t k = 0; k < grid.size(); ++k) fvals[k] = f(grid.x[k], grid.y[k]);
  auto plain_error_of = [&](const LinearPoly& P) {
    if (std::isfinite(p)) {
      double s = 0.0;
      for (size_t k = 0; k < grid.size(); ++k) {
        s += grid.w[k] * std::pow(std::abs(fvals[k] - (P.a * grid.x[k] + P.b * grid.y[k] + P.c)), p);
      }
      return s;
    }
    if (f.quadratic) return weighted_sup_quadratic(*f.quadratic, P, t, plain);
    return weighted_sup([&](double x, double y) { return f(x, y) - P(x, y); }, t, plain, tol);
  };

  Point2 center = t.centroid();
  double scale = t.diameter();
  auto to_global = [&](const std::array<double, 3>& th) -> LinearPoly {
    double a = th[0] / scale, b = th[1] / scale;
    return {a, b, th[2] - a * center.x - b * center.y};
  };
  auto objective = [&](const std::array<double, 3>& th) {
    return plain_error_of(project(to_global(th)));
  };
  LinearPoly seed = last.poly;
  std::array<double, 3> x{seed.a * scale, seed.b * scale,
                          seed.c + seed.a * center.x + seed.b * center.y};
  minimize_with_restarts(objective, x, 0.05 * std::max(std::abs(last.error), 1e-6), 1e-13);
  LinearPoly P = project(to_global(x));

  ApproxResult res;
  res.poly = P;
  if (std::isinf(p) && f.quadratic) {
    res.error = weighted_sup_quadratic(*f.quadratic, P, t, plain);
  } else {
    res.error = asym_deviation(f.eval, P, t, plain, std::max(tol * 0.1, 1e-10));
  }
  res.converged = settled;
  res.evaluations = evals;
  return res;
}

namespace {

std::mutex g_constant_mutex;
std::map<std::tuple<long long, long long, long long>, double> g_constant_cache;

long long quantize_key(double v) {
  if (std::isinf(v)) return std::numeric_limits<long long>::max();
  return static_cast<long long>(std::llround(v * 1e12));
}

}  // namespace

double constant_C(double p, double alpha, double beta, double tol) {
  Weights check(p, alpha, beta);
  (void)check;
  auto key = std::make_tuple(quantize_key(p), quantize_key(alpha), quantize_key(beta));
  {
    std::lock_guard<std::mutex> lock(g_constant_mutex);
    auto it = g_constant_cache.find(key);
    if (it != g_constant_cache.end()) return it->second;
  }

  Triangle t0 = unit_equilateral();
  ScalarField q = ScalarField::from_quadratic({QuadForm{1.0, 1.0, 0.0}, LinearPoly{}});
  double value;
  if (std::isinf(alpha)) {
    value = beta * one_sided_best(q, t0, p, Side::kAbove, tol).error;
  } else if (std::isinf(beta)) {
    value = alpha * one_sided_best(q, t0, p, Side::kBelow, tol).error;
  } else {
    BestLinearOptions o;
    o.polish_rounds = 3;
    value = best_linear(q, t0, Weights(p, alpha, beta), tol, o).error;
  }

  std::lock_guard<std::mutex> lock(g_constant_mutex);
  g_constant_cache.emplace(key, value);
  return value;
}

EigenPair eigen_sym2(double A, double B, double C) {
  EigenPair e;
  double half_tr = 0.5 * (A + B);
  double disc = std::sqrt(std::max(0.0, 0.25 * (A - B) * (A - B) + C * C));
  // Larger-magnitude root first, the companion via the trace.
  double l1 = half_tr >= 0.0 ? half_tr + disc : half_tr - disc;
  double l2 = 2.0 * half_tr - l1;
  e.lambda_max = std::max(l1, l2);
  e.lambda_min = std::min(l1, l2);

  auto eigvec = [&](double lambda) -> Point2 {
    Point2 c1{C, lambda - A};
    Point2 c2{lambda - B, C};
    Point2 v = dot(c1, c1) >= dot(c2, c2) ? c1 : c2;
    double n = norm(v);
    if (n < 1e-300) return {1.0, 0.0};
    v = (1.0 / n) * v;
    if (std::abs(v.x) >= std::abs(v.y) ? v.x < 0.0 : v.y < 0.0) v = -1.0 * v;
    return v;
  };
  if (disc < 1e-300) {
    e.e_min = {1.0, 0.0};
    e.e_max = {0.0, 1.0};
  } else {
    e.e_min = eigvec(e.lambda_min);
    e.e_max = eigvec(e.lambda_max);
  }
  return e;
}

Triangle optimal_triangle(const QuadForm& Q, double target_area) {
  if (!Q.positive_definite()) {
    throw std::invalid_argument("optimal_triangle: form must be positive definite");
  }
  if (!(target_area > 0.0)) throw std::invalid_argument("optimal_triangle: area must be positive");
  EigenPair e = eigen_sym2(Q.A, Q.B, Q.C);
  double s = std::sqrt(target_area * std::sqrt(Q.det()));
  AffineMap map;
  double d1 = s / std::sqrt(e.lambda_min);
  double d2 = s / std::sqrt(e.lambda_max);
  map.m00 = e.e_min.x * d1;
  map.m10 = e.e_min.y * d1;
  map.m01 = e.e_max.x * d2;
  map.m11 = e.e_max.y * d2;
  return map.apply(unit_equilateral());
}

double form_error_floor(const QuadForm& Q, const Weights& w, double area) {
  if (!Q.positive_definite()) {
    throw std::invalid_argument("form_error_floor: form must be positive definite");
  }
  double exponent = w.p_finite() ? 1.0 + 1.0 / w.p : 1.0;
  return constant_C(w.p, w.alpha, w.beta) * std::sqrt(Q.det()) * std::pow(area, exponent);
}

}  // namespace anisomesh
