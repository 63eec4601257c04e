#include "anisomesh/field.hpp"

#include <cmath>
#include <deque>
#include <mutex>
#include <stdexcept>

#include <json.hpp>

namespace anisomesh {

namespace detail {

constexpr int kModGrid = 256;   // modulus-of-continuity grid
constexpr int kMuGrid = 512;    // measure / validation grid

struct FieldCache {
  std::mutex mu;
  bool have_second = false;
  std::vector<double> gxx, gxy, gyy;  // kModGrid^2 nodes
  std::vector<double> glam;           // lambda_min on the same nodes
  std::vector<double> gsqh;           // sqrt(max(H, 0)) on the same nodes
  bool have_mu_lambda = false;
  std::vector<double> mu_lambda;  // lambda_min at kMuGrid^2 cell centers
  bool have_min_h = false;
  double min_h = 0.0;
};

std::shared_ptr<FieldCache> make_field_cache() { return std::make_shared<FieldCache>(); }

}  // namespace detail

namespace {

using detail::kModGrid;
using detail::kMuGrid;

double lambda_min_at(const Field& f, double x, double y) {
  double a = 0.5 * f.fxx(x, y);
  double b = 0.5 * f.fyy(x, y);
  double c = 0.5 * f.fxy(x, y);
  double half_tr = 0.5 * (a + b);
  double disc = std::sqrt(std::max(0.0, 0.25 * (a - b) * (a - b) + c * c));
  return half_tr - disc;
}

void ensure_second_grids(const Field& f) {
  auto& c = *f.cache;
  std::lock_guard<std::mutex> lock(c.mu);
  if (c.have_second) return;
  int n = kModGrid;
  c.gxx.resize(static_cast<size_t>(n) * n);
  c.gxy.resize(c.gxx.size());
  c.gyy.resize(c.gxx.size());
  c.glam.resize(c.gxx.size());
  c.gsqh.resize(c.gxx.size());
  for (int i = 0; i < n; ++i) {
    double x = static_cast<double>(i) / (n - 1);
    for (int j = 0; j < n; ++j) {
      double y = static_cast<double>(j) / (n - 1);
      size_t k = static_cast<size_t>(i) * n + j;
      c.gxx[k] = f.fxx(x, y);
      c.gxy[k] = f.fxy(x, y);
      c.gyy[k] = f.fyy(x, y);
      c.glam[k] = lambda_min_at(f, x, y);
      c.gsqh[k] = std::sqrt(std::max(c.gxx[k] * c.gyy[k] - c.gxy[k] * c.gxy[k], 0.0));
    }
  }
  c.have_second = true;
}

// Sliding-window max-min over a square window spanning `win` grid steps.
double window_oscillation(const std::vector<double>& g, int n, int win) {
  win = std::min(win, n - 1);
  int m = n - win;  // window positions per axis
  auto slide = [&](const std::vector<double>& in, std::vector<double>& out, bool take_max) {
    // Row-wise monotonic deque over windows of length win+1.
    out.resize(static_cast<size_t>(n) * m);
    for (int i = 0; i < n; ++i) {
      std::deque<int> dq;
      for (int j = 0; j < n; ++j) {
        double v = in[static_cast<size_t>(i) * n + j];
        while (!dq.empty()) {
          double back = in[static_cast<size_t>(i) * n + dq.back()];
          if (take_max ? back <= v : back >= v) {
            dq.pop_back();
          } else {
            break;
          }
        }
        dq.push_back(j);
        if (dq.front() <= j - (win + 1)) dq.pop_front();
        if (j >= win) out[static_cast<size_t>(i) * m + (j - win)] = in[static_cast<size_t>(i) * n + dq.front()];
      }
    }
  };
  std::vector<double> rmax, rmin;
  slide(g, rmax, true);
  slide(g, rmin, false);
  // Column pass over the row results.
  double best = 0.0;
  for (int j = 0; j < m; ++j) {
    std::deque<int> dq_max, dq_min;
    for (int i = 0; i < n; ++i) {
      double vmax = rmax[static_cast<size_t>(i) * m + j];
      double vmin = rmin[static_cast<size_t>(i) * m + j];
      while (!dq_max.empty() && rmax[static_cast<size_t>(dq_max.back()) * m + j] <= vmax) dq_max.pop_back();
      dq_max.push_back(i);
      if (dq_max.front() <= i - (win + 1)) dq_max.pop_front();
      while (!dq_min.empty() && rmin[static_cast<size_t>(dq_min.back()) * m + j] >= vmin) dq_min.pop_back();
      dq_min.push_back(i);
      if (dq_min.front() <= i - (win + 1)) dq_min.pop_front();
      if (i >= win) {
        double osc = rmax[static_cast<size_t>(dq_max.front()) * m + j] -
                     rmin[static_cast<size_t>(dq_min.front()) * m + j];
        best = std::max(best, osc);
      }
    }
  }
  return best;
}

int window_for_delta(double delta) {
  int win = static_cast<int>(std::ceil(delta * (kModGrid - 1) - 1e-12));
  return std::max(win, 1);
}

void ensure_mu_lambda(const Field& f) {
  auto& c = *f.cache;
  std::lock_guard<std::mutex> lock(c.mu);
  if (c.have_mu_lambda) return;
  int n = kMuGrid;
  c.mu_lambda.resize(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    double x = (i + 0.5) / n;
    for (int j = 0; j < n; ++j) {
      double y = (j + 0.5) / n;
      c.mu_lambda[static_cast<size_t>(i) * n + j] = lambda_min_at(f, x, y);
    }
  }
  c.have_mu_lambda = true;
}

}  // namespace

double Field::min_hessian_on_grid() const {
  auto& c = *cache;
  {
    std::lock_guard<std::mutex> lock(c.mu);
    if (c.have_min_h) return c.min_h;
  }
  int n = kMuGrid;
  double mn = 1e300;
  for (int i = 0; i < n; ++i) {
    double x = (i + 0.5) / n;
    for (int j = 0; j < n; ++j) {
      double y = (j + 0.5) / n;
      mn = std::min(mn, hessian(x, y));
    }
  }
  std::lock_guard<std::mutex> lock(c.mu);
  c.min_h = mn;
  c.have_min_h = true;
  return mn;
}

Quadratic TaylorQuadratic::as_quadratic() const {
  const QuadForm& Q = quad_part;
  double cx = center.x, cy = center.y;
  Quadratic out;
  out.quad = Q;
  out.lin.a = linear_part.a - 2.0 * Q.A * cx - 2.0 * Q.C * cy;
  out.lin.b = linear_part.b - 2.0 * Q.B * cy - 2.0 * Q.C * cx;
  out.lin.c = linear_part.c + Q(cx, cy);
  return out;
}

SpectralData spectral(const Field& f, Point2 pt) {
  EigenPair e = eigen_sym2(0.5 * f.fxx(pt.x, pt.y), 0.5 * f.fyy(pt.x, pt.y), 0.5 * f.fxy(pt.x, pt.y));
  return {e.lambda_min, e.lambda_max, e.e_min, e.e_max};
}

TaylorQuadratic taylor2(const Field& f, Point2 c) {
  TaylorQuadratic t;
  t.center = c;
  double fx = f.fx(c.x, c.y);
  double fy = f.fy(c.x, c.y);
  t.linear_part = {fx, fy, f(c.x, c.y) - fx * c.x - fy * c.y};
  t.quad_part = {0.5 * f.fxx(c.x, c.y), 0.5 * f.fyy(c.x, c.y), 0.5 * f.fxy(c.x, c.y)};
  return t;
}

double modulus(const ScalarFn& g, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("modulus: delta must be positive");
  int n = kModGrid;
  std::vector<double> grid(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    double x = static_cast<double>(i) / (n - 1);
    for (int j = 0; j < n; ++j) {
      grid[static_cast<size_t>(i) * n + j] = g(x, static_cast<double>(j) / (n - 1));
    }
  }
  return window_oscillation(grid, n, window_for_delta(delta));
}

double omega2(const Field& f, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("omega2: delta must be positive");
  ensure_second_grids(f);
  int win = window_for_delta(delta);
  const auto& c = *f.cache;
  double m1 = window_oscillation(c.gxx, kModGrid, win);
  double m2 = window_oscillation(c.gxy, kModGrid, win);
  double m3 = window_oscillation(c.gyy, kModGrid, win);
  return std::max({m1, m2, m3});
}

double lambda_min_modulus(const Field& f, double delta) {
  ensure_second_grids(f);
  return window_oscillation(f.cache->glam, kModGrid, window_for_delta(delta));
}

double sqrtH_modulus(const Field& f, double delta) {
  ensure_second_grids(f);
  return window_oscillation(f.cache->gsqh, kModGrid, window_for_delta(delta));
}

double mu_G(const Field& f, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("mu_G: eps must be positive");
  ensure_mu_lambda(f);
  const auto& lam = f.cache->mu_lambda;
  size_t count = 0;
  for (double v : lam) {
    if (v > 0.0 && v < eps) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(lam.size());
}

double sqrtH_seminorm(const Field& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("sqrtH_seminorm: p must be >= 1");
  double expo = std::isinf(p) ? 0.5 : p / (2.0 * (p + 1.0));
  ScalarFn integrand = [&](double x, double y) {
    double h = std::max(f.hessian(x, y), 0.0);
    return std::pow(h, expo);
  };
  Triangle lower({0, 0}, {1, 0}, {1, 1});
  Triangle upper({0, 0}, {1, 1}, {0, 1});
  double total = integrate_on_triangle(integrand, lower, 5e-7).value +
                 integrate_on_triangle(integrand, upper, 5e-7).value;
  if (std::isinf(p)) return total;
  return total > 0.0 ? std::pow(total, (p + 1.0) / p) : 0.0;
}

double predicted_limit(const Field& f, const Weights& w) {
  return 0.5 * constant_C(w.p, w.alpha, w.beta) * sqrtH_seminorm(f, w.p);
}

namespace {

// Sparse bivariate polynomial with exact derivative rules.
struct Polynomial {
  struct Term {
    int i = 0, j = 0;
    double coef = 0.0;
  };
  std::vector<Term> terms;

  double operator()(double x, double y) const {
    double s = 0.0;
    for (const Term& t : terms) s += t.coef * ipow(x, t.i) * ipow(y, t.j);
    return s;
  }
  Polynomial dx() const {
    Polynomial out;
    for (const Term& t : terms) {
      if (t.i > 0) out.terms.push_back({t.i - 1, t.j, t.coef * t.i});
    }
    return out;
  }
  Polynomial dy() const {
    Polynomial out;
    for (const Term& t : terms) {
      if (t.j > 0) out.terms.push_back({t.i, t.j - 1, t.coef * t.j});
    }
    return out;
  }
  int degree() const {
    int d = 0;
    for (const Term& t : terms) d = std::max(d, t.i + t.j);
    return d;
  }
  static double ipow(double x, int n) {
    double r = 1.0;
    for (int k = 0; k < n; ++k) r *= x;
    return r;
  }
};

Field field_from_polynomial(std::string name, const Polynomial& p) {
  Field f;
  f.name = std::move(name);
  Polynomial px = p.dx(), py = p.dy();
  Polynomial pxx = px.dx(), pxy = px.dy(), pyy = py.dy();
  f.eval = [p](double x, double y) { return p(x, y); };
  f.fx = [px](double x, double y) { return px(x, y); };
  f.fy = [py](double x, double y) { return py(x, y); };
  f.fxx = [pxx](double x, double y) { return pxx(x, y); };
  f.fxy = [pxy](double x, double y) { return pxy(x, y); };
  f.fyy = [pyy](double x, double y) { return pyy(x, y); };
  if (p.degree() <= 2) {
    Quadratic q;
    for (const auto& t : p.terms) {
      if (t.i == 2 && t.j == 0) q.quad.A += t.coef;
      if (t.i == 0 && t.j == 2) q.quad.B += t.coef;
      if (t.i == 1 && t.j == 1) q.quad.C += 0.5 * t.coef;
      if (t.i == 1 && t.j == 0) q.lin.a += t.coef;
      if (t.i == 0 && t.j == 1) q.lin.b += t.coef;
      if (t.i == 0 && t.j == 0) q.lin.c += t.coef;
    }
    f.quadratic = q;
  }
  return f;
}

Field make_exp_bowl() {
  Field f;
  f.name = "exp-bowl";
  auto g = [](double x, double y) { return std::exp(0.5 * (x * x + y * y)); };
  f.eval = g;
  f.fx = [g](double x, double y) { return x * g(x, y); };
  f.fy = [g](double x, double y) { return y * g(x, y); };
  f.fxx = [g](double x, double y) { return (1.0 + x * x) * g(x, y); };
  f.fyy = [g](double x, double y) { return (1.0 + y * y) * g(x, y); };
  f.fxy = [g](double x, double y) { return x * y * g(x, y); };
  return f;
}

Polynomial parse_poly_spec(const std::string& body) {
  nlohmann::json j = nlohmann::json::parse(body);
  if (!j.is_array()) throw std::invalid_argument("poly spec: expected [[i,j,coef],...]");
  Polynomial p;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 3) {
      throw std::invalid_argument("poly spec: each term must be [i,j,coef]");
    }
    int i = e[0].get<int>();
    int jj = e[1].get<int>();
    double c = e[2].get<double>();
    if (i < 0 || jj < 0) throw std::invalid_argument("poly spec: exponents must be nonnegative");
    p.terms.push_back({i, jj, c});
  }
  if (p.terms.empty()) throw std::invalid_argument("poly spec: no terms");
  return p;
}

}  // namespace

std::vector<std::string> registry_names() {
  return {"sum-squares", "cross-term", "quartic", "quartic-mix", "exp-bowl", "linear"};
}

Field field_by_spec(const std::string& spec) {
  if (spec.rfind("poly:", 0) == 0) {
    return field_from_polynomial(spec, parse_poly_spec(spec.substr(5)));
  }
  if (spec == "sum-squares") {
    return field_from_polynomial(spec, Polynomial{{{2, 0, 1.0}, {0, 2, 1.0}}});
  }
  if (spec == "cross-term") {
    return field_from_polynomial(spec, Polynomial{{{2, 0, 1.0}, {1, 1, 1.0}, {0, 2, 1.0}}});
  }
  if (spec == "quartic") {
    return field_from_polynomial(spec, Polynomial{{{4, 0, 1.0}, {0, 4, 1.0}}});
  }
  if (spec == "quartic-mix") {
    return field_from_polynomial(spec, Polynomial{{{2, 0, 1.0}, {0, 2, 1.0}, {4, 0, 1.0}}});
  }
  if (spec == "exp-bowl") {
    return make_exp_bowl();
  }
  if (spec == "linear") {
    return field_from_polynomial(spec, Polynomial{{{0, 0, 0.5}, {1, 0, 0.25}, {0, 1, 0.75}}});
  }
  throw std::invalid_argument("unknown function spec: " + spec);
}

}  // namespace anisomesh
