#include "anisomesh/deviation.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>

namespace anisomesh {

namespace {

// Extrema candidates of a quadratic on a triangle: vertices, the stationary
// point, and per-edge stationary points.
void quadratic_extrema(const Quadratic& g, const Triangle& t, double& gmin, double& gmax) {
  auto consider = [&](double v) {
    gmin = std::min(gmin, v);
    gmax = std::max(gmax, v);
  };
  gmin = 1e300;
  gmax = -1e300;
  consider(g(t.v0.x, t.v0.y));
  consider(g(t.v1.x, t.v1.y));
  consider(g(t.v2.x, t.v2.y));

  const QuadForm& Q = g.quad;
  double det = Q.det();
  if (std::abs(det) > 1e-300) {
    // grad g = (2A x + 2C y + a, 2C x + 2B y + b) = 0
    double a = g.lin.a, b = g.lin.b;
    double x = (-a * Q.B + b * Q.C) / (2.0 * det);
    double y = (-b * Q.A + a * Q.C) / (2.0 * det);
    if (t.contains({x, y}, 1e-12)) consider(g(x, y));
  }
  for (int e = 0; e < 3; ++e) {
    Point2 u = t.vertex(e);
    Point2 v = t.vertex((e + 1) % 3);
    Point2 d = v - u;
    // g(u + s d) = q2 s^2 + q1 s + q0
    double q2 = Q(d.x, d.y);
    double q1 = 2.0 * (Q.A * u.x * d.x + Q.B * u.y * d.y + Q.C * (u.x * d.y + u.y * d.x)) +
                g.lin.a * d.x + g.lin.b * d.y;
    if (std::abs(q2) > 1e-300) {
      double s = -q1 / (2.0 * q2);
      if (s > 0.0 && s < 1.0) consider(g(u.x + s * d.x, u.y + s * d.y));
    }
  }
}

}  // namespace

double weighted_sup_quadratic(const Quadratic& q, const LinearPoly& P, const Triangle& t,
                              const Weights& w) {
  Quadratic g{q.quad, q.lin - P};
  double gmin, gmax;
  quadratic_extrema(g, t, gmin, gmax);
  return std::max(w.alpha * std::max(gmax, 0.0), w.beta * std::max(-gmin, 0.0));
}

void quadratic_range(const Quadratic& q, const LinearPoly& P, const Triangle& t, double& lo,
                     double& hi) {
  Quadratic g{q.quad, q.lin - P};
  quadratic_extrema(g, t, lo, hi);
}

double weighted_sup(const ScalarFn& g, const Triangle& t, const Weights& w, double tol) {
  auto h = [&](double x, double y) { return w.apply(g(x, y)); };

  constexpr int kLattice = 16;  // 153 points, three uniform refinement levels
  double best = -1e300;
  std::array<std::pair<double, std::pair<double, double>>, 3> top{};
  top.fill({-1e300, {1.0 / 3.0, 1.0 / 3.0}});
  for (int i = 0; i <= kLattice; ++i) {
    for (int j = 0; j <= kLattice - i; ++j) {
      double l1 = static_cast<double>(i) / kLattice;
      double l2 = static_cast<double>(j) / kLattice;
      double l0 = 1.0 - l1 - l2;
      double v = h(l0 * t.v0.x + l1 * t.v1.x + l2 * t.v2.x,
                   l0 * t.v0.y + l1 * t.v1.y + l2 * t.v2.y);
      if (v > top[0].first) {
        top[2] = top[1];
        top[1] = top[0];
        top[0] = {v, {l1, l2}};
      } else if (v > top[1].first) {
        top[2] = top[1];
        top[1] = {v, {l1, l2}};
      } else if (v > top[2].first) {
        top[2] = {v, {l1, l2}};
      }
    }
  }

  auto eval_bary = [&](double l1, double l2) {
    l1 = std::max(l1, 0.0);
    l2 = std::max(l2, 0.0);
    double s = l1 + l2;
    if (s > 1.0) {
      l1 /= s;
      l2 /= s;
    }
    double l0 = 1.0 - l1 - l2;
    return h(l0 * t.v0.x + l1 * t.v1.x + l2 * t.v2.x, l0 * t.v0.y + l1 * t.v1.y + l2 * t.v2.y);
  };

  // Shrinking-stencil polish around the leading lattice candidates.
  for (const auto& cand : top) {
    if (cand.first <= -1e299) continue;
    double l1 = cand.second.first, l2 = cand.second.second;
    double v = cand.first;
    double r = 1.0 / kLattice;
    const double off[6][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}};
    for (int iter = 0; iter < 60 && r > 1e-14; ++iter) {
      double nv = v;
      double nl1 = l1, nl2 = l2;
      for (auto& o : off) {
        double c1 = l1 + r * o[0];
        double c2 = l2 + r * o[1];
        double cv = eval_bary(c1, c2);
        if (cv > nv) {
          nv = cv;
          nl1 = c1;
          nl2 = c2;
        }
      }
      if (nv > v) {
        if (nv - v < 0.1 * tol && r < 1e-6) {
          v = nv;
          break;
        }
        v = nv;
        l1 = nl1;
        l2 = nl2;
      } else {
        r *= 0.4;
      }
    }
    if (v > best) best = v;
  }
  return best;
}

namespace {

// Adaptive integral of (alpha g_+ + beta g_-)^p with g = f - P.  The d5/d8
// difference underestimates badly on panels that straddle the kink locus
// {g = 0}: both rules integrate the smooth extension and miss the fold by the
// same amount.  Such panels get a conservative fold-error floor instead,
// sized like area * min-side amplitude, which forces refinement down to the
// kink.  Smooth cases (even integer p with alpha = beta) skip the floor.
struct DevPanel {
  Triangle tri;
  double value = 0.0;
  double err = 0.0;
  int level = 0;
  long seq = 0;
};

struct DevPanelWorse {
  bool operator()(const DevPanel& a, const DevPanel& b) const {
    if (a.err != b.err) return a.err < b.err;
    return a.seq > b.seq;
  }
};

IntegralResult deviation_power_integral(const ScalarFn& f, const LinearPoly& P, const Triangle& t,
                                        const Weights& w, double tol_int) {
  const double p = w.p;
  const bool smooth = w.alpha == w.beta && p == std::floor(p) &&
                      static_cast<long>(p) % 2 == 0;
  IntegralResult res;
  long seq = 0;

  const double wmax = std::max(w.alpha, w.beta);
  auto evaluate = [&](const Triangle& tr, int level) {
    DevPanel pan;
    pan.tri = tr;
    pan.level = level;
    pan.seq = seq++;
    double area = tr.area();
    double i5 = 0.0, i8 = 0.0;
    double gmin = 1e300, gmax = -1e300;
    for (const QuadratureRule* rule : {&rule_d5(), &rule_d8()}) {
      double s = 0.0;
      for (size_t k = 0; k < rule->size(); ++k) {
        const auto& n = rule->nodes[k];
        double x = n.l0 * tr.v0.x + n.l1 * tr.v1.x + n.l2 * tr.v2.x;
        double y = n.l0 * tr.v0.y + n.l1 * tr.v1.y + n.l2 * tr.v2.y;
        double g = f(x, y) - (P.a * x + P.b * y + P.c);
        double psi = std::pow(w.apply(g), p);
        s += rule->weights[k] * psi;
        gmin = std::min(gmin, g);
        gmax = std::max(gmax, g);
      }
      (rule == &rule_d5() ? i5 : i8) = area * s;
      res.evaluations += static_cast<long>(rule->size());
    }
    pan.value = i8;
    pan.err = std::abs(i8 - i5);
    if (!smooth) {
      // The kink locus may pass through the panel (seen as a sign change at
      // the nodes) or hide between nodes when the node values come close to
      // zero relative to the panel's own variation.  Floor the error by the
      // fold scale: the minority-side depth squared over the range.
      double range = gmax - gmin;
      double closest = std::min(std::abs(gmin), std::abs(gmax));
      bool crosses = gmin < 0.0 && gmax > 0.0;
      bool suspect = crosses || (range > 0.0 && closest <= 0.3 * range);
      if (suspect && range > 0.0) {
        double depth = crosses ? std::min(-gmin, gmax) : 0.0;
        double d_eff = std::max(depth, 0.15 * range);
        double fold = area * std::pow(wmax * d_eff, p) * (d_eff / range);
        pan.err = std::max(pan.err, fold);
      }
    }
    return pan;
  };

  constexpr int kMaxLevel = 12;
  constexpr size_t kMaxPanels = 60000;
  std::priority_queue<DevPanel, std::vector<DevPanel>, DevPanelWorse> heap;
  heap.push(evaluate(t, 0));
  double total_err = heap.top().err;
  std::vector<DevPanel> done;
  while (total_err > tol_int && !heap.empty() && done.size() + heap.size() < kMaxPanels) {
    DevPanel worst = heap.top();
    heap.pop();
    if (worst.level >= kMaxLevel) {
      done.push_back(worst);
      continue;
    }
    total_err -= worst.err;
    const Triangle& tr = worst.tri;
    Point2 m01 = 0.5 * (tr.v0 + tr.v1);
    Point2 m12 = 0.5 * (tr.v1 + tr.v2);
    Point2 m20 = 0.5 * (tr.v2 + tr.v0);
    for (const Triangle& sub : {Triangle(tr.v0, m01, m20), Triangle(m01, tr.v1, m12),
                                Triangle(m20, m12, tr.v2), Triangle(m01, m12, m20)}) {
      DevPanel pan = evaluate(sub, worst.level + 1);
      total_err += pan.err;
      heap.push(pan);
    }
  }
  std::vector<DevPanel> all = std::move(done);
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(), [](const DevPanel& a, const DevPanel& b) { return a.seq < b.seq; });
  double value = 0.0, err = 0.0;
  for (const DevPanel& pan : all) {
    value += pan.value;
    err += pan.err;
  }
  res.value = value;
  res.achieved_tol = err;
  res.converged = err <= tol_int;
  return res;
}

}  // namespace

DeviationResult asym_deviation_full(const ScalarFn& f, const LinearPoly& P, const Triangle& t,
                                    const Weights& w, double tol) {
  if (!w.finite()) {
    throw std::invalid_argument("asym_deviation: weights must be finite (one-sided limits are handled by the approx module)");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("asym_deviation: tol must be positive");

  DeviationResult res;
  if (!w.p_finite()) {
    res.value = weighted_sup([&](double x, double y) { return f(x, y) - P(x, y); }, t, w, tol);
    res.achieved_tol = tol;
    res.converged = true;
    return res;
  }

  double p = w.p;
  // Rough scale first so the integral tolerance matches the requested
  // tolerance on the deviation itself.
  ScalarFn integrand = [&](double x, double y) {
    double g = w.apply(f(x, y) - P(x, y));
    return std::pow(g, p);
  };
  double rough = apply_rule(rule_d8(), integrand, t);
  res.evaluations += static_cast<long>(rule_d8().size());
  double v_rough = rough > 0.0 ? std::pow(rough, 1.0 / p) : 0.0;
  double tol_int;
  if (v_rough <= 0.0) {
    tol_int = std::pow(tol, p);
  } else {
    tol_int = 0.5 * p * std::pow(v_rough, p - 1.0) * tol;
  }
  IntegralResult ir = deviation_power_integral(f, P, t, w, tol_int);
  res.evaluations += ir.evaluations;
  res.value = ir.value > 0.0 ? std::pow(ir.value, 1.0 / p) : 0.0;
  res.converged = ir.converged;
  if (res.value > 0.0) {
    res.achieved_tol = ir.achieved_tol / (p * std::pow(res.value, p - 1.0));
  } else {
    res.achieved_tol = std::pow(ir.achieved_tol, 1.0 / p);
  }
  return res;
}

double asym_deviation(const ScalarFn& f, const LinearPoly& P, const Triangle& t,
                      const Weights& w, double tol) {
  return asym_deviation_full(f, P, t, w, tol).value;
}

}  // namespace anisomesh
