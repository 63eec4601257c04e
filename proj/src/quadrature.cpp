#include "anisomesh/quadrature.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>

namespace anisomesh {

namespace {

void push_perm3(QuadratureRule& r, double a, double b, double w) {
  double c = 1.0 - a - b;
  r.nodes.push_back({a, b, c});
  r.nodes.push_back({b, c, a});
  r.nodes.push_back({c, a, b});
  r.weights.insert(r.weights.end(), 3, w);
}

void push_perm6(QuadratureRule& r, double a, double b, double w) {
  double c = 1.0 - a - b;
  const double coords[6][3] = {{a, b, c}, {a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}};
  for (auto& l : coords) r.nodes.push_back({l[0], l[1], l[2]});
  r.weights.insert(r.weights.end(), 6, w);
}

void normalize_weights(QuadratureRule& r) {
  double s = 0.0;
  for (double w : r.weights) s += w;
  for (double& w : r.weights) w /= s;
}

QuadratureRule make_d5() {
  QuadratureRule r;
  r.degree = 5;
  double s15 = std::sqrt(15.0);
  r.nodes.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  r.weights.push_back(9.0 / 40.0);
  double a1 = (6.0 - s15) / 21.0;
  double a2 = (6.0 + s15) / 21.0;
  push_perm3(r, a1, a1, (155.0 - s15) / 1200.0);
  push_perm3(r, a2, a2, (155.0 + s15) / 1200.0);
  normalize_weights(r);
  return r;
}

QuadratureRule make_d8() {
  QuadratureRule r;
  r.degree = 8;
  r.nodes.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  r.weights.push_back(0.1443156076777871);
  push_perm3(r, 0.4592925882927231, 0.4592925882927231, 0.0950916342672846);
  push_perm3(r, 0.1705693077517602, 0.1705693077517602, 0.1032173705347182);
  push_perm3(r, 0.0505472283170310, 0.0505472283170310, 0.0324584976231980);
  push_perm6(r, 0.2631128296346381, 0.7284923929554042, 0.0272303141744349);
  normalize_weights(r);
  return r;
}

}  // namespace

const QuadratureRule& rule_d5() {
  static const QuadratureRule r = make_d5();
  return r;
}

const QuadratureRule& rule_d8() {
  static const QuadratureRule r = make_d8();
  return r;
}

double apply_rule(const QuadratureRule& rule, const ScalarFn& g, const Triangle& t) {
  double s = 0.0;
  for (size_t k = 0; k < rule.size(); ++k) {
    const auto& n = rule.nodes[k];
    double x = n.l0 * t.v0.x + n.l1 * t.v1.x + n.l2 * t.v2.x;
    double y = n.l0 * t.v0.y + n.l1 * t.v1.y + n.l2 * t.v2.y;
    s += rule.weights[k] * g(x, y);
  }
  return t.area() * s;
}

namespace {

struct Panel {
  Triangle tri;
  double value = 0.0;  // d8 estimate
  double err = 0.0;
  int level = 0;
  long seq = 0;  // deterministic tie-break
};

struct PanelWorse {
  bool operator()(const Panel& a, const Panel& b) const {
    if (a.err != b.err) return a.err < b.err;
    return a.seq > b.seq;
  }
};

Panel evaluate_panel(const ScalarFn& g, const Triangle& t, int level, long seq, long& evals) {
  Panel p;
  p.tri = t;
  p.level = level;
  p.seq = seq;
  double lo = apply_rule(rule_d5(), g, t);
  double hi = apply_rule(rule_d8(), g, t);
  evals += static_cast<long>(rule_d5().size() + rule_d8().size());
  p.value = hi;
  p.err = std::abs(hi - lo);
  return p;
}

}  // namespace

IntegralResult integrate_on_triangle(const ScalarFn& g, const Triangle& t, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("integrate_on_triangle: tol must be positive");
  constexpr int kMaxLevel = 12;
  constexpr size_t kMaxPanels = 40000;

  IntegralResult res;
  long seq = 0;
  std::priority_queue<Panel, std::vector<Panel>, PanelWorse> heap;
  heap.push(evaluate_panel(g, t, 0, seq++, res.evaluations));

  double total_err = heap.top().err;
  std::vector<Panel> done;
  while (total_err > tol && !heap.empty() && done.size() + heap.size() < kMaxPanels) {
    Panel worst = heap.top();
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
    Triangle sub[4] = {Triangle(tr.v0, m01, m20), Triangle(m01, tr.v1, m12),
                       Triangle(m20, m12, tr.v2), Triangle(m01, m12, m20)};
    for (const Triangle& s : sub) {
      Panel p = evaluate_panel(g, s, worst.level + 1, seq++, res.evaluations);
      total_err += p.err;
      heap.push(p);
    }
  }

  // Deterministic accumulation: drain in sequence order.
  std::vector<Panel> all = std::move(done);
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(), [](const Panel& a, const Panel& b) { return a.seq < b.seq; });
  double value = 0.0, err = 0.0;
  for (const Panel& p : all) {
    value += p.value;
    err += p.err;
  }
  res.value = value;
  res.achieved_tol = err;
  res.converged = err <= tol;
  return res;
}

FixedGrid FixedGrid::make(const Triangle& t, int levels) {
  FixedGrid g;
  int n = 1 << levels;
  const QuadratureRule& rule = rule_d8();
  g.x.reserve(static_cast<size_t>(n) * n * rule.size());
  g.y.reserve(g.x.capacity());
  g.w.reserve(g.x.capacity());
  // Uniform barycentric refinement into n^2 sub-triangles.
  Point2 e1 = t.v1 - t.v0;
  Point2 e2 = t.v2 - t.v0;
  double sub_area = t.area() / (static_cast<double>(n) * n);
  auto emit = [&](Point2 a, Point2 b, Point2 c) {
    for (size_t k = 0; k < rule.size(); ++k) {
      const auto& nd = rule.nodes[k];
      g.x.push_back(nd.l0 * a.x + nd.l1 * b.x + nd.l2 * c.x);
      g.y.push_back(nd.l0 * a.y + nd.l1 * b.y + nd.l2 * c.y);
      g.w.push_back(rule.weights[k] * sub_area);
    }
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n - i; ++j) {
      Point2 p00 = t.v0 + (static_cast<double>(i) / n) * e1 + (static_cast<double>(j) / n) * e2;
      Point2 p10 = t.v0 + (static_cast<double>(i + 1) / n) * e1 + (static_cast<double>(j) / n) * e2;
      Point2 p01 = t.v0 + (static_cast<double>(i) / n) * e1 + (static_cast<double>(j + 1) / n) * e2;
      emit(p00, p10, p01);
      if (j < n - i - 1) {
        Point2 p11 = t.v0 + (static_cast<double>(i + 1) / n) * e1 + (static_cast<double>(j + 1) / n) * e2;
        emit(p10, p11, p01);
      }
    }
  }
  return g;
}

std::vector<Point2> barycentric_lattice(const Triangle& t, int n) {
  std::vector<Point2> pts;
  pts.reserve(static_cast<size_t>(n + 1) * (n + 2) / 2);
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n - i; ++j) {
      double l1 = static_cast<double>(i) / n;
      double l2 = static_cast<double>(j) / n;
      double l0 = 1.0 - l1 - l2;
      pts.push_back({l0 * t.v0.x + l1 * t.v1.x + l2 * t.v2.x,
                     l0 * t.v0.y + l1 * t.v1.y + l2 * t.v2.y});
    }
  }
  return pts;
}

}  // namespace anisomesh
