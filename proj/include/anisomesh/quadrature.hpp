#pragma once

#include <array>
#include <functional>
#include <vector>

#include "anisomesh/geometry.hpp"

namespace anisomesh {

using ScalarFn = std::function<double(double, double)>;

// Symmetric rule on the reference triangle, weights normalized to sum 1, so
// the integral over a triangle t is area(t) * sum w_k g(x_k).
struct QuadratureRule {
  struct Node {
    double l0, l1, l2;  // barycentric
  };
  std::vector<Node> nodes;
  std::vector<double> weights;
  int degree = 0;

  size_t size() const { return nodes.size(); }
};

// Degree-5, 7-point and degree-8, 16-point positive rules.
const QuadratureRule& rule_d5();
const QuadratureRule& rule_d8();

// area(t) * sum w_k g(node_k) for a given rule.
double apply_rule(const QuadratureRule& rule, const ScalarFn& g, const Triangle& t);

struct IntegralResult {
  double value = 0.0;
  double achieved_tol = 0.0;  // estimated absolute error
  bool converged = false;
  long evaluations = 0;
};

// Adaptive integral of g over t with absolute tolerance tol; the error is
// estimated from the d5/d8 pair and refinement is 4-way midpoint subdivision,
// at most 12 levels deep.  A budget hit returns the best estimate with
// converged = false.
IntegralResult integrate_on_triangle(const ScalarFn& g, const Triangle& t, double tol);

// Flattened evaluation grid used for repeated integration of cheap integrands
// over one triangle: uniform 4^levels subdivision with the d8 rule per piece.
struct FixedGrid {
  std::vector<double> x, y;
  std::vector<double> w;  // already scaled by sub-triangle areas

  static FixedGrid make(const Triangle& t, int levels);
  size_t size() const { return x.size(); }
};

// Barycentric lattice with n subdivisions per edge ((n+1)(n+2)/2 points).
std::vector<Point2> barycentric_lattice(const Triangle& t, int n);

}  // namespace anisomesh
