#pragma once

#include <optional>

#include "anisomesh/deviation.hpp"
#include "anisomesh/poly.hpp"

namespace anisomesh {

// Scalar field handed to the approximation routines.  When the field is an
// explicit quadratic, sup-norm evaluations switch to a closed form.
struct ScalarField {
  ScalarFn eval;
  std::optional<Quadratic> quadratic;

  ScalarField() = default;
  ScalarField(ScalarFn fn) : eval(std::move(fn)) {}
  static ScalarField from_quadratic(const Quadratic& q) {
    ScalarField f;
    f.quadratic = q;
    f.eval = [q](double x, double y) { return q(x, y); };
    return f;
  }
  double operator()(double x, double y) const { return eval(x, y); }
};

struct ApproxResult {
  LinearPoly poly;
  double error = 0.0;
  bool converged = false;
  long evaluations = 0;
};

enum class SolveQuality {
  kFast,      // coarse fixed-grid objective, single refinement
  kAccurate,  // fine grid plus adaptive-quadrature polish
};

struct BestLinearOptions {
  SolveQuality quality = SolveQuality::kAccurate;
  // Extra deterministic starting point (used by the penalty escalation).
  std::optional<LinearPoly> warm_start;
  // Simplex-descent rounds against the adaptive-quadrature objective in the
  // accurate tier; the flat-constant evaluations use more.
  int polish_rounds = 1;
};

// Best (alpha, beta)-approximation of f by linear polynomials on t: minimizes
// the convex map (a, b, c) -> asym_deviation(f, a x + b y + c, t, w).
// Derivative-free simplex descent with four deterministic multistarts.
ApproxResult best_linear(const ScalarField& f, const Triangle& t, const Weights& w, double tol,
                         const BestLinearOptions& opts = {});

enum class Side { kAbove, kBelow };

// One-sided best approximation via penalty-weight escalation through
// {1e2, 1e3, 1e4, 1e6}; the final polynomial is shifted so the sign
// constraint holds at all check nodes.  Reported error is the plain L_p
// deviation of the corrected polynomial.
ApproxResult one_sided_best(const ScalarField& f, const Triangle& t, double p, Side side,
                            double tol);

// E(x^2 + y^2; P_1) on the unit-area equilateral triangle in the (p, alpha,
// beta) norm; an infinite weight selects the one-sided variant.  Cached on
// the (p, alpha, beta) key rounded to 1e-12.
double constant_C(double p, double alpha, double beta, double tol = 1e-7);

struct EigenPair {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  Point2 e_min{1.0, 0.0};
  Point2 e_max{0.0, 1.0};
};

// Closed-form eigen decomposition of [[A, C], [C, B]]; the larger-magnitude
// root first, the other via the trace.
EigenPair eigen_sym2(double A, double B, double C);

// Triangle of the given area minimizing the deviation ratio for a positive
// definite form: the unit equilateral mapped by U diag(l1^-1/2, l2^-1/2) and
// rescaled.
Triangle optimal_triangle(const QuadForm& Q, double target_area);

// C_{p;alpha,beta} * sqrt(AB - C^2) * area^(1 + 1/p), the exact minimal
// deviation over all triangles of that area.
double form_error_floor(const QuadForm& Q, const Weights& w, double area);

}  // namespace anisomesh
