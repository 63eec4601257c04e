#pragma once

#include <optional>

#include "anisomesh/poly.hpp"
#include "anisomesh/quadrature.hpp"
#include "anisomesh/weights.hpp"

namespace anisomesh {

struct DeviationResult {
  double value = 0.0;
  double achieved_tol = 0.0;
  bool converged = false;
  long evaluations = 0;
};

// Weighted deviation of f from the linear polynomial P on triangle t:
// p < inf:  ( integral_t (alpha (f-P)_+ + beta (f-P)_-)^p )^(1/p)
// p = inf:  sup_t alpha (f-P)_+ + beta (f-P)_-
// Both weights must be finite; one-sided limits live in the approx module.
DeviationResult asym_deviation_full(const ScalarFn& f, const LinearPoly& P, const Triangle& t,
                                    const Weights& w, double tol);
double asym_deviation(const ScalarFn& f, const LinearPoly& P, const Triangle& t,
                      const Weights& w, double tol);

// Max of alpha g_+ + beta g_- over t for smooth g, via a barycentric lattice
// scan (3 uniform refinement levels, >= 153 points) plus shrinking local
// refinement around the running max.
double weighted_sup(const ScalarFn& g, const Triangle& t, const Weights& w, double tol);

// Exact sup of alpha (q-P)_+ + beta (q-P)_- over t when q is an explicit
// quadratic: the positive part of a convex difference peaks at a vertex, the
// negative part at the stationary point or on an edge.
double weighted_sup_quadratic(const Quadratic& q, const LinearPoly& P, const Triangle& t,
                              const Weights& w);

// Exact range of q - P over t (candidates: vertices, interior stationary
// point, per-edge stationary points).
void quadratic_range(const Quadratic& q, const LinearPoly& P, const Triangle& t, double& lo,
                     double& hi);

}  // namespace anisomesh
