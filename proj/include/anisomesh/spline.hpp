#pragma once

#include <memory>

#include "anisomesh/mesher.hpp"

namespace anisomesh {

// Continuous piecewise-linear spline over a triangulation, represented by one
// value per mesh vertex; continuity is structural.
struct Spline {
  std::shared_ptr<const Triangulation> tri;
  std::vector<double> vertex_values;
  std::vector<LinearPoly> tri_polys;  // interpolants of the vertex values
};

// Builds the near-optimal spline for the triangulation's field: vertices of
// tiled elliptic cells carry the per-tile best-approximation values (their
// common vertex deviation makes this consistent across tiles); vertices on
// shared cell borders, and all vertices of other groups, interpolate f.
Spline assemble(const Field& f, std::shared_ptr<const Triangulation> tri, const Weights& w);

// Point evaluation: cell-grid point location, then barycentric interpolation.
double evaluate(const Spline& s, Point2 pt);

struct ErrorReport {
  double total = 0.0;
  std::vector<double> per_triangle;
  double achieved_tol = 0.0;
  bool converged = true;
};

// Global weighted deviation of f from the spline: p-power sum of per-triangle
// deviations (max at p = inf), accumulated in index order.
ErrorReport global_error(const Field& f, const Spline& s, const Weights& w, double tol);

// Per-triangle best approximation combined the same way: the error of the
// best discontinuous piecewise-linear approximant, a lower proxy for the
// continuous optimum.
double free_spline_error(const Field& f, const Triangulation& tri, const Weights& w, double tol);

struct ConvergenceRow {
  long n_requested = 0;
  long n_actual = 0;
  double error = 0.0;
  double n_times_error = 0.0;
  double predicted = 0.0;
  double ratio = 0.0;
  double free_error = 0.0;
  double free_ratio = 0.0;
  bool exact = false;  // error identically zero (ratio undefined)
};

struct ConvergenceOptions {
  double eps = 0.05;
  bool full_budget = false;
  std::optional<int> m_override;
  double tol = 1e-5;
  bool include_free = true;
};

struct ConvergenceSummary {
  double last_ratio = 0.0;
  std::string trend;  // "decreasing", "mixed", or "exact"
};

// Builds, assembles and measures at each budget in increasing order and
// reports scaled errors against the predicted limit.
std::vector<ConvergenceRow> convergence_run(const Field& f, const Weights& w,
                                            const std::vector<long>& n_list,
                                            const ConvergenceOptions& opts = {});

ConvergenceSummary summarize_convergence(const std::vector<ConvergenceRow>& rows);

}  // namespace anisomesh
