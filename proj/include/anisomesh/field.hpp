#pragma once

#include <memory>
#include <string>
#include <vector>

#include "anisomesh/approx.hpp"
#include "anisomesh/poly.hpp"
#include "anisomesh/quadrature.hpp"
#include "anisomesh/weights.hpp"

namespace anisomesh {

namespace detail {
struct FieldCache;
std::shared_ptr<FieldCache> make_field_cache();
}  // namespace detail

// C2 function on [0,1]^2 with exact first and second derivatives.
struct Field {
  std::string name;
  ScalarFn eval, fx, fy, fxx, fxy, fyy;
  // Set when the field itself is a polynomial of degree <= 2; enables exact
  // sup-norm evaluation downstream.
  std::optional<Quadratic> quadratic;

  std::shared_ptr<detail::FieldCache> cache = detail::make_field_cache();

  double operator()(double x, double y) const { return eval(x, y); }
  double hessian(double x, double y) const {
    double xy = fxy(x, y);
    return fxx(x, y) * fyy(x, y) - xy * xy;
  }
  ScalarField as_scalar_field() const {
    ScalarField f(eval);
    f.quadratic = quadratic;
    return f;
  }
  // Smallest Hessian determinant over a 512^2 validation grid.
  double min_hessian_on_grid() const;
  bool hessian_nonnegative() const { return min_hessian_on_grid() >= -1e-12; }
};

struct SpectralData {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  Point2 e_min{1.0, 0.0};
  Point2 e_max{0.0, 1.0};
};

struct TaylorQuadratic {
  Point2 center{};
  LinearPoly linear_part;  // global coordinates
  QuadForm quad_part;      // acts on (x - center.x, y - center.y)

  double operator()(double x, double y) const {
    return linear_part(x, y) + quad_part(x - center.x, y - center.y);
  }
  // The same quadratic expanded in global coordinates.
  Quadratic as_quadratic() const;
};

// Eigen data of [[fxx/2, fxy/2], [fxy/2, fyy/2]] at a point.
SpectralData spectral(const Field& f, Point2 pt);

// Exact degree-2 Taylor expansion at a point.
TaylorQuadratic taylor2(const Field& f, Point2 center);

// Modulus of continuity of g over pairs within a delta-box, estimated on a
// 256^2 grid with sliding-window extrema.
double modulus(const ScalarFn& g, double delta);

// Max modulus of the three second partials at scale delta.
double omega2(const Field& f, double delta);

// Moduli of the lambda_min and sqrt-Hessian fields (cached grids; used by
// the mesher's scale selection).
double lambda_min_modulus(const Field& f, double delta);
double sqrtH_modulus(const Field& f, double delta);

// Area fraction of a 512^2 grid where 0 < lambda_min < eps.
double mu_G(const Field& f, double eps);

// For p < inf: ( integral_D H^(p/(2(p+1))) )^((p+1)/p); for p = inf the
// integral of sqrt(H).
double sqrtH_seminorm(const Field& f, double p);

// 2^-1 C_{p;alpha,beta} * sqrtH_seminorm: the limit of N times the optimal
// error.
double predicted_limit(const Field& f, const Weights& w);

// Built-in registry plus "poly:[[i,j,coef],...]" polynomial specs.
std::vector<std::string> registry_names();
Field field_by_spec(const std::string& spec);

}  // namespace anisomesh
