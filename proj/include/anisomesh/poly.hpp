#pragma once

#include "anisomesh/geometry.hpp"

namespace anisomesh {

// a*x + b*y + c
struct LinearPoly {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double operator()(double x, double y) const { return a * x + b * y + c; }
  double operator()(Point2 p) const { return (*this)(p.x, p.y); }
};

inline LinearPoly operator+(const LinearPoly& p, const LinearPoly& q) {
  return {p.a + q.a, p.b + q.b, p.c + q.c};
}
inline LinearPoly operator-(const LinearPoly& p, const LinearPoly& q) {
  return {p.a - q.a, p.b - q.b, p.c - q.c};
}

// A*x^2 + B*y^2 + 2*C*x*y
struct QuadForm {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;

  double operator()(double x, double y) const { return A * x * x + B * y * y + 2.0 * C * x * y; }
  double operator()(Point2 p) const { return (*this)(p.x, p.y); }
  double det() const { return A * B - C * C; }
  bool positive_definite() const { return A > 0.0 && det() > 0.0; }
};

// Full quadratic q(x, y) = quad(x, y) + lin(x, y); the exact-evaluation fast
// paths key off this representation.
struct Quadratic {
  QuadForm quad;
  LinearPoly lin;

  double operator()(double x, double y) const { return quad(x, y) + lin(x, y); }
};

}  // namespace anisomesh
