#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace anisomesh {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exponent p in [1, inf] and one-sided weights alpha, beta in (0, inf].
// An infinite weight encodes one-sided approximation; at most one may be
// infinite.
struct Weights {
  double p = 2.0;
  double alpha = 1.0;
  double beta = 1.0;

  Weights() = default;
  Weights(double p_, double a, double b) : p(p_), alpha(a), beta(b) { validate(); }

  void validate() const {
    if (!(p >= 1.0)) throw std::invalid_argument("Weights: p must be >= 1");
    if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("Weights: alpha, beta must be positive");
    if (std::isinf(alpha) && std::isinf(beta)) {
      throw std::invalid_argument("Weights: alpha and beta cannot both be infinite");
    }
  }

  bool p_finite() const { return std::isfinite(p); }
  bool finite() const { return std::isfinite(alpha) && std::isfinite(beta); }

  // alpha*g_+ + beta*g_-
  double apply(double g) const { return g >= 0.0 ? alpha * g : -beta * g; }
};

}  // namespace anisomesh
