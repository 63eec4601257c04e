#include <doctest.h>

#include <random>

#include "anisomesh/approx.hpp"
#include "oracles.hpp"

using namespace anisomesh;

namespace {

const double kC0 = std::pow(3.0, -1.5);

ScalarField q_field() { return ScalarField::from_quadratic({QuadForm{1.0, 1.0, 0.0}, LinearPoly{}}); }

}  // namespace

TEST_CASE("best_linear reproduces linear fields") {
  ScalarField f([](double x, double y) { return 1.5 * x - 0.7 * y + 0.2; });
  Triangle t({0.1, 0.2}, {1.3, 0.1}, {0.4, 1.1});
  for (double p : {1.0, 2.0}) {
    ApproxResult r = best_linear(f, t, Weights(p, 1.0, 3.0), 1e-7);
    CHECK(r.error < 1e-6);
    CHECK(r.poly.a == doctest::Approx(1.5).epsilon(1e-3));
    CHECK(r.poly.b == doctest::Approx(-0.7).epsilon(1e-3));
  }
  ApproxResult r = best_linear(f, t, Weights(kInf, 2.0, 1.0), 1e-9);
  CHECK(r.error < 1e-9);
}

TEST_CASE("sup-norm constants on the unit equilateral") {
  Triangle t0 = unit_equilateral();
  SUBCASE("symmetric weights") {
    ApproxResult r = best_linear(q_field(), t0, Weights(kInf, 1.0, 1.0), 1e-9);
    CHECK(r.error == doctest::Approx(2.0 * kC0).epsilon(1e-7));
    CHECK(r.converged);
  }
  SUBCASE("asymmetric weights") {
    ApproxResult r = best_linear(q_field(), t0, Weights(kInf, 2.0, 1.0), 1e-9);
    CHECK(r.error == doctest::Approx(8.0 * kC0 / 3.0).epsilon(1e-7));
  }
  SUBCASE("equioscillation at the vertices") {
    ApproxResult r = best_linear(q_field(), t0, Weights(kInf, 1.0, 1.0), 1e-10);
    auto dev = [&](Point2 v) { return v.x * v.x + v.y * v.y - r.poly(v); };
    double d0 = dev(t0.v0), d1 = dev(t0.v1), d2 = dev(t0.v2);
    CHECK(std::abs(d0 - d1) < 1e-8);
    CHECK(std::abs(d1 - d2) < 1e-8);
  }
}

TEST_CASE("best_linear p=2 matches the coefficient-grid brute force") {
  Triangle t0 = unit_equilateral();
  Weights w(2.0, 1.0, 1.0);
  ApproxResult sup = best_linear(q_field(), t0, Weights(kInf, 1.0, 1.0), 1e-9);
  ApproxResult r = best_linear(q_field(), t0, w, 1e-8);
  double brute = oracles::grid_search_deviation([](double x, double y) { return x * x + y * y; }, t0,
                                                w, sup.poly, 0.35, 61);
  CHECK(r.error == doctest::Approx(brute).epsilon(1e-3));
  CHECK(r.error <= brute + 1e-9);  // the solver should not lose to a grid
}

TEST_CASE("one_sided_best") {
  Triangle t({0.0, 0.0}, {1.1, 0.2}, {0.3, 0.9});
  ScalarField q = q_field();
  SUBCASE("above stays above and matches the interpolant oracle") {
    for (double p : {1.0, 2.0}) {
      ApproxResult r = one_sided_best(q, t, p, Side::kAbove, 1e-6);
      for (const Point2& pt : barycentric_lattice(t, 24)) {
        CHECK(r.poly(pt) >= pt.x * pt.x + pt.y * pt.y - 1e-10);
      }
      double oracle = oracles::interpolant_error([](double x, double y) { return x * x + y * y; }, t, p);
      CHECK(r.error == doctest::Approx(oracle).epsilon(1e-5));
    }
  }
  SUBCASE("sup-norm one-sided limit on the equilateral") {
    Triangle t0 = unit_equilateral();
    ApproxResult r = one_sided_best(q, t0, kInf, Side::kAbove, 1e-7);
    CHECK(r.error == doctest::Approx(4.0 * kC0).epsilon(1e-5));
    ApproxResult rb = one_sided_best(q, t0, kInf, Side::kBelow, 1e-7);
    CHECK(rb.error == doctest::Approx(4.0 * kC0).epsilon(1e-5));
  }
  SUBCASE("penalty sequence is monotone and settles") {
    Triangle t0 = unit_equilateral();
    double prev = -1.0;
    std::vector<double> errs;
    for (double beta : {1e2, 1e3, 1e4, 1e6}) {
      ApproxResult r = best_linear(q, t0, Weights(2.0, 1.0, beta), 1e-8);
      errs.push_back(r.error);
      CHECK(r.error >= prev - 1e-7);
      prev = r.error;
    }
    CHECK(std::abs(errs[3] - errs[2]) < 1e-4);
  }
}

TEST_CASE("constant_C catalogue") {
  CHECK(constant_C(kInf, 1.0, 1.0) == doctest::Approx(2.0 * kC0).epsilon(1e-7));
  CHECK(constant_C(kInf, 2.0, 1.0) == doctest::Approx(8.0 * kC0 / 3.0).epsilon(1e-7));
  double c1_exact = kC0 - 0.25 / M_PI;
  CHECK(constant_C(1.0, 1.0, 1.0) == doctest::Approx(c1_exact).epsilon(5e-4));
  SUBCASE("cache returns identical values") {
    double a = constant_C(2.0, 1.0, 3.0);
    double b = constant_C(2.0, 1.0, 3.0);
    CHECK(a == b);
  }
}

TEST_CASE("optimal_triangle geometry") {
  SUBCASE("isotropic form gives the equilateral") {
    Triangle t = optimal_triangle(QuadForm{1.0, 1.0, 0.0}, 1.0);
    CHECK(t.area() == doctest::Approx(1.0).epsilon(1e-12));
    double a = dist(t.v0, t.v1), b = dist(t.v1, t.v2), c = dist(t.v2, t.v0);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    CHECK(b == doctest::Approx(c).epsilon(1e-12));
  }
  SUBCASE("diagonal form stretches the axes") {
    Triangle t = optimal_triangle(QuadForm{1.0, 4.0, 0.0}, 1.0);
    CHECK(t.area() == doctest::Approx(1.0).epsilon(1e-12));
    // Expect the y-extent shrunk relative to the x-extent by the eigen ratio.
    double w = std::max({t.v0.x, t.v1.x, t.v2.x}) - std::min({t.v0.x, t.v1.x, t.v2.x});
    double h = std::max({t.v0.y, t.v1.y, t.v2.y}) - std::min({t.v0.y, t.v1.y, t.v2.y});
    CHECK(w / h > 1.5);
  }
  SUBCASE("area parameter is exact") {
    for (double target : {0.25, 1.0, 3.7}) {
      Triangle t = optimal_triangle(QuadForm{2.0, 1.0, 0.4}, target);
      CHECK(t.area() == doctest::Approx(target).epsilon(1e-12));
    }
  }
  SUBCASE("rejects indefinite forms") {
    CHECK_THROWS_AS(optimal_triangle(QuadForm{1.0, 1.0, 2.0}, 1.0), std::invalid_argument);
  }
}

TEST_CASE("optimal triangle beats random competitors") {
  std::mt19937 rng(777);
  QuadForm Q{1.0, 4.0, 0.0};
  Weights w(2.0, 1.0, 1.0);
  ScalarField f = ScalarField::from_quadratic({Q, LinearPoly{}});
  double best = best_linear(f, optimal_triangle(Q, 1.0), w, 1e-7).error;
  BestLinearOptions fast;
  fast.quality = SolveQuality::kFast;
  for (int rep = 0; rep < 20; ++rep) {
    Triangle t = oracles::random_unit_area_triangle(rng);
    double err = best_linear(f, t, w, 1e-6, fast).error;
    CHECK(err >= best - 1e-6);
  }
}

TEST_CASE("form_error_floor") {
  Weights w2(2.0, 1.0, 1.0);
  SUBCASE("isotropic unit area reduces to the constant") {
    CHECK(form_error_floor(QuadForm{1.0, 1.0, 0.0}, w2, 1.0) ==
          doctest::Approx(constant_C(2.0, 1.0, 1.0)).epsilon(1e-12));
  }
  SUBCASE("sup norm closed-form cross-check") {
    Weights wi(kInf, 1.0, 1.0);
    double v = form_error_floor(QuadForm{1.0, 1.0, 0.5}, wi, 1.0);
    CHECK(v == doctest::Approx(2.0 * kC0 * std::sqrt(0.75)).epsilon(1e-6));
    double direct = best_linear(ScalarField::from_quadratic({QuadForm{1.0, 1.0, 0.5}, LinearPoly{}}),
                                optimal_triangle(QuadForm{1.0, 1.0, 0.5}, 1.0), wi, 1e-8)
                        .error;
    CHECK(v == doctest::Approx(direct).epsilon(1e-4));
  }
  SUBCASE("area exponent") {
    double sigma2 = 0.3;
    double base = form_error_floor(QuadForm{1.0, 2.0, 0.2}, w2, 1.0);
    CHECK(form_error_floor(QuadForm{1.0, 2.0, 0.2}, w2, sigma2) ==
          doctest::Approx(std::pow(sigma2, 1.5) * base).epsilon(1e-12));
  }
}

TEST_CASE("affine covariance of the best error") {
  QuadForm Q{1.5, 0.8, -0.3};
  Weights w(2.0, 2.0, 1.0);
  Triangle t = optimal_triangle(Q, 0.7);
  double direct = best_linear(ScalarField::from_quadratic({Q, LinearPoly{}}), t, w, 1e-8).error;
  CHECK(direct == doctest::Approx(form_error_floor(Q, w, 0.7)).epsilon(1e-4));
}

TEST_CASE("eigen decomposition of symmetric 2x2") {
  EigenPair e = eigen_sym2(1.0, 1.0, 0.5);
  CHECK(e.lambda_min == doctest::Approx(0.5));
  CHECK(e.lambda_max == doctest::Approx(1.5));
  CHECK(std::abs(dot(e.e_min, e.e_max)) < 1e-12);
  std::mt19937 rng(555);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    double a = u(rng), b = u(rng), c = u(rng);
    EigenPair p = eigen_sym2(a, b, c);
    CHECK(p.lambda_min <= p.lambda_max);
    CHECK(p.lambda_min * p.lambda_max == doctest::Approx(a * b - c * c).epsilon(1e-10));
    CHECK(p.lambda_min + p.lambda_max == doctest::Approx(a + b).epsilon(1e-10));
  }
}

TEST_CASE("bounded aspect ratio over a capped form family") {
  std::mt19937 rng(9090);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    double a = 0.3 + 3.7 * u(rng);
    double b = 0.3 + 3.7 * u(rng);
    double cmax = std::sqrt(std::max(a * b - 0.25, 0.0));
    double c = (2.0 * u(rng) - 1.0) * cmax;
    QuadForm Q{a, b, c};
    if (Q.det() < 0.25) continue;
    Triangle t = optimal_triangle(Q, 1.0);
    worst = std::max(worst, t.diameter() * t.diameter() / t.area());
  }
  CHECK(worst < 600.0);
}
