#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "coldrec/lbfgs.hpp"
#include "coldrec/rng.hpp"

using namespace coldrec;

namespace {

Objective quadratic(const Matrix& q, const Vector& b) {
  return [q, b](const Vector& x) {
    ObjectiveEvaluation eval;
    eval.value = 0.5 * x.dot(q * x) - b.dot(x);
    eval.gradient = q * x - b;
    return eval;
  };
}

Matrix random_spd(int n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a(r, c) = rng.next_normal();
  return a * a.transpose() + 0.5 * Matrix::Identity(n, n);
}

}  // namespace

TEST_CASE("norm-squared objective reaches the origin") {
  const auto f = [](const Vector& x) {
    return ObjectiveEvaluation{x.squaredNorm(), 2.0 * x};
  };
  Vector x0(2);
  x0 << 3.0, 4.0;
  const SolverResult result = lbfgs_minimize(f, x0, {});
  CHECK(result.x.norm() < 1e-8);
  CHECK(result.reason == TerminationReason::GradientTolerance);
}

TEST_CASE("shifted quadratic recovers the shift") {
  Vector c(3);
  c << 1.0, -2.0, 5.0;
  const auto f = [c](const Vector& x) {
    return ObjectiveEvaluation{(x - c).squaredNorm(), 2.0 * (x - c)};
  };
  const SolverResult result = lbfgs_minimize(f, Vector::Zero(3), {});
  CHECK((result.x - c).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("random positive-definite quadratic matches the direct solve") {
  // Oracle: x* = Q^-1 b from a dense linear solver.
  const int n = 10;
  const Matrix q = random_spd(n, 7);
  Rng rng(11);
  Vector b(n);
  for (int i = 0; i < n; ++i) b[i] = rng.next_normal();
  const Vector expected = q.ldlt().solve(b);

  SolverConfig config;
  config.gradient_tolerance = 1e-9;
  config.relative_objective_tolerance = 1e-16;
  const SolverResult result = lbfgs_minimize(quadratic(q, b), Vector::Zero(n), config);
  CHECK((result.x - expected).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("trace is monotone non-increasing and ends at most at the start") {
  const Matrix q = random_spd(6, 3);
  Rng rng(5);
  Vector b(6), x0(6);
  for (int i = 0; i < 6; ++i) {
    b[i] = rng.next_normal();
    x0[i] = 3.0 * rng.next_normal();
  }
  const SolverResult result = lbfgs_minimize(quadratic(q, b), x0, {});
  REQUIRE(result.trace.size() >= 2);
  for (std::size_t i = 1; i < result.trace.size(); ++i)
    CHECK(result.trace[i] <= result.trace[i - 1] + 1e-15);
  CHECK(result.value <= result.trace.front());
}

TEST_CASE("strictly convex quadratics reach 1e-8 gradients within 50 iterations") {
  // Dimension up to twice the history size (memory_pairs default 10).
  for (int n : {4, 8, 12, 16, 20}) {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
      const Matrix q = random_spd(n, seed * 31 + static_cast<std::uint64_t>(n));
      Rng rng(seed + 100);
      Vector b(n);
      for (int i = 0; i < n; ++i) b[i] = rng.next_normal();
      SolverConfig config;
      config.gradient_tolerance = 1e-8;
      config.max_iterations = 50;
      config.relative_objective_tolerance = 1e-16;
      const SolverResult result = lbfgs_minimize(quadratic(q, b), Vector::Zero(n), config);
      CHECK(result.reason == TerminationReason::GradientTolerance);
      CHECK(result.gradient.lpNorm<Eigen::Infinity>() < 1e-8);
      CHECK(result.iterations <= 50);
    }
  }
}

TEST_CASE("max iterations cap is honored") {
  // Rosenbrock needs far more than 4 iterations.
  const auto rosenbrock = [](const Vector& x) {
    ObjectiveEvaluation eval;
    const double a = x[1] - x[0] * x[0];
    eval.value = 100.0 * a * a + (1.0 - x[0]) * (1.0 - x[0]);
    eval.gradient.resize(2);
    eval.gradient[0] = -400.0 * a * x[0] - 2.0 * (1.0 - x[0]);
    eval.gradient[1] = 200.0 * a;
    return eval;
  };
  SolverConfig config;
  config.max_iterations = 4;
  config.relative_objective_tolerance = 1e-18;
  config.gradient_tolerance = 1e-14;
  Vector x0(2);
  x0 << -1.2, 1.0;
  const SolverResult result = lbfgs_minimize(rosenbrock, x0, config);
  CHECK(result.reason == TerminationReason::MaxIterations);
  CHECK(result.iterations == 4);
}

TEST_CASE("non-finite region aborts with the last good iterate") {
  // Finite at the start, NaN a short way along the descent direction; the
  // step-halving budget runs out and the solver reports the non-finite stop.
  const auto f = [](const Vector& x) {
    ObjectiveEvaluation eval;
    if (x[0] < -1e-3) {
      eval.value = std::numeric_limits<double>::quiet_NaN();
      eval.gradient = Vector::Constant(1, std::numeric_limits<double>::quiet_NaN());
      return eval;
    }
    eval.value = x[0];  // slope pushes toward the NaN region, no minimum
    eval.gradient = Vector::Constant(1, 1.0);
    return eval;
  };
  Vector x0(1);
  x0 << 1.0;
  const SolverResult result = lbfgs_minimize(f, x0, {});
  CHECK(result.reason == TerminationReason::NonFiniteObjective);
  CHECK(std::isfinite(result.value));
  CHECK(result.value <= 1.0);
}

TEST_CASE("objective must be finite at the start") {
  const auto f = [](const Vector& x) {
    return ObjectiveEvaluation{std::numeric_limits<double>::infinity(), x};
  };
  CHECK_THROWS_AS(lbfgs_minimize(f, Vector::Ones(2), {}), SolverError);
}

TEST_CASE("solver config is validated") {
  SolverConfig bad;
  bad.memory_pairs = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.gradient_tolerance = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.max_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("finite differences: simple cases") {
  const auto square = [](const Vector& x) { return x[0] * x[0]; };
  Vector x(1);
  x << 3.0;
  const Vector g = finite_difference_gradient(square, x, 1e-5);
  CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-6));

  const auto constant = [](const Vector&) { return 4.2; };
  const Vector gz = finite_difference_gradient(constant, Vector::Ones(5), 1e-5);
  CHECK(gz.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("finite differences report the offending coordinate") {
  const auto f = [](const Vector& x) {
    return x[1] > 1.0 ? std::numeric_limits<double>::quiet_NaN() : x.sum();
  };
  Vector x(3);
  x << 0.0, 1.0, 0.0;  // probing coordinate 1 upward goes non-finite
  CHECK_THROWS_WITH_AS(finite_difference_gradient(f, x, 1e-3),
                       doctest::Contains("coordinate 1"), SolverError);
  CHECK_THROWS_AS(finite_difference_gradient(f, x, 0.0), ConfigError);
}
