#pragma once

#include <functional>
#include <string>
#include <vector>

#include "coldrec/types.hpp"

namespace coldrec {

// Loss value together with its gradient; the gradient must have the same
// length as the parameter vector it was evaluated at.
struct ObjectiveEvaluation {
  double value = 0.0;
  Vector gradient;
};

using Objective = std::function<ObjectiveEvaluation(const Vector&)>;

struct SolverConfig {
  int memory_pairs = 10;
  int max_iterations = 800;
  double gradient_tolerance = 1e-5;            // sup-norm of the gradient
  double relative_objective_tolerance = 1e-9;  // relative per-step decrease

  void validate() const;
};

enum class TerminationReason {
  GradientTolerance,
  ObjectiveTolerance,
  MaxIterations,
  LineSearchFailure,
  NonFiniteObjective,
};

std::string to_string(TerminationReason reason);

struct SolverResult {
  Vector x;
  double value = 0.0;
  Vector gradient;
  std::vector<double> trace;  // objective value at x0 and after each accepted step
  TerminationReason reason = TerminationReason::MaxIterations;
  int iterations = 0;
};

// Limited-memory BFGS with a strong Wolfe line search (c1 = 1e-4, c2 = 0.9).
// The first step is steepest descent with trial step 1/|g0|; later iterations
// use the two-loop recursion with gamma = s'y / y'y scaling. Non-finite
// objective values during the line search trigger step halving (up to 30
// times) before the run aborts at the last good iterate.
SolverResult lbfgs_minimize(const Objective& objective, Vector x0,
                            const SolverConfig& config = {});

// Central finite differences, one evaluation pair per coordinate. Used as the
// gradient oracle in tests of both model objectives.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& value_fn,
                                  const Vector& x, double step);

}  // namespace coldrec
