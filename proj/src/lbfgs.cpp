#include "coldrec/lbfgs.hpp"

#include <cmath>
#include <deque>

namespace coldrec {

namespace {

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;
constexpr int kMaxLineSearchEvals = 60;
constexpr int kMaxNonFiniteHalvings = 30;
constexpr int kMaxZoomSteps = 40;

bool is_finite(const ObjectiveEvaluation& eval) {
  return std::isfinite(eval.value) && eval.gradient.allFinite();
}

struct CorrectionPair {
  Vector s;
  Vector y;
  double rho;
};

// Two-loop recursion; `history` is ordered oldest-first.
Vector search_direction(const Vector& gradient, const std::deque<CorrectionPair>& history) {
  Vector q = -gradient;
  if (history.empty()) return q;

  std::vector<double> alpha(history.size());
  for (std::size_t i = history.size(); i-- > 0;) {
    const CorrectionPair& p = history[i];
    alpha[i] = p.rho * p.s.dot(q);
    q -= alpha[i] * p.y;
  }
  const CorrectionPair& last = history.back();
  const double gamma = last.s.dot(last.y) / last.y.squaredNorm();
  q *= gamma;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const CorrectionPair& p = history[i];
    const double beta = p.rho * p.y.dot(q);
    q += (alpha[i] - beta) * p.s;
  }
  return q;
}

struct LineSearchResult {
  bool success = false;
  bool non_finite = false;
  double alpha = 0.0;
  ObjectiveEvaluation eval;
  Vector x;
};

struct ProbePoint {
  double alpha;
  double value;
  double slope;
  ObjectiveEvaluation eval;
  Vector x;
};

// Strong Wolfe search: bracketing phase with step doubling, then bisection
// zoom. Falls back to the best sufficient-decrease point when the curvature
// condition is out of reach within the evaluation budget.
LineSearchResult wolfe_line_search(const Objective& objective, const Vector& x0,
                                   const ObjectiveEvaluation& at_zero, const Vector& direction,
                                   double alpha_init) {
  LineSearchResult out;
  const double value0 = at_zero.value;
  const double slope0 = at_zero.gradient.dot(direction);
  if (!(slope0 < 0.0)) return out;  // not a descent direction

  int evals = 0;
  int halvings = 0;
  bool have_armijo = false;
  ProbePoint best_armijo;

  auto probe = [&](double alpha, ProbePoint& point) -> bool {
    // Returns false on a non-finite evaluation.
    point.alpha = alpha;
    point.x = x0 + alpha * direction;
    point.eval = objective(point.x);
    ++evals;
    if (point.eval.gradient.size() != x0.size())
      throw SolverError("lbfgs_minimize: gradient length does not match parameter length");
    if (!is_finite(point.eval)) return false;
    point.value = point.eval.value;
    point.slope = point.eval.gradient.dot(direction);
    if (point.value <= value0 + kC1 * alpha * slope0 &&
        (!have_armijo || point.value < best_armijo.value)) {
      have_armijo = true;
      best_armijo = point;
    }
    return true;
  };

  // One secant step toward the slope root before finalizing an accepted
  // point. For quadratics this lands on the exact line minimizer, which keeps
  // successive directions conjugate; the refined point is only taken when it
  // still satisfies both Wolfe conditions with a lower value.
  auto accept = [&](const ProbePoint& point) {
    const ProbePoint* chosen = &point;
    ProbePoint refined;
    const double denom = slope0 - point.slope;
    if (std::abs(denom) > 1e-300) {
      const double alpha_star = point.alpha * slope0 / denom;
      if (std::isfinite(alpha_star) && alpha_star > 0.0 && alpha_star <= 10.0 * point.alpha &&
          std::abs(alpha_star - point.alpha) > 1e-12 * point.alpha && probe(alpha_star, refined) &&
          refined.value <= point.value &&
          refined.value <= value0 + kC1 * alpha_star * slope0 &&
          std::abs(refined.slope) <= -kC2 * slope0) {
        chosen = &refined;
      }
    }
    out.success = true;
    out.alpha = chosen->alpha;
    out.eval = chosen->eval;
    out.x = chosen->x;
  };

  auto accept_fallback = [&]() -> bool {
    if (!have_armijo) return false;
    accept(best_armijo);
    return true;
  };

  ProbePoint lo{0.0, value0, slope0, at_zero, x0};
  ProbePoint hi;
  bool bracketed = false;

  ProbePoint prev = lo;
  double alpha = alpha_init;
  while (evals < kMaxLineSearchEvals) {
    ProbePoint cur;
    if (!probe(alpha, cur)) {
      if (++halvings > kMaxNonFiniteHalvings) {
        out.non_finite = true;
        return out;
      }
      alpha = 0.5 * (prev.alpha + alpha);
      continue;
    }
    // Approximate-Wolfe acceptance: once objective differences shrink below
    // rounding, the curvature condition plus a non-increasing value is the
    // reliable test.
    if (cur.value <= value0 && std::abs(cur.slope) <= -kC2 * slope0) {
      accept(cur);
      return out;
    }
    if (cur.value > value0 + kC1 * alpha * slope0 || (prev.alpha > 0.0 && cur.value >= prev.value)) {
      lo = prev;
      hi = cur;
      bracketed = true;
      break;
    }
    if (cur.slope >= 0.0) {
      lo = cur;
      hi = prev;
      bracketed = true;
      break;
    }
    prev = cur;
    alpha = std::min(2.0 * alpha, 1e20);
  }

  if (!bracketed) {
    if (accept_fallback()) return out;
    return out;
  }

  // Zoom: bisect [lo, hi]; lo always satisfies sufficient decrease.
  for (int step = 0; step < kMaxZoomSteps && evals < kMaxLineSearchEvals; ++step) {
    const double width = std::abs(hi.alpha - lo.alpha);
    if (width < 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
    double alpha_j = 0.5 * (lo.alpha + hi.alpha);
    ProbePoint cand;
    if (!probe(alpha_j, cand)) {
      if (++halvings > kMaxNonFiniteHalvings) {
        out.non_finite = !have_armijo;
        if (accept_fallback()) return out;
        return out;
      }
      hi.alpha = alpha_j;  // shrink toward the finite end
      continue;
    }
    if (cand.value <= value0 && std::abs(cand.slope) <= -kC2 * slope0) {
      accept(cand);
      return out;
    }
    if (cand.value > value0 + kC1 * alpha_j * slope0 || cand.value >= lo.value) {
      hi = cand;
    } else {
      if (cand.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = cand;
    }
  }

  if (accept_fallback()) return out;
  return out;
}

}  // namespace

void SolverConfig::validate() const {
  if (memory_pairs < 1) throw ConfigError("SolverConfig: memory_pairs must be >= 1");
  if (max_iterations < 1) throw ConfigError("SolverConfig: max_iterations must be >= 1");
  if (!(gradient_tolerance > 0.0))
    throw ConfigError("SolverConfig: gradient_tolerance must be > 0");
  if (!(relative_objective_tolerance > 0.0))
    throw ConfigError("SolverConfig: relative_objective_tolerance must be > 0");
}

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::GradientTolerance: return "gradient_tolerance";
    case TerminationReason::ObjectiveTolerance: return "objective_tolerance";
    case TerminationReason::MaxIterations: return "max_iterations";
    case TerminationReason::LineSearchFailure: return "line_search_failure";
    case TerminationReason::NonFiniteObjective: return "non_finite_objective";
  }
  return "unknown";
}

SolverResult lbfgs_minimize(const Objective& objective, Vector x0, const SolverConfig& config) {
  config.validate();

  SolverResult result;
  ObjectiveEvaluation current = objective(x0);
  if (current.gradient.size() != x0.size())
    throw SolverError("lbfgs_minimize: gradient length does not match parameter length");
  if (!is_finite(current))
    throw SolverError("lbfgs_minimize: objective is not finite at the starting point");

  Vector x = std::move(x0);
  result.trace.push_back(current.value);

  std::deque<CorrectionPair> history;
  result.reason = TerminationReason::MaxIterations;
  int stalled_steps = 0;  // consecutive sub-tolerance decreases

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    if (current.gradient.lpNorm<Eigen::Infinity>() < config.gradient_tolerance) {
      result.reason = TerminationReason::GradientTolerance;
      break;
    }

    Vector direction = search_direction(current.gradient, history);
    if (direction.dot(current.gradient) >= 0.0) {
      // Curvature information went stale; restart from steepest descent.
      history.clear();
      direction = -current.gradient;
    }

    const double alpha_init =
        history.empty() ? 1.0 / std::max(current.gradient.norm(), 1e-12) : 1.0;
    const LineSearchResult ls =
        wolfe_line_search(objective, x, current, direction, alpha_init);
    if (!ls.success) {
      result.reason = ls.non_finite ? TerminationReason::NonFiniteObjective
                                    : TerminationReason::LineSearchFailure;
      break;
    }

    Vector s = ls.x - x;
    Vector y = ls.eval.gradient - current.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      history.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(history.size()) > config.memory_pairs) history.pop_front();
    }

    const double previous_value = current.value;
    x = ls.x;
    current = ls.eval;
    result.trace.push_back(current.value);
    result.iterations = iter;

    if (current.gradient.lpNorm<Eigen::Infinity>() < config.gradient_tolerance) {
      result.reason = TerminationReason::GradientTolerance;
      break;
    }

    // Stop after a few consecutive negligible decreases; saturated steps can
    // still carry the gradient down once values hit rounding level.
    const double decrease = previous_value - current.value;
    const double scale = std::max({std::abs(previous_value), std::abs(current.value), 1.0});
    stalled_steps = decrease <= config.relative_objective_tolerance * scale
                        ? stalled_steps + 1
                        : 0;
    if (stalled_steps >= 3) {
      result.reason = TerminationReason::ObjectiveTolerance;
      break;
    }
  }

  result.x = std::move(x);
  result.value = current.value;
  result.gradient = std::move(current.gradient);
  return result;
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& value_fn,
                                  const Vector& x, double step) {
  if (!(step > 0.0)) throw ConfigError("finite_difference_gradient: step must be > 0");
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double forward = value_fn(probe);
    probe[i] = x[i] - step;
    const double backward = value_fn(probe);
    probe[i] = x[i];
    if (!std::isfinite(forward) || !std::isfinite(backward))
      throw SolverError("finite_difference_gradient: non-finite value at coordinate " +
                        std::to_string(i));
    grad[i] = (forward - backward) / (2.0 * step);
  }
  return grad;
}

}  // namespace coldrec
