#include "hoverid/lm.hpp"

#include <cmath>
#include <ostream>

#include "hoverid/kernels.hpp"
#include "hoverid/linalg.hpp"
#include "hoverid/trace_io.hpp"

namespace hoverid {

void LmOptions::validate() const {
  if (!(mu0 > 0.0) || !(mu_factor > 1.0) || max_iters == 0 || !(grad_tol >= 0.0) || !(step_tol >= 0.0) ||
      !(cost_tol >= 0.0)) {
    throw Error(ErrorCode::BadConfig, "invalid Levenberg-Marquardt options");
  }
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::GradTol: return "GradTol";
    case Termination::StepTol: return "StepTol";
    case Termination::MaxIters: return "MaxIters";
    case Termination::CostTol: return "CostTol";
  }
  return "MaxIters";
}

double mse(const std::vector<Vector>& y, const std::vector<Vector>& y_hat) {
  if (y.empty()) throw Error(ErrorCode::EmptySequence, "mse of an empty sequence");
  if (y.size() != y_hat.size()) throw Error(ErrorCode::DimensionMismatch, "mse sequence lengths differ");
  double acc = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (y[t].size() != y_hat[t].size()) throw Error(ErrorCode::DimensionMismatch, "mse channel counts differ");
    for (std::size_t i = 0; i < y[t].size(); ++i) {
      const double e = y[t][i] - y_hat[t][i];
      acc += e * e;
    }
  }
  return acc / static_cast<double>(y.size());
}

double mse(std::span<const double> y, std::span<const double> y_hat) {
  if (y.empty()) throw Error(ErrorCode::EmptySequence, "mse of an empty sequence");
  if (y.size() != y_hat.size()) throw Error(ErrorCode::DimensionMismatch, "mse sequence lengths differ");
  double acc = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) acc += (y[t] - y_hat[t]) * (y[t] - y_hat[t]);
  return acc / static_cast<double>(y.size());
}

namespace {

Vector damped_solve(const Matrix& gram, const Vector& grad, double mu) {
  Matrix h = gram;
  for (std::size_t i = 0; i < h.rows(); ++i) h(i, i) += mu;
  Vector neg(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) neg[i] = -grad[i];
  return LuFactorization<double>(std::move(h)).solve(neg);
}

bool all_finite(const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double sum_squares(const Vector& r) {
  double acc = 0.0;
  for (double x : r) acc += x * x;
  return acc;
}

}  // namespace

Vector lm_step(const Matrix& jac, std::span<const double> r, double mu) {
  return damped_solve(kernels::gram(jac), kernels::transpose_times(jac, r), mu);
}

FitResult lm_minimize(const LeastSquaresProblem& problem, Vector theta0, const LmOptions& opts) {
  opts.validate();
  if (!problem.evaluate) throw Error(ErrorCode::BadConfig, "least-squares problem has no residual function");
  if (!all_finite(theta0)) throw Error(ErrorCode::NonFiniteResidual, "initial parameters are not finite");

  FitResult res;
  res.theta = std::move(theta0);
  Vector r;
  Matrix jac;
  problem.evaluate(res.theta, r, &jac);
  if (r.empty()) throw Error(ErrorCode::EmptySequence, "problem has no residuals");
  if (!all_finite(r) || !jac.all_finite()) {
    throw Error(ErrorCode::NonFiniteResidual, "residuals or Jacobian non-finite at the initial point");
  }
  if (jac.rows() != r.size() || jac.cols() != res.theta.size()) {
    throw Error(ErrorCode::DimensionMismatch, "Jacobian shape does not match residuals and parameters");
  }
  const double denom = static_cast<double>(problem.samples == 0 ? r.size() : problem.samples);
  double cost = sum_squares(r) / denom;
  res.cost_history.push_back(cost);

  double mu = opts.mu0;
  Vector r_trial;
  for (;;) {
    if (cost <= opts.cost_tol) {
      res.termination = Termination::CostTol;
      break;
    }
    const Vector grad = kernels::transpose_times(jac, r);
    const double grad_inf = norm_inf(grad);
    if (grad_inf <= opts.grad_tol) {
      res.termination = Termination::GradTol;
      break;
    }
    if (res.iterations >= opts.max_iters) {
      res.termination = Termination::MaxIters;
      break;
    }
    const Matrix gram = kernels::gram(jac);

    bool accepted = false;
    bool stalled = false;
    std::size_t singular = 0;
    for (std::size_t attempt = 0; attempt <= opts.max_inflations; ++attempt) {
      Vector delta;
      try {
        delta = damped_solve(gram, grad, mu);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularMatrix) throw;
        ++singular;
        mu *= opts.mu_factor;
        continue;
      }
      const double step_norm = norm2(delta);
      if (step_norm <= opts.step_tol * (norm2(res.theta) + opts.step_tol)) {
        stalled = true;
        break;
      }
      Vector trial = res.theta;
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += delta[i];
      problem.evaluate(trial, r_trial, nullptr);
      const double trial_cost = all_finite(r_trial) ? sum_squares(r_trial) / denom : INFINITY;
      if (trial_cost < cost) {
        res.theta = std::move(trial);
        problem.evaluate(res.theta, r, &jac);
        cost = trial_cost;
        ++res.iterations;
        res.cost_history.push_back(cost);
        res.log.push_back({res.iterations, cost, mu, grad_inf, step_norm});
        mu /= opts.mu_factor;
        accepted = true;
        break;
      }
      mu *= opts.mu_factor;
    }
    if (!accepted) {
      if (!stalled && singular > opts.max_inflations) {
        throw Error(ErrorCode::LinearSolveFailure, "damped normal equations stayed singular");
      }
      res.termination = Termination::StepTol;
      break;
    }
  }
  res.cost = cost;
  return res;
}

void write_iteration_log_csv(std::ostream& os, const std::vector<IterationRecord>& log) {
  os << "iter,cost,mu,grad_inf_norm,step_norm\n";
  for (const auto& rec : log) {
    os << rec.iter << ',' << format_number(rec.cost) << ',' << format_number(rec.mu) << ','
       << format_number(rec.grad_inf_norm) << ',' << format_number(rec.step_norm) << '\n';
  }
}

}  // namespace hoverid
