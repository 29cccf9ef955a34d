#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hoverid/matrix.hpp"

namespace hoverid {

struct LmOptions {
  double mu0 = 1e-3;
  double mu_factor = 10.0;
  std::size_t max_iters = 200;
  double grad_tol = 1e-8;   // on ||J^T r||_inf
  double step_tol = 1e-10;  // on ||delta||_2 relative to ||theta||_2
  double cost_tol = 0.0;
  std::size_t max_inflations = 30;

  void validate() const;
};

enum class Termination { GradTol, StepTol, MaxIters, CostTol };

std::string to_string(Termination t);

struct IterationRecord {
  std::size_t iter = 0;
  double cost = 0.0;
  double mu = 0.0;
  double grad_inf_norm = 0.0;
  double step_norm = 0.0;
};

struct FitResult {
  Vector theta;
  double cost = 0.0;  // V_N = ||r||^2 / N
  std::size_t iterations = 0;  // accepted steps
  Termination termination = Termination::MaxIters;
  Vector cost_history;  // initial cost, then the cost after every accepted step
  std::vector<IterationRecord> log;
};

// Fills r(theta) and, when jac is non-null, the Jacobian dr/dtheta
// (rows = residuals). `samples` is the N of the cost (1/N) sum ||e(t)||^2;
// zero means the residual count.
struct LeastSquaresProblem {
  std::function<void(const Vector& theta, Vector& r, Matrix* jac)> evaluate;
  std::size_t samples = 0;
};

// Mean squared error (1/N) sum_t ||y(t) - y_hat(t)||^2.
double mse(const std::vector<Vector>& y, const std::vector<Vector>& y_hat);
double mse(std::span<const double> y, std::span<const double> y_hat);

// Solves (J^T J + mu I) delta = -J^T r.
Vector lm_step(const Matrix& jac, std::span<const double> r, double mu);

// Levenberg-Marquardt with identity damping. A trial step is accepted when
// the cost decreases (mu /= mu_factor); otherwise mu *= mu_factor and the
// step is retried, at most max_inflations times per iteration.
FitResult lm_minimize(const LeastSquaresProblem& problem, Vector theta0, const LmOptions& opts);

// CSV columns iter,cost,mu,grad_inf_norm,step_norm.
void write_iteration_log_csv(std::ostream& os, const std::vector<IterationRecord>& log);

}  // namespace hoverid
