#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hoverid/linalg.hpp"
#include "hoverid/lm.hpp"
#include "support.hpp"

using namespace hoverid;

namespace {

LeastSquaresProblem linear_problem(const Matrix& a, const Vector& b) {
  return {[a, b](const Vector& th, Vector& r, Matrix* j) {
            const Matrix ax = a * Matrix::column(th);
            r.assign(b.size(), 0.0);
            for (std::size_t i = 0; i < b.size(); ++i) r[i] = ax(i, 0) - b[i];
            if (j) *j = a;
          },
          0};
}

LeastSquaresProblem rosenbrock() {
  return {[](const Vector& th, Vector& r, Matrix* j) {
            r = {10.0 * (th[1] - th[0] * th[0]), 1.0 - th[0]};
            if (j) *j = Matrix::from_rows({{-20.0 * th[0], 10.0}, {-1.0, 0.0}});
          },
          0};
}

}  // namespace

TEST(Lm, LinearProblemConvergesFast) {
  std::mt19937_64 g(2);
  const Matrix a = testsupport::random_matrix(g, 30, 4);
  const Vector xs{1.0, -2.0, 0.5, 3.0};
  const Matrix bm = a * Matrix::column(xs);
  const Vector b = bm.storage();
  LmOptions o;
  o.mu0 = 1e-8;
  const FitResult f = lm_minimize(linear_problem(a, b), Vector(4, 0.0), o);
  EXPECT_LE(f.iterations, 3u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(f.theta[i], xs[i], 1e-7);
  EXPECT_LT(f.cost, 1e-14);
}

TEST(Lm, Rosenbrock) {
  LmOptions o;
  o.max_iters = 500;
  const FitResult f = lm_minimize(rosenbrock(), {-1.2, 1.0}, o);
  EXPECT_NEAR(f.theta[0], 1.0, 1e-6);
  EXPECT_NEAR(f.theta[1], 1.0, 1e-6);
  EXPECT_NE(f.termination, Termination::MaxIters);
}

TEST(Lm, CostHistoryMonotoneAndLogConsistent) {
  // y = a sin(b t) fit from a rough guess.
  Vector t(60), y(60);
  for (std::size_t i = 0; i < 60; ++i) {
    t[i] = 0.1 * static_cast<double>(i);
    y[i] = 2.0 * std::sin(1.3 * t[i]);
  }
  LeastSquaresProblem p{[&](const Vector& th, Vector& r, Matrix* j) {
                          r.resize(60);
                          if (j) *j = Matrix(60, 2);
                          for (std::size_t i = 0; i < 60; ++i) {
                            r[i] = th[0] * std::sin(th[1] * t[i]) - y[i];
                            if (j) {
                              (*j)(i, 0) = std::sin(th[1] * t[i]);
                              (*j)(i, 1) = th[0] * t[i] * std::cos(th[1] * t[i]);
                            }
                          }
                        },
                        0};
  const FitResult f = lm_minimize(p, {1.0, 1.0}, LmOptions{});
  EXPECT_NEAR(f.theta[0], 2.0, 1e-6);
  EXPECT_NEAR(f.theta[1], 1.3, 1e-6);
  ASSERT_EQ(f.cost_history.size(), f.iterations + 1);
  for (std::size_t i = 1; i < f.cost_history.size(); ++i) EXPECT_LT(f.cost_history[i], f.cost_history[i - 1]);
  EXPECT_EQ(f.cost, f.cost_history.back());
  std::ostringstream os;
  write_iteration_log_csv(os, f.log);
  EXPECT_EQ(os.str().rfind("iter,cost,mu,grad_inf_norm,step_norm\n", 0), 0u);
}

TEST(Lm, CostUsesSampleCount) {
  const Matrix a = Matrix::identity(2);
  LeastSquaresProblem p = linear_problem(a, {3.0, 4.0});
  p.samples = 5;
  LmOptions o;
  o.max_iters = 1;
  const FitResult f = lm_minimize(p, {0.0, 0.0}, o);
  EXPECT_DOUBLE_EQ(f.cost_history.front(), 25.0 / 5.0);
  EXPECT_EQ(f.termination, Termination::MaxIters);
  EXPECT_EQ(f.iterations, 1u);
}

TEST(LmStep, SmallMuIsGaussNewtonLargeMuIsSteepestDescent) {
  std::mt19937_64 g(9);
  const Matrix j = testsupport::random_matrix(g, 12, 3);
  const Vector r = testsupport::random_vector(g, 12);
  const Matrix jt = j.transposed();
  const Matrix grad = jt * Matrix::column(r);
  const Vector gn = lm_step(j, r, 0.0);
  const Matrix gn_ref = lu_solve(jt * j, grad * -1.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(gn[i], gn_ref(i, 0), 1e-10);
  const Vector sd = lm_step(j, r, 1e8);
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    dot += sd[i] * -grad(i, 0);
    na += sd[i] * sd[i];
    nb += grad(i, 0) * grad(i, 0);
  }
  const double cosang = dot / std::sqrt(na * nb);
  EXPECT_GT(cosang, 1.0 - 1e-12);
  EXPECT_NEAR(std::sqrt(na), std::sqrt(nb) / 1e8, 1e-5 * std::sqrt(nb) / 1e8);
}

TEST(Lm, AlreadyAtMinimumTerminatesOnGradient) {
  // Inconsistent system: the minimum has nonzero cost.
  const FitResult f = lm_minimize(linear_problem(Matrix::from_rows({{1}, {1}}), {0.0, 2.0}), {1.0}, LmOptions{});
  EXPECT_EQ(f.termination, Termination::GradTol);
  EXPECT_EQ(f.iterations, 0u);
  EXPECT_DOUBLE_EQ(f.cost, 1.0);
  const FitResult z = lm_minimize(linear_problem(Matrix::identity(2), {1.0, 1.0}), {1.0, 1.0}, LmOptions{});
  EXPECT_EQ(z.cost, 0.0);
  EXPECT_EQ(z.iterations, 0u);
}

TEST(Lm, NonFiniteResidualThrows) {
  LeastSquaresProblem p{[](const Vector&, Vector& r, Matrix* j) {
                          r = {std::nan("")};
                          if (j) *j = Matrix(1, 1);
                        },
                        0};
  try {
    lm_minimize(p, {0.0}, LmOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteResidual);
  }
}

TEST(Mse, Values) {
  EXPECT_DOUBLE_EQ(mse(Vector{1, 2}, Vector{0, 0}), 2.5);
  EXPECT_DOUBLE_EQ(mse(std::vector<Vector>{{1, 1}, {0, 2}}, std::vector<Vector>{{0, 0}, {0, 0}}), 3.0);
  LmOptions o;
  o.mu_factor = 1.0;
  EXPECT_THROW(o.validate(), Error);
}
