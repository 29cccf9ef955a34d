#include <gtest/gtest.h>

#include <cmath>

#include "hoverid/narx.hpp"
#include "support.hpp"

using namespace hoverid;

namespace {

std::vector<Vector> seq(std::size_t n, std::size_t c, double base) {
  std::vector<Vector> s(n, Vector(c));
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t i = 0; i < c; ++i) s[t][i] = base + 100.0 * static_cast<double>(t) + static_cast<double>(i);
  return s;
}

// A 1-1 linear network with 2-lag output and 1-lag input so the model is
// y(t) = a1 y(t-1) + a2 y(t-2) + b u(t-1) in normalized units.
NarxModel linear_narx(double a1, double a2, double b) {
  NarxModel m;
  m.cfg = {2, 1, 1, 1, 1};
  m.mlp = mlp_zeros({3, 1});
  m.mlp.weights[0] = Matrix::from_rows({{a1, a2, b}});
  m.y_norm = Normalizer::identity(1);
  m.u_norm = Normalizer::identity(1);
  return m;
}

}  // namespace

TEST(Regressor, MatchesBruteForceIndexing) {
  for (std::size_t na = 0; na <= 3; ++na)
    for (std::size_t nb = 1; nb <= 3; ++nb)
      for (std::size_t nk = 0; nk <= 2; ++nk) {
        const NarxConfig cfg{na, nb, nk, 2, 3};
        const auto y = seq(20, 2, 0.0), u = seq(20, 3, 0.5);
        for (std::size_t t = cfg.max_lag(); t < 20; ++t) {
          const Vector phi = build_regressor(y, u, t, cfg);
          ASSERT_EQ(phi.size(), cfg.regressor_length());
          std::size_t k = 0;
          for (std::size_t i = 1; i <= na; ++i)
            for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(phi[k++], y[t - i][c]);
          for (std::size_t j = 0; j < nb; ++j)
            for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(phi[k++], u[t - nk - j][c]);
        }
        if (cfg.max_lag() > 0) EXPECT_THROW(build_regressor(y, u, cfg.max_lag() - 1, cfg), Error);
      }
}

TEST(Regressor, MaxLag) {
  EXPECT_EQ((NarxConfig{2, 2, 1, 1, 1}.max_lag()), 2u);
  EXPECT_EQ((NarxConfig{1, 3, 2, 1, 1}.max_lag()), 4u);
  EXPECT_EQ((NarxConfig{0, 1, 0, 1, 1}.max_lag()), 0u);
  EXPECT_THROW((NarxConfig{1, 0, 1, 1, 1}.validate()), Error);
}

TEST(Normalizer, FitAndRoundTrip) {
  const std::vector<Vector> s{{1, 10}, {3, 10}, {5, 10}, {100, -1}};
  const Normalizer n = Normalizer::fit(s, 0, 3);
  EXPECT_DOUBLE_EQ(n.mean[0], 3.0);
  EXPECT_DOUBLE_EQ(n.std[0], std::sqrt(8.0 / 3.0));
  EXPECT_EQ(n.std[1], Normalizer::kStdFloor);
  const Vector x{2.5, -4.0};
  const Vector back = n.denormalize(n.normalize(x));
  EXPECT_NEAR(back[0], x[0], 1e-15);
  EXPECT_NEAR(back[1], x[1], 1e-15);
  EXPECT_THROW(Normalizer::fit(s, 2, 2), Error);
}

TEST(NarxModel, LinearizationMatchesFiniteDifferences) {
  std::mt19937_64 g(8);
  NarxModel m;
  m.cfg = {2, 2, 1, 2, 3};
  m.mlp = mlp_init({m.cfg.regressor_length(), 5, 2}, 4);
  m.y_norm = {{0.3, -1.0}, {2.0, 0.5}};
  m.u_norm = {{0.0, 0.1, -0.2}, {0.3, 1.5, 0.7}};
  m.validate();
  const Vector phi = testsupport::random_vector(g, m.cfg.regressor_length(), -1.0, 1.0);
  const auto lin = m.linearize(phi, true, true);
  EXPECT_EQ(lin.y, m.predict(phi));
  const double h = 1e-6;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    Vector p = phi, q = phi;
    p[k] += h;
    q[k] -= h;
    const Vector yp = m.predict(p), yq = m.predict(q);
    for (std::size_t o = 0; o < 2; ++o)
      EXPECT_LT(testsupport::rel_err(lin.d_regressor(o, k), (yp[o] - yq[o]) / (2 * h)), 1e-6);
  }
  const Vector theta = flatten(m.mlp);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    NarxModel a = m, b = m;
    Vector ta = theta, tb = theta;
    ta[k] += h;
    tb[k] -= h;
    unflatten(a.mlp, ta);
    unflatten(b.mlp, tb);
    const Vector ya = a.predict(phi), yb = b.predict(phi);
    for (std::size_t o = 0; o < 2; ++o)
      EXPECT_LT(testsupport::rel_err(lin.d_params(o, k), (ya[o] - yb[o]) / (2 * h)), 1e-6);
  }
}

TEST(NarxModel, FreeRunMatchesDifferenceEquation) {
  const NarxModel m = linear_narx(1.2, -0.5, 0.3);
  std::vector<Vector> u(50);
  for (std::size_t t = 0; t < u.size(); ++t) u[t] = {std::sin(0.3 * static_cast<double>(t))};
  const std::vector<Vector> init{{0.1}, {-0.2}};
  const auto y = narx_free_run(m, u, init);
  ASSERT_EQ(y.size(), 50u);
  std::vector<double> ref(50);
  ref[0] = 0.1;
  ref[1] = -0.2;
  for (std::size_t t = 2; t < 50; ++t) ref[t] = 1.2 * ref[t - 1] - 0.5 * ref[t - 2] + 0.3 * u[t - 1][0];
  for (std::size_t t = 0; t < 50; ++t) EXPECT_NEAR(y[t][0], ref[t], 1e-12);
  // One-step prediction on the same data recovers the recursion too.
  for (std::size_t t = 2; t < 50; ++t) EXPECT_NEAR(narx_one_step(m, y, u, t)[0], ref[t], 1e-12);
}

TEST(NarxModel, FreeRunDivergenceAndHistory) {
  const NarxModel m = linear_narx(3.0, 0.0, 0.0);
  EXPECT_THROW(narx_free_run(m, std::vector<Vector>(10, Vector{0.0}), {{0.0}}), Error);
  try {
    narx_free_run(m, std::vector<Vector>(100, Vector{0.0}), {{1.0}, {1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Overflow);
  }
}

TEST(NarxModel, ValidateCatchesMismatch) {
  NarxModel m = linear_narx(1, 0, 1);
  m.cfg.na = 3;
  EXPECT_THROW(m.validate(), Error);
}
