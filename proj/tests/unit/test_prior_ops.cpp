#include <cmath>
#include <random>

#include "doctest.h"
#include "hjr/error.hpp"
#include "hjr/prior_ops.hpp"
#include "oracles.hpp"

using namespace hjr;

namespace {

DataBlock scalar_block() {
  DataBlock b;
  b.phi = Matrix::Constant(1, 1, 1.0);
  b.y = Vector::Constant(1, 2.0);
  b.sigma2 = 1.0;
  return b;
}

RiccatiState trained_scalar() {
  return incorporate(init_state(GaussianPrior::isotropic(1)), scalar_block(), 1e-4);
}

}  // namespace

TEST_CASE("retarget_prior_mean") {
  const auto s = trained_scalar();
  const auto at0 = retarget_prior_mean(s, Vector::Zero(1));
  const auto again = retarget_prior_mean(s, Vector::Zero(1));
  CHECK(at0.mu == again.mu);
  const auto at2 = retarget_prior_mean(s, Vector::Constant(1, 2.0));
  CHECK(std::abs(at2.mu(0) - 2.0) < 1e-9);
  CHECK(std::abs(at2.sigma(0, 0) - 0.5) < 1e-9);
  CHECK(at2.sigma == at0.sigma);
  try {
    retarget_prior_mean(s, Vector::Zero(2));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
    CHECK(e.operation() == "retarget_prior_mean");
  }
}

TEST_CASE("matrix_inv_sqrt") {
  CHECK(matrix_inv_sqrt(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3), 1e-15));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  const Matrix r = matrix_inv_sqrt(d);
  CHECK(r(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(std::abs(r(0, 1)) < 1e-16);

  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    const Matrix a = oracle::random_spd(rng, 5, 0.1, 10.0);
    const Matrix s = matrix_inv_sqrt(a);
    CHECK((s * s * a - Matrix::Identity(5, 5)).norm() < 1e-10);
    CHECK(s.isApprox(s.transpose(), 0.0));
  }

  Matrix singular = Matrix::Identity(2, 2);
  singular(1, 1) = 1e-16;
  CHECK_THROWS_AS(matrix_inv_sqrt(singular), Error);
  Matrix neg = Matrix::Identity(2, 2);
  neg(0, 0) = -1;
  try {
    matrix_inv_sqrt(neg);
    FAIL("expected NonSPD");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonSPD);
  }
}

TEST_CASE("tune_prior_covariance") {
  const auto s = trained_scalar();
  const Vector x = Vector::Zero(1);
  SUBCASE("same prior is the identity") {
    const auto out = tune_prior_covariance(s, {Matrix::Identity(1, 1), Matrix::Identity(1, 1), {}}, x, 1e-4);
    CHECK(std::abs(out.P(0, 0) - s.P(0, 0)) < 1e-8);
    CHECK(std::abs(out.q(0) - s.q(0)) < 1e-8);
  }
  SUBCASE("scalar 1 -> 4") {
    const auto out = tune_prior_covariance(s, {Matrix::Identity(1, 1), Matrix::Constant(1, 1, 4.0), {}}, x, 1e-4);
    const auto post = posterior(out, x);
    CHECK(std::abs(post.mu(0) - 1.6) < 1e-8);
    CHECK(std::abs(post.sigma(0, 0) - 0.8) < 1e-8);
  }
  SUBCASE("random instance against recomputation") {
    std::mt19937_64 rng(55);
    const Eigen::Index n = 5;
    const Matrix l_old = oracle::random_spd(rng, n), l_new = oracle::random_spd(rng, n);
    const Vector xr = Vector::Random(n);
    std::vector<DataBlock> blocks;
    for (int i = 0; i < 6; ++i) blocks.push_back(oracle::random_block(rng, 1 + i % 2, n, 0.5, 2.0));
    auto st = init_state(GaussianPrior{l_old, xr, 1.0});
    for (const auto& b : blocks) st = incorporate(st, b, 1e-3);
    const auto out = tune_prior_covariance(st, {l_old, l_new, {}}, xr, 1e-3);
    const auto want = oracle::normal_equations(l_new, l_new * xr, 1.0, blocks);
    const auto got = posterior(out, xr);
    CHECK(oracle::max_rel(got.mu, want.mu) < 1e-6);
    CHECK(oracle::max_rel(got.sigma, want.sigma) < 1e-6);
  }
  SUBCASE("inconsistent scale factor is rejected") {
    CovarianceRetune bad{Matrix::Identity(1, 1), Matrix::Constant(1, 1, 3.0), 4.0};
    CHECK_THROWS_AS(tune_prior_covariance(s, bad, x, 1e-3), Error);
  }
}

TEST_CASE("scale_prior_covariance") {
  const auto s = trained_scalar();
  const Vector x = Vector::Zero(1);
  const Matrix lam = Matrix::Identity(1, 1);
  SUBCASE("alpha 1 is the identity") {
    const auto out = scale_prior_covariance(s, lam, 1.0, 1e-4);
    CHECK(out.P == s.P);
    CHECK(out.q == s.q);
  }
  SUBCASE("alpha 4 with a midpoint sample") {
    bool saw_mid = false;
    const double h = 1.0 / 8000.0;  // lands exactly on s = 5/8
    const auto out = scale_prior_covariance(s, lam, 4.0, h, [&](const FlowSample& f) {
      if (std::abs(f.parameter - 1.6) < 1e-12) {
        saw_mid = true;
        const auto post = posterior(f.state, x);
        const std::vector<DataBlock> blocks{scalar_block()};
        const auto want = oracle::normal_equations(lam * 1.6, Vector::Zero(1), 1.0, blocks);
        CHECK(std::abs(post.mu(0) - want.mu(0)) < 1e-6);
        CHECK(std::abs(post.sigma(0, 0) - want.sigma(0, 0)) < 1e-6);
      }
    });
    CHECK(saw_mid);
    const auto post = posterior(out, x);
    CHECK(std::abs(post.mu(0) - 1.6) < 1e-8);
    CHECK(std::abs(post.sigma(0, 0) - 0.8) < 1e-8);
    const auto two = tune_prior_covariance(s, CovarianceRetune::scaled(lam, 4.0), x, 1e-4);
    CHECK(std::abs(two.P(0, 0) - out.P(0, 0)) < 1e-8);
    CHECK(std::abs(two.q(0) - out.q(0)) < 1e-8);
  }
  SUBCASE("bad factor") {
    CHECK_THROWS_AS(scale_prior_covariance(s, lam, 0.0, 1e-3), Error);
    CHECK_THROWS_AS(scale_prior_covariance(s, Matrix::Identity(2, 2), 2.0, 1e-3), Error);
  }
}

TEST_CASE("property: prior paths agree with the oracle and each other") {
  std::mt19937_64 rng(66);
  std::uniform_int_distribution<int> nd(1, 8), Nd(1, 10);
  std::uniform_real_distribution<double> ad(0.3, 3.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = nd(rng), N = Nd(rng);
    const Matrix l_old = oracle::random_spd(rng, n);
    const Vector x = Vector::Random(n);
    std::vector<DataBlock> blocks;
    for (int i = 0; i < N; ++i) blocks.push_back(oracle::random_block(rng, 1, n, 0.5, 2.0));
    auto st = init_state(GaussianPrior{l_old, x, 1.0});
    for (const auto& b : blocks) st = incorporate(st, b, 1e-3);
    const double alpha = ad(rng);
    const auto one = scale_prior_covariance(st, l_old, alpha, 1e-3);
    const auto two = tune_prior_covariance(st, CovarianceRetune::scaled(l_old, alpha), x, 1e-3);
    const auto want = oracle::normal_equations(alpha * l_old, alpha * l_old * x, 1.0, blocks);
    const auto p1 = posterior(one, x), p2 = posterior(two, x);
    CHECK(oracle::max_rel(p1.mu, want.mu) < 1e-6);
    CHECK(oracle::max_rel(p1.sigma, want.sigma) < 1e-6);
    CHECK(oracle::max_rel(p2.mu, want.mu) < 1e-6);
    CHECK(oracle::max_rel(p2.sigma, want.sigma) < 1e-6);
    CHECK(oracle::max_abs(p1.mu, p2.mu) < 1e-7);
    CHECK(oracle::max_abs(p1.sigma, p2.sigma) < 1e-7);
  }
}

TEST_CASE("property: scaling flow is continuous") {
  const auto s = trained_scalar();
  for (double h : {1e-3, 5e-4}) {
    double last_mu = 0, worst = 0;
    bool first = true;
    scale_prior_covariance(s, Matrix::Identity(1, 1), 0.25, h, [&](const FlowSample& f) {
      const double mu = posterior(f.state, Vector::Zero(1)).mu(0);
      if (!first) worst = std::max(worst, std::abs(mu - last_mu));
      last_mu = mu;
      first = false;
    });
    // |d mu / ds| = |d/ds (2 / (2 + s))| <= 1/2 on the path.
    CHECK(worst <= 0.5 * h * 1.0001);
  }
}
