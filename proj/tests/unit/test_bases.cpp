#include <cmath>
#include <numbers>

#include "basis_checks.hpp"
#include "doctest.h"
#include "hjr/bases.hpp"
#include "hjr/error.hpp"

using namespace hjr;
constexpr double kPi = std::numbers::pi;

TEST_CASE("exponential kernel KL basis") {
  const auto b = build_exp_kernel_kl(30, 0.05, 10.0);
  REQUIRE(b.modes.size() == 30);
  for (std::size_t k = 1; k < b.modes.size(); ++k) {
    CHECK(b.modes[k].alpha < b.modes[k - 1].alpha);
    CHECK(b.modes[k].omega > b.modes[k - 1].omega);
  }
  CHECK(b.modes.back().alpha > 0.0);
  const auto rep = checks::check_kl(b);
  CHECK(rep.eigen_identity < 1e-6);
  CHECK(rep.gram < 1e-6);
  CHECK(rep.max_residual < 1e-12);
  CHECK(rep.alpha_sum > 0.0);
  CHECK(rep.alpha_sum <= 20.0);

  SUBCASE("trace bound is approached as n grows on a short interval") {
    // For a = 1, ell = 1 the kernel is smooth enough that a few dozen modes hold most of the trace.
    const auto wide = build_exp_kernel_kl(200, 1.0, 1.0);
    double total = 0.0;
    for (const auto& m : wide.modes) total += m.alpha;
    CHECK(total <= 2.0);
    CHECK(total > 0.99 * 2.0);
    const auto r = checks::check_kl(build_exp_kernel_kl(8, 1.0, 1.0));
    CHECK(r.eigen_identity < 1e-9);
  }
  SUBCASE("bvp4 on an even mode") {
    const auto op = OperatorSpec::bvp4(1e-4, 0.01);
    const double tau = 0.37;
    const auto& m = b.modes[0];
    REQUIRE(m.even);
    const double phi = std::sqrt(m.alpha) * m.norm * std::cos(m.omega * tau);
    const double w2 = m.omega * m.omega;
    CHECK(design_row(b, op, {tau, 0})(0) == doctest::Approx((1e-4 * w2 * w2 - 0.01 * w2 + 1) * phi).epsilon(1e-14));
  }
  CHECK_THROWS_AS(build_exp_kernel_kl(0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(build_exp_kernel_kl(3, -1.0, 1.0), Error);
  CHECK_THROWS_AS(design_row(b, OperatorSpec::identity(), {10.5, 0}), Error);
}

TEST_CASE("Brownian bridge basis") {
  const auto b = build_brownian_bridge(50);
  const auto id = OperatorSpec::identity();
  CHECK(design_row(b, id, {0.0, 0}).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(design_row(b, id, {1.0, 0}).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(design_row(b, id, {0.5, 0})(0) == doctest::Approx(std::sqrt(2.0) / kPi).epsilon(1e-15));
  CHECK(design_row(b, id, {0.5, 0})(0) == doctest::Approx(0.45016).epsilon(1e-5));
  const double ad = design_row(b, OperatorSpec::adv_diff(0.001, 1.0), {0.5, 0})(0);
  CHECK(ad == doctest::Approx(-0.001 * kPi * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(ad == doctest::Approx(-0.0044429).epsilon(1e-4));

  for (int j = 1; j <= 5; ++j) {
    for (int k = 1; k <= 5; ++k) {
      const double g = oracle::gauss(
          [&](double x) {
            const auto r = design_row(b, id, {x, 0});
            return r(j - 1) * r(k - 1);
          },
          0.0, 1.0, 20);
      const double want = j == k ? 1.0 / (k * k * kPi * kPi) : 0.0;
      CHECK(std::abs(g - want) < 1e-14);
    }
  }
  CHECK_THROWS_AS(design_row(b, id, {-0.1, 0}), Error);
}

TEST_CASE("Sine2D basis") {
  const double L = 2 * kPi;
  const auto b = build_sine2d(225, L);
  CHECK(b.side == 15);
  const auto id = OperatorSpec::identity();
  CHECK(design_row(b, id, {kPi, kPi})(0) == doctest::Approx(4.0 / kPi).epsilon(1e-14));
  for (const Point p : {Point{0, 1.3}, Point{L, 2.0}, Point{0.7, 0}, Point{4.0, L}}) {
    CHECK(design_row(b, id, p).cwiseAbs().maxCoeff() < 1e-13);
  }
  const Point p{1.1, 2.3};
  const auto phi = design_row(b, id, p);
  const auto hz = design_row(b, OperatorSpec::helmholtz(1.0), p);
  for (int j = 1; j <= 15; ++j) {
    for (int k = 1; k <= 15; ++k) {
      const auto i = (j - 1) * 15 + (k - 1);
      CHECK(hz(i) == doctest::Approx((1.0 + j * j / 4.0 + k * k / 4.0) * phi(i)).epsilon(1e-13));
    }
  }
  // Row-major (j, k) enumeration: entry 1 is mode (1, 2).
  const double amp = std::sqrt(2 * L);
  CHECK(phi(1) == doctest::Approx(amp * std::sin(kPi * p.x / L) / kPi * amp * std::sin(2 * kPi * p.y / L) / (2 * kPi)));

  SUBCASE("Gram matrix over a full grid is diagonal") {
    const int g = 64;
    std::vector<Point> pts;
    for (int i = 1; i < g; ++i)
      for (int j = 1; j < g; ++j) pts.push_back({L * i / g, L * j / g});
    const auto small = build_sine2d(81, L);
    const RowMatrix m = design_matrix(small, id, pts);
    const Matrix gram = m.transpose() * m;
    const double diag = gram.diagonal().minCoeff();
    Matrix off = gram;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() / diag < 1e-8);
  }
  try {
    build_sine2d(50, 1.0);
    FAIL("expected NotPerfectSquare");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPerfectSquare);
  }
}

TEST_CASE("operator validation") {
  CHECK_THROWS_AS(OperatorSpec::bvp4(0.0, 1.0), Error);
  CHECK_THROWS_AS(OperatorSpec::adv_diff(0.0, 1.0), Error);
  CHECK_THROWS_AS(OperatorSpec::helmholtz(std::nan("")), Error);
}

TEST_CASE("design rows match finite differences") {
  const auto bases = checks::paper_bases();
  auto ops = checks::paper_operators();
  ops.push_back(OperatorSpec::bvp4(1.0, -2.0));
  ops.push_back(OperatorSpec::adv_diff(0.5, 3.0));
  std::uint64_t seed = 1;
  for (const auto& b : bases) {
    for (const auto& op : ops) {
      CAPTURE(to_string(b.kind));
      CAPTURE(to_string(op.kind));
      CHECK(checks::check_operator_rows(b, op, 5, seed++) < 1e-5);
    }
  }
}

TEST_CASE("design_matrix stacks design rows") {
  const auto b = build_exp_kernel_kl(6, 0.5, 2.0);
  const std::vector<Point> pts{{0.1, 0}, {0.5, 0}, {-1.5, 0}};
  const auto op = OperatorSpec::bvp4(0.1, 0.2);
  const RowMatrix m = design_matrix(b, op, pts);
  for (int i = 0; i < 3; ++i) CHECK((m.row(i).transpose() - design_row(b, op, pts[i])).norm() == 0.0);
  const auto j = describe(b);
  CHECK(j["kind"] == "ExpKernelKL");
  CHECK(j["modes"].size() == 6);
  CHECK(j["modes"][0]["parity"] == "even");
}

TEST_CASE("KL basis mapped onto the unit interval") {
  auto b = build_exp_kernel_kl(30, 0.05, 10.0);
  const auto plain = b;
  map_onto_kernel_interval(b, 0.0, 1.0);
  CHECK(b.stretch == doctest::Approx(20.0));
  CHECK(b.origin == doctest::Approx(-10.0));
  // Identity rows are the plain rows at the mapped coordinate.
  const auto id = OperatorSpec::identity();
  CHECK((design_row(b, id, {0.3, 0}) - design_row(plain, id, {-4.0, 0})).cwiseAbs().maxCoeff() < 1e-14);
  std::uint64_t seed = 40;
  for (const auto& op : checks::paper_operators()) {
    if (op.kind == OperatorKind::Helmholtz) continue;
    CAPTURE(to_string(op.kind));
    CHECK(checks::check_operator_rows(b, op, 5, seed++) < 1e-5);
  }
  CHECK_NOTHROW(design_row(b, id, {1.0, 0}));
  CHECK_THROWS_AS(design_row(b, id, {1.01, 0}), Error);
  CHECK_THROWS_AS(design_row(b, id, {-0.01, 0}), Error);
  auto bb = build_brownian_bridge(3);
  CHECK_THROWS_AS(map_onto_kernel_interval(bb, 0.0, 1.0), Error);
  CHECK_THROWS_AS(map_onto_kernel_interval(b, 1.0, 1.0), Error);
  CHECK(describe(b)["stretch"] == doctest::Approx(20.0));
}
