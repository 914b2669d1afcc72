#pragma once

// Oracle-based checks of the spectral bases shared by the unit and
// acceptance suites.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "hjr/bases.hpp"
#include "oracles.hpp"

namespace checks {

using hjr::BasisFamily;
using hjr::BasisKind;
using hjr::OperatorKind;
using hjr::OperatorSpec;
using hjr::Point;

struct KlReport {
  double eigen_identity = 0.0;  // max |int k(x,y) phi(y) dy - alpha phi(x)| over modes and probes
  double gram = 0.0;            // max |G - I|
  double alpha_sum = 0.0;
  double max_residual = 0.0;    // max root-equation residual
};

inline KlReport check_kl(const BasisFamily& b, int probes = 11) {
  KlReport rep;
  const double a = b.half_width, ell = b.ell;
  // Panel width small against ell so each 20-node panel sees a smooth exponential.
  const double panel = std::min(ell, 0.05) / 2.5;
  auto integrate = [&](auto&& f, double lo, double hi) {
    if (hi - lo <= 0.0) return 0.0;
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / panel)));
    return oracle::gauss(f, lo, hi, panels);
  };
  for (Eigen::Index k = 0; k < b.n; ++k) {
    const auto& m = b.modes[static_cast<std::size_t>(k)];
    rep.alpha_sum += m.alpha;
    rep.max_residual = std::max(rep.max_residual, m.residual);
    for (int p = 0; p < probes; ++p) {
      const double x = -a + 2.0 * a * p / (probes - 1);
      auto f = [&](double y) { return std::exp(-std::abs(x - y) / ell) * b.kl_eigenfunction(k, y); };
      const double lhs = integrate(f, -a, x) + integrate(f, x, a);
      rep.eigen_identity = std::max(rep.eigen_identity, std::abs(lhs - m.alpha * b.kl_eigenfunction(k, x)));
    }
    for (Eigen::Index j = 0; j <= k; ++j) {
      const double g = oracle::gauss([&](double y) { return b.kl_eigenfunction(j, y) * b.kl_eigenfunction(k, y); },
                                     -a, a, 400);
      rep.gram = std::max(rep.gram, std::abs(g - (j == k ? 1.0 : 0.0)));
    }
  }
  return rep;
}

inline double max_frequency(const BasisFamily& b) {
  switch (b.kind) {
    case BasisKind::ExpKernelKL: return b.modes.back().omega * std::abs(b.stretch);
    case BasisKind::BrownianBridgeKL: return static_cast<double>(b.n) * std::numbers::pi;
    case BasisKind::Sine2D: return b.side * std::numbers::pi / b.length;
  }
  return 1.0;
}

// Operator applied through finite differences of Identity rows.
inline Eigen::VectorXd fd_operator_row(const BasisFamily& b, const OperatorSpec& op, Point p) {
  const double h0 = std::min(0.1, 0.8 / max_frequency(b));
  const auto id = OperatorSpec::identity();
  if (b.dimension() == 1) {
    auto f = [&](double x) { return hjr::design_row(b, id, {x, 0.0}); };
    const Eigen::VectorXd d0 = f(p.x);
    switch (op.kind) {
      case OperatorKind::Identity: return d0;
      case OperatorKind::Derivative1: return oracle::ridders_vec(f, p.x, h0, 1);
      case OperatorKind::Bvp4:
        return op.kappa * oracle::ridders_vec(f, p.x, h0, 4) + op.beta * oracle::ridders_vec(f, p.x, h0, 2) + d0;
      case OperatorKind::AdvDiff:
        return op.diffusion * oracle::ridders_vec(f, p.x, h0, 2) + op.kappa * oracle::ridders_vec(f, p.x, h0, 1);
      case OperatorKind::Helmholtz: return op.kappa2 * d0 - oracle::ridders_vec(f, p.x, h0, 2);
    }
  }
  auto fx = [&](double x) { return hjr::design_row(b, id, {x, p.y}); };
  auto fy = [&](double y) { return hjr::design_row(b, id, {p.x, y}); };
  const Eigen::VectorXd d0 = fx(p.x);
  auto lap = [&] { return Eigen::VectorXd(oracle::ridders_vec(fx, p.x, h0, 2) + oracle::ridders_vec(fy, p.y, h0, 2)); };
  switch (op.kind) {
    case OperatorKind::Identity: return d0;
    case OperatorKind::Derivative1: return oracle::ridders_vec(fx, p.x, h0, 1);
    case OperatorKind::Bvp4: {
      auto uyy_at = [&](double x) {
        return oracle::ridders_vec([&](double y) { return hjr::design_row(b, id, {x, y}); }, p.y, h0, 2);
      };
      const Eigen::VectorXd bih = oracle::ridders_vec(fx, p.x, h0, 4) + oracle::ridders_vec(fy, p.y, h0, 4) +
                                  2.0 * oracle::ridders_vec(uyy_at, p.x, h0, 2);
      return op.kappa * bih + op.beta * lap() + d0;
    }
    case OperatorKind::AdvDiff: return op.diffusion * lap() + op.kappa * oracle::ridders_vec(fx, p.x, h0, 1);
    case OperatorKind::Helmholtz: return op.kappa2 * d0 - lap();
  }
  return d0;
}

// Max over points of max_k |analytic_k - fd_k| / ||analytic||_inf.
inline double check_operator_rows(const BasisFamily& b, const OperatorSpec& op, int count,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double lo = 0.2, hi = 0.8;
  if (b.kind == BasisKind::Sine2D) {
    lo = 0.1 * b.length;
    hi = 0.9 * b.length;
  }
  std::uniform_real_distribution<double> u(lo, hi);
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    Point p{u(rng), b.dimension() == 2 ? u(rng) : 0.0};
    const Eigen::VectorXd row = hjr::design_row(b, op, p);
    const Eigen::VectorXd fd = fd_operator_row(b, op, p);
    const double scale = std::max(row.cwiseAbs().maxCoeff(), 1e-300);
    worst = std::max(worst, (row - fd).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

inline std::vector<OperatorSpec> paper_operators() {
  return {OperatorSpec::bvp4(1e-4, 0.01), OperatorSpec::adv_diff(1e-3, 1.0), OperatorSpec::helmholtz(1.0),
          OperatorSpec::derivative1()};
}

inline std::vector<BasisFamily> paper_bases() {
  return {hjr::build_exp_kernel_kl(30, 0.05, 10.0), hjr::build_brownian_bridge(50),
          hjr::build_sine2d(225, 2.0 * std::numbers::pi)};
}

}  // namespace checks
