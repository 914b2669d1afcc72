#include "hjr/bases.hpp"

#include <array>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "hjr/error.hpp"

namespace hjr {

using Eigen::Index;
using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;

// Root equations written without tangent poles:
//   even: c cos(w a) - w sin(w a) = 0   (c - w tan(w a) = 0)
//   odd:  w cos(w a) + c sin(w a) = 0   (w + c tan(w a) = 0)
double even_eq(double w, double c, double a) { return c * std::cos(w * a) - w * std::sin(w * a); }
double odd_eq(double w, double c, double a) { return w * std::cos(w * a) + c * std::sin(w * a); }

template <class F>
double bisect_root(F f, double lo, double hi) {
  const double flo = f(lo), fhi = f(hi);
  if (!(flo * fhi < 0.0)) {
    throw Error(ErrorCode::RootBracketFailure, "build_exp_kernel_kl",
                "no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  // Bisect until the bracket cannot shrink further, then keep the better end.
  auto done = [](double a, double b) {
    const double mid = 0.5 * (a + b);
    return mid <= a || mid >= b;
  };
  std::uintmax_t iters = 2000;
  const auto [a, b] = boost::math::tools::bisect(f, lo, hi, done, iters);
  return std::abs(f(a)) <= std::abs(f(b)) ? a : b;
}

// Derivatives 0..4 of amp * cos(w x) (even) or amp * sin(w x) (odd).
std::array<double, 5> trig_derivs(double amp, double w, bool even, double x) {
  const double s = std::sin(w * x), c = std::cos(w * x);
  const double w2 = w * w;
  if (even) return {amp * c, -amp * w * s, -amp * w2 * c, amp * w2 * w * s, amp * w2 * w2 * c};
  return {amp * s, amp * w * c, -amp * w2 * s, -amp * w2 * w * c, amp * w2 * w2 * s};
}

double apply_1d(const OperatorSpec& op, const std::array<double, 5>& d) {
  switch (op.kind) {
    case OperatorKind::Identity: return d[0];
    case OperatorKind::Derivative1: return d[1];
    case OperatorKind::Bvp4: return op.kappa * d[4] + op.beta * d[2] + d[0];
    case OperatorKind::AdvDiff: return op.diffusion * d[2] + op.kappa * d[1];
    case OperatorKind::Helmholtz: return op.kappa2 * d[0] - d[2];
  }
  return 0.0;
}

void check_inside(double v, double lo, double hi, const char* axis) {
  const double tol = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  if (!(v >= lo - tol && v <= hi + tol)) {
    throw Error(ErrorCode::OutOfDomain, "design_row",
                std::string(axis) + " = " + std::to_string(v) + " outside [" + std::to_string(lo) +
                    ", " + std::to_string(hi) + "]");
  }
}

void check_count(Index n, const char* op) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, op, "term count must be at least 1");
}

void fill_row(const BasisFamily& basis, const OperatorSpec& op, Point p, double* out) {
  switch (basis.kind) {
    case BasisKind::ExpKernelKL: {
      const double a = basis.half_width, s = basis.stretch;
      const double lo = (-a - basis.origin) / s, hi = (a - basis.origin) / s;
      check_inside(p.x, std::min(lo, hi), std::max(lo, hi), "x");
      const double x = basis.origin + s * p.x;
      const double s2 = s * s;
      const std::array<double, 5> chain{1.0, s, s2, s2 * s, s2 * s2};
      for (Index k = 0; k < basis.n; ++k) {
        const auto& m = basis.modes[static_cast<std::size_t>(k)];
        auto d = trig_derivs(std::sqrt(m.alpha) * m.norm, m.omega, m.even, x);
        for (std::size_t j = 1; j < d.size(); ++j) d[j] *= chain[j];
        out[k] = apply_1d(op, d);
      }
      break;
    }
    case BasisKind::BrownianBridgeKL: {
      check_inside(p.x, 0.0, 1.0, "x");
      for (Index k = 0; k < basis.n; ++k) {
        const double w = static_cast<double>(k + 1) * kPi;
        out[k] = apply_1d(op, trig_derivs(std::numbers::sqrt2 / w, w, false, p.x));
      }
      break;
    }
    case BasisKind::Sine2D: {
      const double L = basis.length;
      check_inside(p.x, 0.0, L, "x");
      check_inside(p.y, 0.0, L, "y");
      const int s = basis.side;
      const double amp = std::sqrt(2.0 * L);
      thread_local std::vector<double> xs, dxs, ys, lam;
      xs.resize(s);
      dxs.resize(s);
      ys.resize(s);
      lam.resize(s);
      for (int j = 0; j < s; ++j) {
        const double w = (j + 1) * kPi / L;
        const double jp = (j + 1) * kPi;
        xs[j] = amp * std::sin(w * p.x) / jp;
        dxs[j] = amp * w * std::cos(w * p.x) / jp;
        ys[j] = amp * std::sin(w * p.y) / jp;
        lam[j] = w * w;
      }
      for (int j = 0; j < s; ++j) {
        for (int k = 0; k < s; ++k) {
          const double phi = xs[j] * ys[k];
          const double l = lam[j] + lam[k];  // -lap phi = l phi
          double v = 0.0;
          switch (op.kind) {
            case OperatorKind::Identity: v = phi; break;
            case OperatorKind::Derivative1: v = dxs[j] * ys[k]; break;
            case OperatorKind::Bvp4: v = (op.kappa * l * l - op.beta * l + 1.0) * phi; break;
            case OperatorKind::AdvDiff: v = -op.diffusion * l * phi + op.kappa * dxs[j] * ys[k]; break;
            case OperatorKind::Helmholtz: v = (op.kappa2 + l) * phi; break;
          }
          out[j * s + k] = v;
        }
      }
      break;
    }
  }
}

}  // namespace

std::string_view to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::ExpKernelKL: return "ExpKernelKL";
    case BasisKind::BrownianBridgeKL: return "BrownianBridgeKL";
    case BasisKind::Sine2D: return "Sine2D";
  }
  return "unknown";
}

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Identity: return "Identity";
    case OperatorKind::Derivative1: return "Derivative1";
    case OperatorKind::Bvp4: return "Bvp4";
    case OperatorKind::AdvDiff: return "AdvDiff";
    case OperatorKind::Helmholtz: return "Helmholtz";
  }
  return "unknown";
}

OperatorSpec OperatorSpec::identity() { return {}; }

OperatorSpec OperatorSpec::derivative1() {
  OperatorSpec op;
  op.kind = OperatorKind::Derivative1;
  return op;
}

OperatorSpec OperatorSpec::bvp4(double kappa, double beta) {
  OperatorSpec op;
  op.kind = OperatorKind::Bvp4;
  op.kappa = kappa;
  op.beta = beta;
  op.validate();
  return op;
}

OperatorSpec OperatorSpec::adv_diff(double diffusion, double kappa) {
  OperatorSpec op;
  op.kind = OperatorKind::AdvDiff;
  op.diffusion = diffusion;
  op.kappa = kappa;
  op.validate();
  return op;
}

OperatorSpec OperatorSpec::helmholtz(double kappa2) {
  OperatorSpec op;
  op.kind = OperatorKind::Helmholtz;
  op.kappa2 = kappa2;
  op.validate();
  return op;
}

void OperatorSpec::validate() const {
  if (!std::isfinite(kappa) || !std::isfinite(beta) || !std::isfinite(diffusion) ||
      !std::isfinite(kappa2)) {
    throw Error(ErrorCode::InvalidArgument, "OperatorSpec", "coefficients must be finite");
  }
  if (kind == OperatorKind::Bvp4 && kappa == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "OperatorSpec", "Bvp4 needs a nonzero kappa");
  }
  if (kind == OperatorKind::AdvDiff && diffusion == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "OperatorSpec", "AdvDiff needs a nonzero D");
  }
}

double BasisFamily::kl_eigenfunction(Index k, double x) const {
  const auto& m = modes.at(static_cast<std::size_t>(k));
  return m.norm * (m.even ? std::cos(m.omega * x) : std::sin(m.omega * x));
}

BasisFamily build_exp_kernel_kl(Index n, double ell, double half_width) {
  check_count(n, "build_exp_kernel_kl");
  if (!(ell > 0.0) || !(half_width > 0.0) || !std::isfinite(ell) || !std::isfinite(half_width)) {
    throw Error(ErrorCode::InvalidArgument, "build_exp_kernel_kl",
                "correlation length and half-width must be positive");
  }
  const double c = 1.0 / ell, a = half_width;
  BasisFamily b;
  b.kind = BasisKind::ExpKernelKL;
  b.n = n;
  b.ell = ell;
  b.half_width = a;

  // Frequencies alternate even, odd, even, ... in increasing order: the even
  // root k lies in (k pi / a, (k + 1/2) pi / a), the odd root k in
  // ((k - 1/2) pi / a, k pi / a). Increasing omega is decreasing alpha.
  for (Index i = 0; i < n; ++i) {
    KlMode m;
    const double k = static_cast<double>((i + 1) / 2);
    if (i % 2 == 0) {
      m.even = true;
      const auto f = [&](double w) { return even_eq(w, c, a); };
      m.omega = bisect_root(f, k * kPi / a, (k + 0.5) * kPi / a);
      m.residual = std::abs(f(m.omega));
      m.norm = 1.0 / std::sqrt(a + std::sin(2 * m.omega * a) / (2 * m.omega));
    } else {
      m.even = false;
      const auto f = [&](double w) { return odd_eq(w, c, a); };
      m.omega = bisect_root(f, (k - 0.5) * kPi / a, k * kPi / a);
      m.residual = std::abs(f(m.omega));
      m.norm = 1.0 / std::sqrt(a - std::sin(2 * m.omega * a) / (2 * m.omega));
    }
    m.alpha = 2.0 * c / (m.omega * m.omega + c * c);
    b.modes.push_back(m);
  }
  return b;
}

void map_onto_kernel_interval(BasisFamily& basis, double t0, double t1) {
  if (basis.kind != BasisKind::ExpKernelKL) {
    throw Error(ErrorCode::InvalidArgument, "map_onto_kernel_interval", "only KL bases carry a coordinate map");
  }
  if (!(t1 > t0) || !std::isfinite(t0) || !std::isfinite(t1)) {
    throw Error(ErrorCode::InvalidArgument, "map_onto_kernel_interval", "need a finite interval with t0 < t1");
  }
  basis.stretch = 2.0 * basis.half_width / (t1 - t0);
  basis.origin = -basis.half_width - basis.stretch * t0;
}

BasisFamily build_brownian_bridge(Index n) {
  check_count(n, "build_brownian_bridge");
  BasisFamily b;
  b.kind = BasisKind::BrownianBridgeKL;
  b.n = n;
  return b;
}

BasisFamily build_sine2d(Index n, double length) {
  check_count(n, "build_sine2d");
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw Error(ErrorCode::InvalidArgument, "build_sine2d", "box length must be positive");
  }
  const auto side = static_cast<int>(std::llround(std::sqrt(static_cast<double>(n))));
  if (static_cast<Index>(side) * side != n) {
    throw Error(ErrorCode::NotPerfectSquare, "build_sine2d",
                std::to_string(n) + " is not a perfect square");
  }
  BasisFamily b;
  b.kind = BasisKind::Sine2D;
  b.n = n;
  b.side = side;
  b.length = length;
  return b;
}

VectorXd design_row(const BasisFamily& basis, const OperatorSpec& op, Point p) {
  op.validate();
  VectorXd row(basis.n);
  fill_row(basis, op, p, row.data());
  return row;
}

RowMatrix design_matrix(const BasisFamily& basis, const OperatorSpec& op,
                        std::span<const Point> points) {
  op.validate();
  RowMatrix m(static_cast<Index>(points.size()), basis.n);
  for (std::size_t i = 0; i < points.size(); ++i) {
    fill_row(basis, op, points[i], m.row(static_cast<Index>(i)).data());
  }
  return m;
}

nlohmann::json describe(const BasisFamily& basis) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(basis.kind));
  j["n"] = basis.n;
  switch (basis.kind) {
    case BasisKind::ExpKernelKL: {
      j["ell"] = basis.ell;
      j["half_width"] = basis.half_width;
      j["origin"] = basis.origin;
      j["stretch"] = basis.stretch;
      auto& arr = j["modes"] = nlohmann::json::array();
      for (const auto& m : basis.modes) {
        arr.push_back({{"parity", m.even ? "even" : "odd"},
                       {"omega", m.omega},
                       {"alpha", m.alpha},
                       {"norm", m.norm},
                       {"residual", m.residual}});
      }
      break;
    }
    case BasisKind::BrownianBridgeKL:
      j["domain"] = {0.0, 1.0};
      break;
    case BasisKind::Sine2D:
      j["side"] = basis.side;
      j["length"] = basis.length;
      break;
  }
  return j;
}

}  // namespace hjr
