#pragma once

// Spectral bases with closed-form derivatives, and the linear differential
// operators applied to them to build design rows.
//
//   ExpKernelKL       KL modes of exp(-|x1 - x2| / ell) on [-a, a]; phi_k = sqrt(alpha_k) phi~_k
//   BrownianBridgeKL  phi_k(x) = sqrt(2) sin(k pi x) / (k pi) on [0, 1]
//   Sine2D            phi_jk(x, y) = X_j(x) X_k(y), X_j(s) = sqrt(2L) sin(j pi s / L) / (j pi) on [0, L]^2
//
// Operators (1D bases use u'' for the Laplacian, 2D bases use u_xx + u_yy):
//
//   Identity      u
//   Derivative1   du/dx
//   Bvp4          kappa u'''' + beta u'' + u          (2D: kappa lap^2 u + beta lap u + u)
//   AdvDiff       D lap u + kappa du/dx
//   Helmholtz     kappa2 u - lap u

#include <Eigen/Dense>
#include <json.hpp>
#include <span>
#include <string_view>
#include <vector>

namespace hjr {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class BasisKind { ExpKernelKL, BrownianBridgeKL, Sine2D };

std::string_view to_string(BasisKind kind);

/// One eigenpair of the exponential kernel. phi~(x) = norm * cos(omega x)
/// for even modes and norm * sin(omega x) for odd ones.
struct KlMode {
  double omega = 0.0;
  double alpha = 0.0;
  double norm = 0.0;
  bool even = true;
  double residual = 0.0;  // |root equation| at omega
};

struct BasisFamily {
  BasisKind kind = BasisKind::BrownianBridgeKL;
  Eigen::Index n = 0;

  // ExpKernelKL
  double ell = 0.0;
  double half_width = 0.0;
  std::vector<KlMode> modes;
  // Model coordinate t maps to kernel coordinate x = origin + stretch * t.
  double origin = 0.0;
  double stretch = 1.0;

  // Sine2D
  int side = 0;
  double length = 0.0;

  int dimension() const { return kind == BasisKind::Sine2D ? 2 : 1; }
  /// phi~_k(x) for ExpKernelKL (unit L2 norm on [-a, a]).
  double kl_eigenfunction(Eigen::Index k, double x) const;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class OperatorKind { Identity, Derivative1, Bvp4, AdvDiff, Helmholtz };

std::string_view to_string(OperatorKind kind);

struct OperatorSpec {
  OperatorKind kind = OperatorKind::Identity;
  double kappa = 0.0;      // Bvp4: fourth-order weight; AdvDiff: advection speed
  double beta = 0.0;       // Bvp4: second-order weight
  double diffusion = 0.0;  // AdvDiff: D
  double kappa2 = 0.0;     // Helmholtz

  static OperatorSpec identity();
  static OperatorSpec derivative1();
  static OperatorSpec bvp4(double kappa, double beta);
  static OperatorSpec adv_diff(double diffusion, double kappa);
  static OperatorSpec helmholtz(double kappa2);

  /// Rejects non-finite coefficients and the degenerate Bvp4 / AdvDiff cases.
  void validate() const;
};

BasisFamily build_exp_kernel_kl(Eigen::Index n, double ell, double half_width);
/// Maps [t0, t1] affinely onto the kernel interval [-a, a].
void map_onto_kernel_interval(BasisFamily& basis, double t0, double t1);
BasisFamily build_brownian_bridge(Eigen::Index n);
BasisFamily build_sine2d(Eigen::Index n, double length);

/// (F[phi_1](p), ..., F[phi_n](p)).
Eigen::VectorXd design_row(const BasisFamily& basis, const OperatorSpec& op, Point p);

/// One design row per point, row-major so rows are contiguous.
RowMatrix design_matrix(const BasisFamily& basis, const OperatorSpec& op,
                        std::span<const Point> points);

/// Structured record of the family (kind, n, parameters, KL roots).
nlohmann::json describe(const BasisFamily& basis);

}  // namespace hjr
