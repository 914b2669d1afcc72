#include <algorithm>
#include <cmath>

#include "hjr/error.hpp"
#include "hjr/experiments.hpp"
#include "hjr/kernels.hpp"

namespace hjr {

PredictionGrid prediction_grid(const RiccatiState& state, const BasisFamily& basis,
                               const OperatorSpec& op, std::span<const Point> points,
                               const Vector& x) {
  if (state.dim() != basis.n) {
    throw Error(ErrorCode::DimensionMismatch, "prediction_grid", "basis size differs from the state dimension");
  }
  const PosteriorSummary post = posterior(state, x);
  const auto m = static_cast<Eigen::Index>(points.size());
  const auto n = static_cast<std::size_t>(basis.n);
  PredictionGrid g;
  g.points.assign(points.begin(), points.end());
  g.u_mean.resize(m);
  g.f_mean.resize(m);
  g.u_band.resize(m);
  g.f_band.resize(m);

  const auto& k = kernels::active();
  std::vector<double> scratch(n);
  constexpr Eigen::Index kChunk = 2048;
  const auto id = OperatorSpec::identity();
  for (Eigen::Index start = 0; start < m; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, m - start);
    const auto chunk = points.subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(len));
    const RowMatrix phi = design_matrix(basis, id, chunk);
    const RowMatrix fphi = design_matrix(basis, op, chunk);
    g.u_mean.segment(start, len).noalias() = phi * post.mu;
    g.f_mean.segment(start, len).noalias() = fphi * post.mu;
    k.quad_rows(phi.data(), static_cast<std::size_t>(len), n, post.sigma.data(), g.u_band.data() + start,
                scratch.data());
    k.quad_rows(fphi.data(), static_cast<std::size_t>(len), n, post.sigma.data(), g.f_band.data() + start,
                scratch.data());
  }
  // Variances can dip a few ulps below zero where the basis vanishes.
  g.u_band = 2.0 * g.u_band.cwiseMax(0.0).cwiseSqrt();
  g.f_band = 2.0 * g.f_band.cwiseMax(0.0).cwiseSqrt();
  return g;
}

namespace {

double trap_weight(std::size_t i, std::size_t count) { return (i == 0 || i + 1 == count) ? 0.5 : 1.0; }

double finish(double num, double den) {
  if (!(den > 0.0)) throw Error(ErrorCode::ZeroReference, "relative_l2_error", "reference function is zero");
  return 100.0 * std::sqrt(num / den);
}

}  // namespace

double relative_l2_error(std::span<const double> predicted, std::span<const double> exact) {
  if (predicted.size() != exact.size() || exact.size() < 2) {
    throw Error(ErrorCode::DimensionMismatch, "relative_l2_error", "grids must match and hold at least two points");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double w = trap_weight(i, exact.size());
    const double d = predicted[i] - exact[i];
    num += w * d * d;
    den += w * exact[i] * exact[i];
  }
  return finish(num, den);
}

double relative_l2_error_2d(std::span<const double> predicted, std::span<const double> exact,
                            std::size_t nx, std::size_t ny) {
  if (predicted.size() != exact.size() || exact.size() != nx * ny || nx < 2 || ny < 2) {
    throw Error(ErrorCode::DimensionMismatch, "relative_l2_error", "grids must match an nx-by-ny layout");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < ny; ++j) {
    const double wy = trap_weight(j, ny);
    for (std::size_t i = 0; i < nx; ++i) {
      const double w = wy * trap_weight(i, nx);
      const std::size_t idx = j * nx + i;
      const double d = predicted[idx] - exact[idx];
      num += w * d * d;
      den += w * exact[idx] * exact[idx];
    }
  }
  return finish(num, den);
}

OracleAccumulator::OracleAccumulator(const GaussianPrior& prior) : prior_(prior) {
  validate_prior(prior, "OracleAccumulator");
  const Eigen::Index n = prior.lambda.rows();
  precision_ = prior.lambda.llt().solve(Matrix::Identity(n, n));
  linear_ = Vector::Zero(n);
}

void OracleAccumulator::add(const DataBlock& block) {
  validate_block(block, precision_.rows(), "OracleAccumulator");
  const double t = block.time(prior_.epsilon);
  precision_.selfadjointView<Eigen::Lower>().rankUpdate(block.phi.transpose(), t);
  linear_.noalias() += t * (block.phi.transpose() * block.y);
}

PosteriorSummary OracleAccumulator::posterior() const {
  const Eigen::Index n = precision_.rows();
  const Matrix k = precision_.selfadjointView<Eigen::Lower>();
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NonSPD, "OracleAccumulator", "precision is not SPD");
  const Matrix p = llt.solve(Matrix::Identity(n, n));
  PosteriorSummary out;
  out.mu = p * prior_.x + llt.solve(linear_);
  out.sigma = prior_.epsilon * 0.5 * (p + p.transpose());
  return out;
}

double relative_discrepancy(const PosteriorSummary& got, const PosteriorSummary& want) {
  auto rel = [](const Matrix& a, const Matrix& b) {
    const double scale = b.cwiseAbs().maxCoeff();
    const double diff = (a - b).cwiseAbs().maxCoeff();
    return scale > 0.0 ? diff / scale : diff;
  };
  return std::max(rel(got.mu, want.mu), rel(got.sigma, want.sigma));
}

}  // namespace hjr
