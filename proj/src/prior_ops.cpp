#include "hjr/prior_ops.hpp"

#include <cmath>
#include <string>

#include "hjr/error.hpp"

namespace hjr {

namespace {

DataBlock prior_block(const Matrix& lambda) {
  DataBlock b;
  b.phi = matrix_inv_sqrt(lambda);
  b.y = Vector::Zero(lambda.rows());
  b.sigma2 = 1.0;
  return b;
}

void check_square(const Matrix& m, Eigen::Index n, const std::string& op, const char* what) {
  if (m.rows() != n || m.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, op,
                std::string(what) + " must be " + std::to_string(n) + "x" + std::to_string(n));
  }
}

}  // namespace

CovarianceRetune CovarianceRetune::scaled(const Matrix& lambda_old, double alpha) {
  return CovarianceRetune{lambda_old, alpha * lambda_old, alpha};
}

void validate_retune(const CovarianceRetune& retune, Eigen::Index n) {
  const std::string op = "tune_prior_covariance";
  check_square(retune.lambda_old, n, op, "lambda_old");
  check_square(retune.lambda_new, n, op, "lambda_new");
  require_spd(retune.lambda_old, op);
  require_spd(retune.lambda_new, op);
  if (retune.scale_alpha) {
    const double alpha = *retune.scale_alpha;
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw Error(ErrorCode::InvalidArgument, op, "scale factor must be positive and finite");
    }
    const double scale = retune.lambda_new.cwiseAbs().maxCoeff();
    const double diff = (retune.lambda_new - alpha * retune.lambda_old).cwiseAbs().maxCoeff();
    if (diff > 1e-12 * scale) {
      throw Error(ErrorCode::InvalidArgument, op, "lambda_new is not alpha * lambda_old");
    }
  }
}

PosteriorSummary retarget_prior_mean(const RiccatiState& state, const Vector& x_new) {
  try {
    return posterior(state, x_new);
  } catch (const Error& e) {
    throw e.rethrown_as("retarget_prior_mean");
  }
}

Matrix matrix_inv_sqrt(const Matrix& a) {
  const std::string op = "matrix_inv_sqrt";
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, op, "matrix must be square and non-empty");
  }
  if (!a.allFinite()) throw Error(ErrorCode::NonFinite, op, "matrix has non-finite entries");
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::NonSPD, op, "eigendecomposition failed");
  const Vector& d = eig.eigenvalues();
  const double top = d.maxCoeff();
  if (!(top > 0.0) || d.minCoeff() <= 1e-14 * top) {
    throw Error(ErrorCode::NonSPD, op, "matrix is not positive definite");
  }
  const Matrix& v = eig.eigenvectors();
  Matrix out = v * d.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

RiccatiState tune_prior_covariance(const RiccatiState& state, const CovarianceRetune& retune,
                                   const Vector& x, double h) {
  const std::string op = "tune_prior_covariance";
  const Eigen::Index n = state.dim();
  if (x.size() != n) throw Error(ErrorCode::DimensionMismatch, op, "evaluation point has wrong length");
  validate_retune(retune, n);

  EvolveOptions add;
  add.operation = "tune_prior_covariance (add new prior)";
  add.integrator = Integrator::FullMatrix;
  EvolveOptions remove = add;
  remove.operation = "tune_prior_covariance (remove old prior)";

  const RiccatiState mid = evolve(state, prior_block(retune.lambda_new), 1.0, h, add);
  RiccatiState out = evolve(mid, prior_block(retune.lambda_old), -1.0, h, remove);
  require_spd(out.P, remove.operation);
  return out;
}

RiccatiState scale_prior_covariance(const RiccatiState& state, const Matrix& lambda, double alpha,
                                    double h, const FlowObserver& emit) {
  const std::string op = "scale_prior_covariance";
  check_square(lambda, state.dim(), op, "lambda");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidArgument, op, "scale factor must be positive and finite");
  }
  const double duration = 1.0 / alpha - 1.0;
  EvolveOptions opts;
  opts.operation = op;
  opts.integrator = Integrator::FullMatrix;
  if (emit) {
    opts.observer = [&](const StepInfo& info) {
      emit(FlowSample{1.0 / (1.0 + info.elapsed), info.index, info.elapsed, info.state});
    };
  }
  RiccatiState out = evolve(state, prior_block(lambda), duration, h, opts);
  if (duration < 0.0) require_spd(out.P, op);
  return out;
}

}  // namespace hjr
