#include "hjr/riccati.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hjr/error.hpp"
#include "hjr/kernels.hpp"

namespace hjr {

using Eigen::Index;

GaussianPrior GaussianPrior::isotropic(Index n, double variance, double epsilon) {
  GaussianPrior prior;
  prior.lambda = Matrix::Identity(n, n) * (variance / epsilon);
  prior.x = Vector::Zero(n);
  prior.epsilon = epsilon;
  return prior;
}

void require_spd(const Matrix& m, std::string_view operation) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(operation), "matrix is not square");
  }
  if (!m.allFinite()) {
    throw Error(ErrorCode::NonFinite, std::string(operation), "matrix has non-finite entries");
  }
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NonSPD, std::string(operation), "Cholesky factorization failed");
  }
}

bool is_finite(const RiccatiState& state) {
  return state.P.allFinite() && state.q.allFinite() && std::isfinite(state.r);
}

void validate_block(const DataBlock& block, Index n, std::string_view operation) {
  const std::string op(operation);
  if (block.phi.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, op,
                "design matrix has " + std::to_string(block.phi.cols()) + " columns, state has " +
                    std::to_string(n));
  }
  if (block.phi.rows() != block.y.size()) {
    throw Error(ErrorCode::DimensionMismatch, op, "design rows and observation count differ");
  }
  if (block.phi.rows() == 0) {
    throw Error(ErrorCode::InvalidArgument, op, "block has no rows");
  }
  if (!(block.sigma2 > 0.0) || !std::isfinite(block.sigma2)) {
    throw Error(ErrorCode::InvalidArgument, op, "noise variance must be positive and finite");
  }
  if (!block.phi.allFinite() || !block.y.allFinite()) {
    throw Error(ErrorCode::NonFinite, op, "block contains non-finite values");
  }
}

void validate_prior(const GaussianPrior& prior, std::string_view operation) {
  const std::string op(operation);
  if (!(prior.epsilon > 0.0) || !std::isfinite(prior.epsilon)) {
    throw Error(ErrorCode::InvalidArgument, op, "epsilon must be positive and finite");
  }
  if (prior.lambda.rows() != prior.lambda.cols() || prior.lambda.rows() != prior.x.size()) {
    throw Error(ErrorCode::DimensionMismatch, op, "prior lambda / x dimensions differ");
  }
  require_spd(prior.lambda, operation);
}

namespace {

double log_det_spd(const Matrix& m, std::string_view operation) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NonSPD, std::string(operation), "Cholesky factorization failed");
  }
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void symmetrize(Matrix& p) {
  const Index n = p.rows();
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      const double avg = 0.5 * (p(i, j) + p(j, i));
      p(i, j) = avg;
      p(j, i) = avg;
    }
  }
}

void check_state(const RiccatiState& s, std::string_view operation, std::size_t step) {
  if (!is_finite(s)) {
    throw Error(ErrorCode::NonFinite, std::string(operation),
                "state became non-finite (step too large or backward flow left the SPD cone)",
                step);
  }
}

// Step schedule: `count` steps of size h, the last one shortened.
struct StepPlan {
  std::size_t count = 0;
  double h = 0.0;
  double total = 0.0;
  double sign = 1.0;

  double size(std::size_t k) const {
    return k + 1 < count ? h : total - static_cast<double>(count - 1) * h;
  }
  double elapsed_after(std::size_t k) const {
    return sign * (k + 1 < count ? static_cast<double>(k + 1) * h : total);
  }
};

StepPlan plan_steps(double duration, double h) {
  StepPlan plan;
  plan.count = step_count(duration, h);
  plan.h = h;
  plan.total = std::abs(duration);
  plan.sign = duration < 0.0 ? -1.0 : 1.0;
  return plan;
}

// Full-matrix right-hand side with block quantities precomputed once.
class FullRhs {
 public:
  FullRhs(const DataBlock& block, Index n, double epsilon, bool track_r)
      : block_(block), n_(n), eps_(epsilon), track_r_(track_r) {
    if (block.rows() == 1) {
      form_ = Form::Rank1;
      phi_row_ = block.phi.row(0).transpose();
      v_.resize(n);
    } else if (block.rows() < n) {
      form_ = Form::Rows;
      w_.resize(block.rows(), n);
    } else {
      form_ = Form::Gram;
      gram_ = block.phi.transpose() * block.phi;
      b_ = block.phi.transpose() * block.y;
      yy_ = block.y.squaredNorm();
      t_.resize(n, n);
      gq_.resize(n);
    }
  }

  void operator()(const Matrix& P, const Vector& q, Matrix& dP, Vector& dq, double& dr) {
    const auto& k = kernels::active();
    switch (form_) {
      case Form::Rank1: {
        k.gemv(P.data(), n_, n_, phi_row_.data(), v_.data());
        const double e = k.dot(phi_row_.data(), q.data(), n_) - block_.y(0);
        dP.setZero();
        k.ger(-1.0, v_.data(), v_.data(), dP.data(), n_, n_);
        dq.noalias() = -e * v_;
        dr = track_r_ ? -0.5 * e * e - 0.5 * eps_ * k.dot(phi_row_.data(), v_.data(), n_) : 0.0;
        break;
      }
      case Form::Rows: {
        w_.noalias() = block_.phi * P;
        dP.noalias() = -w_.transpose() * w_;
        const Vector e = block_.phi * q - block_.y;
        dq.noalias() = -w_.transpose() * e;
        dr = track_r_ ? -0.5 * e.squaredNorm() - 0.5 * eps_ * w_.cwiseProduct(block_.phi).sum()
                      : 0.0;
        break;
      }
      case Form::Gram: {
        t_.noalias() = gram_ * P;
        dP.noalias() = -P * t_;
        gq_.noalias() = gram_ * q;
        gq_ -= b_;
        dq.noalias() = -P * gq_;
        if (track_r_) {
          const double resid2 = q.dot(gram_ * q) - 2.0 * b_.dot(q) + yy_;
          dr = -0.5 * resid2 - 0.5 * eps_ * gram_.cwiseProduct(P).sum();
        } else {
          dr = 0.0;
        }
        break;
      }
    }
  }

 private:
  enum class Form { Rank1, Rows, Gram };

  const DataBlock& block_;
  Index n_;
  double eps_;
  bool track_r_;
  Form form_;
  Vector phi_row_, v_;
  Matrix w_, gram_, t_;
  Vector b_, gq_;
  double yy_ = 0.0;
};

RiccatiState evolve_full(const RiccatiState& start, const DataBlock& block, const StepPlan& plan,
                         const EvolveOptions& options) {
  RiccatiState cur = start;
  const Index n = cur.dim();
  const auto nn = static_cast<std::size_t>(n * n);
  const auto nv = static_cast<std::size_t>(n);
  const auto& k = kernels::active();
  FullRhs rhs(block, n, cur.epsilon, cur.track_r);

  Matrix k1P(n, n), k2P(n, n), k3P(n, n), k4P(n, n), stP(n, n);
  Vector k1q(n), k2q(n), k3q(n), k4q(n), stq(n);
  double k1r = 0, k2r = 0, k3r = 0, k4r = 0;

  for (std::size_t step = 0; step < plan.count; ++step) {
    const double hs = plan.sign * plan.size(step);

    rhs(cur.P, cur.q, k1P, k1q, k1r);
    k.add_scaled(stP.data(), cur.P.data(), 0.5 * hs, k1P.data(), nn);
    k.add_scaled(stq.data(), cur.q.data(), 0.5 * hs, k1q.data(), nv);
    rhs(stP, stq, k2P, k2q, k2r);
    k.add_scaled(stP.data(), cur.P.data(), 0.5 * hs, k2P.data(), nn);
    k.add_scaled(stq.data(), cur.q.data(), 0.5 * hs, k2q.data(), nv);
    rhs(stP, stq, k3P, k3q, k3r);
    k.add_scaled(stP.data(), cur.P.data(), hs, k3P.data(), nn);
    k.add_scaled(stq.data(), cur.q.data(), hs, k3q.data(), nv);
    rhs(stP, stq, k4P, k4q, k4r);

    const double w1 = hs / 6.0, w2 = hs / 3.0;
    k.axpy(w1, k1P.data(), cur.P.data(), nn);
    k.axpy(w2, k2P.data(), cur.P.data(), nn);
    k.axpy(w2, k3P.data(), cur.P.data(), nn);
    k.axpy(w1, k4P.data(), cur.P.data(), nn);
    k.axpy(w1, k1q.data(), cur.q.data(), nv);
    k.axpy(w2, k2q.data(), cur.q.data(), nv);
    k.axpy(w2, k3q.data(), cur.q.data(), nv);
    k.axpy(w1, k4q.data(), cur.q.data(), nv);
    if (cur.track_r) cur.r += w1 * (k1r + k4r) + w2 * (k2r + k3r);
    symmetrize(cur.P);

    check_state(cur, options.operation, step);
    if (options.observer) options.observer(StepInfo{step, plan.elapsed_after(step), cur});
  }
  return cur;
}

// RK4 restricted to the manifold P = P0 - V B V^T, q = q0 + V g with
// V = P0 Phi^T and A = Phi V. The Riccati flow of a rank-m block never leaves
// this manifold and RK4 commutes with the affine embedding, so these are the
// same iterates as evolve_full at O(m^3) per step.
template <int M>
RiccatiState evolve_low_rank(const RiccatiState& start, const DataBlock& block,
                             const StepPlan& plan, const EvolveOptions& options) {
  using Mat = Eigen::Matrix<double, M, M>;
  using Vec = Eigen::Matrix<double, M, 1>;

  const Index m = block.rows();
  const double eps = start.epsilon;
  const bool track = start.track_r;

  const Matrix V = start.P * block.phi.transpose();
  Mat A = block.phi * V;
  A = (0.5 * (A + A.transpose())).eval();
  const Vec r0 = block.phi * start.q - block.y;
  const Mat I = Mat::Identity(m, m);
  const double trA = A.trace();

  auto rhs = [&](const Mat& B, const Vec& g, Mat& dB, Vec& dg, double& dr) {
    Mat Mm = I;
    Mm.noalias() -= B * A;
    dB.noalias() = Mm * Mm.transpose();
    Vec e = r0;
    e.noalias() += A * g;
    dg.noalias() = -Mm * e;
    if (track) {
      Mat AB = Mat::Zero(m, m);
      AB.noalias() = A * B;
      dr = -0.5 * e.squaredNorm() - 0.5 * eps * (trA - AB.cwiseProduct(A).sum());
    } else {
      dr = 0.0;
    }
  };

  Mat B = Mat::Zero(m, m), k1B = B, k2B = B, k3B = B, k4B = B, sB = B;
  Vec g = Vec::Zero(m), k1g = g, k2g = g, k3g = g, k4g = g, sg = g;
  double rr = 0.0, k1r = 0, k2r = 0, k3r = 0, k4r = 0;

  RiccatiState view;
  auto materialize = [&](RiccatiState& out) {
    out.P = start.P;
    out.P.noalias() -= V * B * V.transpose();
    symmetrize(out.P);
    out.q = start.q;
    out.q.noalias() += V * g;
    out.r = start.r + rr;
    out.epsilon = start.epsilon;
    out.track_r = start.track_r;
  };

  for (std::size_t step = 0; step < plan.count; ++step) {
    const double hs = plan.sign * plan.size(step);
    rhs(B, g, k1B, k1g, k1r);
    sB = B + (0.5 * hs) * k1B;
    sg = g + (0.5 * hs) * k1g;
    rhs(sB, sg, k2B, k2g, k2r);
    sB = B + (0.5 * hs) * k2B;
    sg = g + (0.5 * hs) * k2g;
    rhs(sB, sg, k3B, k3g, k3r);
    sB = B + hs * k3B;
    sg = g + hs * k3g;
    rhs(sB, sg, k4B, k4g, k4r);

    const double w1 = hs / 6.0, w2 = hs / 3.0;
    B += w1 * (k1B + k4B) + w2 * (k2B + k3B);
    g += w1 * (k1g + k4g) + w2 * (k2g + k3g);
    if (track) rr += w1 * (k1r + k4r) + w2 * (k2r + k3r);
    B = (0.5 * (B + B.transpose())).eval();

    if (!B.allFinite() || !g.allFinite() || !std::isfinite(rr)) {
      throw Error(ErrorCode::NonFinite, std::string(options.operation),
                  "state became non-finite (step too large or backward flow left the SPD cone)",
                  step);
    }
    if (options.observer) {
      materialize(view);
      options.observer(StepInfo{step, plan.elapsed_after(step), view});
    }
  }

  RiccatiState out;
  materialize(out);
  check_state(out, options.operation, plan.count == 0 ? 0 : plan.count - 1);
  return out;
}

RiccatiState evolve_low_rank_dispatch(const RiccatiState& start, const DataBlock& block,
                                      const StepPlan& plan, const EvolveOptions& options) {
  switch (block.rows()) {
    case 1: return evolve_low_rank<1>(start, block, plan, options);
    case 2: return evolve_low_rank<2>(start, block, plan, options);
    case 3: return evolve_low_rank<3>(start, block, plan, options);
    case 4: return evolve_low_rank<4>(start, block, plan, options);
    default: return evolve_low_rank<Eigen::Dynamic>(start, block, plan, options);
  }
}

}  // namespace

RiccatiState init_state(const GaussianPrior& prior, bool track_r) {
  validate_prior(prior, "init_state");
  RiccatiState s;
  const Index n = prior.x.size();
  s.P = prior.lambda;
  symmetrize(s.P);
  s.q = Vector::Zero(n);
  s.epsilon = prior.epsilon;
  s.track_r = track_r;
  if (track_r) {
    const double eps = prior.epsilon;
    s.r = 0.5 * eps * log_det_spd(prior.lambda, "init_state") +
          0.5 * eps * static_cast<double>(n) * std::log(2.0 * std::numbers::pi * eps);
  }
  return s;
}

RhsValue riccati_rhs(const RiccatiState& state, const DataBlock& block) {
  validate_block(block, state.dim(), "riccati_rhs");
  const Matrix& phi = block.phi;
  const Matrix gram = phi.transpose() * phi;
  const Vector resid = phi * state.q - block.y;
  RhsValue out;
  out.dP = -state.P * gram * state.P;
  out.dq = -state.P * phi.transpose() * resid;
  out.dr = -0.5 * resid.squaredNorm() - 0.5 * state.epsilon * (gram * state.P).trace();
  return out;
}

std::size_t step_count(double duration, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorCode::InvalidArgument, "evolve", "step size must be positive and finite");
  }
  if (!std::isfinite(duration)) {
    throw Error(ErrorCode::InvalidArgument, "evolve", "duration must be finite");
  }
  const double ratio = std::abs(duration) / h;
  if (ratio == 0.0) return 0;
  // Absorb representation noise such as 1.0 / 1e-4 = 10000.000000000002.
  const double n = std::ceil(ratio * (1.0 - 1e-12));
  return static_cast<std::size_t>(std::max(1.0, n));
}

RiccatiState evolve(const RiccatiState& state, const DataBlock& block, double duration, double h,
                    const EvolveOptions& options) {
  validate_block(block, state.dim(), options.operation);
  if (!(state.epsilon > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, std::string(options.operation),
                "epsilon must be positive");
  }
  const StepPlan plan = plan_steps(duration, h);
  if (plan.count == 0) return state;

  Integrator kind = options.integrator;
  if (kind == Integrator::Auto) {
    kind = block.rows() < state.dim() ? Integrator::LowRank : Integrator::FullMatrix;
  }
  if (kind == Integrator::LowRank) return evolve_low_rank_dispatch(state, block, plan, options);
  return evolve_full(state, block, plan, options);
}

RiccatiState incorporate(const RiccatiState& state, const DataBlock& block, double h,
                         const EvolveOptions& options) {
  EvolveOptions opts = options;
  if (opts.operation == "evolve") opts.operation = "incorporate";
  validate_block(block, state.dim(), opts.operation);
  return evolve(state, block, block.time(state.epsilon), h, opts);
}

RiccatiState retract(const RiccatiState& state, const DataBlock& block, double h,
                     const EvolveOptions& options) {
  EvolveOptions opts = options;
  if (opts.operation == "evolve") opts.operation = "retract";
  validate_block(block, state.dim(), opts.operation);
  RiccatiState out = evolve(state, block, -block.time(state.epsilon), h, opts);
  require_spd(out.P, opts.operation);
  return out;
}

RiccatiState tune_observation_variance(const RiccatiState& state, const DataBlock& block,
                                       double sigma2_new, double h, const FlowObserver& emit) {
  const std::string op = "tune_observation_variance";
  validate_block(block, state.dim(), op);
  if (!(sigma2_new > 0.0) || !std::isfinite(sigma2_new)) {
    throw Error(ErrorCode::InvalidArgument, op, "new variance must be positive and finite");
  }
  const double eps = state.epsilon;
  const double t_old = eps / block.sigma2;
  const double duration = eps / sigma2_new - t_old;

  EvolveOptions opts;
  opts.operation = op;
  if (emit) {
    opts.observer = [&](const StepInfo& info) {
      emit(FlowSample{eps / (t_old + info.elapsed), info.index, info.elapsed, info.state});
    };
  }
  RiccatiState out = evolve(state, block, duration, h, opts);
  if (duration < 0.0) require_spd(out.P, op);
  return out;
}

PosteriorSummary posterior(const RiccatiState& state, const Vector& x) {
  if (x.size() != state.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "posterior", "evaluation point has wrong length");
  }
  PosteriorSummary s;
  s.mu = state.P * x + state.q;
  s.sigma = state.epsilon * state.P;
  return s;
}

RiccatiState state_from_posterior(const PosteriorSummary& summary, const Vector& x,
                                  double epsilon) {
  const std::string op = "state_from_posterior";
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, op, "epsilon must be positive");
  if (summary.mu.size() != x.size() || summary.sigma.rows() != x.size()) {
    throw Error(ErrorCode::DimensionMismatch, op, "summary / x dimensions differ");
  }
  require_spd(summary.sigma, op);
  RiccatiState s;
  s.P = summary.sigma / epsilon;
  s.q = summary.mu - s.P * x;
  s.epsilon = epsilon;
  s.track_r = false;
  return s;
}

RiccatiState closed_form_state(const GaussianPrior& prior, std::span<const DataBlock> blocks,
                               bool track_r) {
  const std::string op = "closed_form_posterior";
  validate_prior(prior, op);
  const Index n = prior.x.size();
  const double eps = prior.epsilon;

  Eigen::LLT<Matrix> lambda_llt(prior.lambda);
  Matrix precision = lambda_llt.solve(Matrix::Identity(n, n));
  Vector b = Vector::Zero(n);
  double c = 0.0;
  for (const DataBlock& block : blocks) {
    validate_block(block, n, op);
    const double t = block.time(eps);
    precision.noalias() += t * block.phi.transpose() * block.phi;
    b.noalias() += t * block.phi.transpose() * block.y;
    c += 0.5 * t * block.y.squaredNorm();
  }
  precision = (0.5 * (precision + precision.transpose())).eval();
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NonSPD, op, "posterior precision is not positive definite");
  }

  RiccatiState s;
  s.P = llt.solve(Matrix::Identity(n, n));
  symmetrize(s.P);
  s.q = llt.solve(b);
  s.epsilon = eps;
  s.track_r = track_r;
  if (track_r) {
    const double log_det_precision = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    s.r = 0.5 * b.dot(s.q) - c +
          0.5 * eps * static_cast<double>(n) * std::log(2.0 * std::numbers::pi * eps) -
          0.5 * eps * log_det_precision;
  }
  return s;
}

PosteriorSummary closed_form_posterior(const GaussianPrior& prior,
                                       std::span<const DataBlock> blocks) {
  return posterior(closed_form_state(prior, blocks), prior.x);
}

double expected_hamiltonian(const RiccatiState& state, const DataBlock& block, const Vector& x) {
  validate_block(block, state.dim(), "expected_hamiltonian");
  const PosteriorSummary s = posterior(state, x);
  const Vector resid = block.phi * s.mu - block.y;
  const double spread = (block.phi * s.sigma * block.phi.transpose()).trace();
  return 0.5 * resid.squaredNorm() + 0.5 * spread;
}

double log_partition(const RiccatiState& state, const Vector& x) {
  if (x.size() != state.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "log_partition", "evaluation point has wrong length");
  }
  return 0.5 * x.dot(state.P * x) + state.q.dot(x) + state.r;
}

}  // namespace hjr
