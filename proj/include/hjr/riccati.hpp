#pragma once

// Sequential Bayesian linear regression through matrix Riccati ODEs.
//
// For a linear model y_j = Phi_j w + noise_j with noise_j ~ N(0, sigma_j^2 I)
// and prior w ~ N(Lambda x, eps Lambda), the log-partition function
//
//   S(x, t_1..t_N) = eps log \int exp((<x,w> - sum_j t_j H_j(w) - w^T Lambda^{-1} w / 2) / eps) dw,
//   H_j(w) = |Phi_j w - y_j|^2 / 2,
//
// is quadratic in x: S = x^T P x / 2 + q^T x + r. Along the time variable of
// block j the coefficients obey
//
//   P' = -P Phi^T Phi P
//   q' = -P Phi^T (Phi q - y)
//   r' = -|Phi q - y|^2 / 2 - eps/2 tr(Phi^T Phi P)
//
// starting from P = Lambda, q = 0, r = eps/2 log det Lambda + eps n/2 log(2 pi eps).
// Incorporating block j means integrating for a time eps / sigma_j^2; the
// posterior is then mean = P x + q, covariance = eps P.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace hjr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Quadratic coefficients of the log-partition function plus the scale eps.
struct RiccatiState {
  Matrix P;
  Vector q;
  double r = 0.0;
  double epsilon = 1.0;
  bool track_r = false;

  Eigen::Index dim() const { return q.size(); }
};

/// One batch of observations sharing a noise variance. Stacked rows
/// (m > 1) are equivalent to m single-row blocks with the same variance.
struct DataBlock {
  Matrix phi;  // m x n design rows
  Vector y;    // m observations
  double sigma2 = 1.0;

  Eigen::Index rows() const { return phi.rows(); }
  Eigen::Index cols() const { return phi.cols(); }
  /// Evolution time eps / sigma^2 that encodes this block.
  double time(double epsilon) const { return epsilon / sigma2; }
};

/// Prior N(lambda x, eps lambda).
struct GaussianPrior {
  Matrix lambda;
  Vector x;
  double epsilon = 1.0;

  Vector mean() const { return lambda * x; }
  Matrix covariance() const { return epsilon * lambda; }

  static GaussianPrior isotropic(Eigen::Index n, double variance = 1.0, double epsilon = 1.0);
};

struct PosteriorSummary {
  Vector mu;
  Matrix sigma;
};

struct RhsValue {
  Matrix dP;
  Vector dq;
  double dr = 0.0;
};

/// Throws DimensionMismatch / InvalidArgument when a block is unusable for
/// a state of dimension n.
void validate_block(const DataBlock& block, Eigen::Index n, std::string_view operation);
void validate_prior(const GaussianPrior& prior, std::string_view operation);

RiccatiState init_state(const GaussianPrior& prior, bool track_r = false);

/// Right-hand side of the Riccati system for one block, evaluated literally.
RhsValue riccati_rhs(const RiccatiState& state, const DataBlock& block);

enum class Integrator {
  Auto,       // LowRank when the block has fewer rows than the state dimension
  FullMatrix, // classical RK4 on (P, q, r)
  LowRank,    // RK4 on the m x m coordinates of the invariant manifold P0 - V B V^T
};

struct StepInfo {
  std::size_t index;  // 0-based accepted step
  double elapsed;     // signed time travelled so far within this evolve call
  const RiccatiState& state;
};

using StepObserver = std::function<void(const StepInfo&)>;

struct EvolveOptions {
  Integrator integrator = Integrator::Auto;
  StepObserver observer;                 // called after every accepted step
  std::string_view operation = "evolve"; // reported in numerical errors
};

/// Number of RK4 steps used for |duration| with nominal step h; the last step
/// is shortened so the endpoint is hit exactly.
std::size_t step_count(double duration, double h);

/// Fixed-step classical RK4 on the Riccati system of `block` for `duration`
/// (negative = backward). P is re-symmetrized after every step.
RiccatiState evolve(const RiccatiState& state, const DataBlock& block, double duration, double h,
                    const EvolveOptions& options = {});

/// Adds a block: forward evolution for eps / sigma^2.
RiccatiState incorporate(const RiccatiState& state, const DataBlock& block, double h,
                         const EvolveOptions& options = {});

/// Removes a previously incorporated block: backward evolution for
/// eps / sigma^2. Throws NonFinite / NonSPD if the result leaves the SPD cone.
RiccatiState retract(const RiccatiState& state, const DataBlock& block, double h,
                     const EvolveOptions& options = {});

/// One emitted point of a continuous hyperparameter flow.
struct FlowSample {
  double parameter;  // implied hyperparameter at this step
  std::size_t step;
  double elapsed;
  const RiccatiState& state;
};

using FlowObserver = std::function<void(const FlowSample&)>;

/// Changes the variance of an incorporated block from block.sigma2 to
/// sigma2_new. The optional observer sees every accepted step with the
/// implied variance eps / (eps / sigma2 + elapsed).
RiccatiState tune_observation_variance(const RiccatiState& state, const DataBlock& block,
                                       double sigma2_new, double h,
                                       const FlowObserver& emit = {});

PosteriorSummary posterior(const RiccatiState& state, const Vector& x);

/// Inverse of posterior() at the same evaluation point: P = Sigma/eps,
/// q = mu - Sigma x / eps. r is not recoverable and is left untracked.
RiccatiState state_from_posterior(const PosteriorSummary& summary, const Vector& x,
                                  double epsilon);

/// Analytic solution of the multi-block Riccati system (all blocks at their
/// full time eps / sigma_i^2). Used as the reference for every integrator.
/// r is included when track_r is set.
RiccatiState closed_form_state(const GaussianPrior& prior, std::span<const DataBlock> blocks,
                               bool track_r = false);

PosteriorSummary closed_form_posterior(const GaussianPrior& prior,
                                       std::span<const DataBlock> blocks);

/// E[|Phi w - y|^2 / 2] under the posterior at x; equals -dS/dt_block.
double expected_hamiltonian(const RiccatiState& state, const DataBlock& block, const Vector& x);

/// S(x) = x^T P x / 2 + q^T x + r. Meaningful only when r is tracked.
double log_partition(const RiccatiState& state, const Vector& x);

/// Throws NonSPD unless P admits a Cholesky factorization.
void require_spd(const Matrix& m, std::string_view operation);

bool is_finite(const RiccatiState& state);

}  // namespace hjr
