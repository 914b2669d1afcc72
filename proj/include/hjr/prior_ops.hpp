#pragma once

// Updating the prior of a trained state without touching the data.
//
// Mean: the prior mean enters only through the evaluation point x = Lambda^{-1} w0,
// so a new mean is a new evaluation of the same state.
//
// Covariance: the quadratic prior term w^T Lambda^{-1} w / 2 behaves like a
// Hamiltonian with Phi = Lambda^{-1/2}, y = 0 over unit time. Swapping priors
// adds the new one forward and removes the old one backward. When the new
// covariance is a multiple alpha of the old one a single flow of length
// 1/alpha - 1 suffices, and every intermediate time s corresponds to the
// prior Lambda / (1 + s).

#include <optional>

#include "hjr/riccati.hpp"

namespace hjr {

struct CovarianceRetune {
  Matrix lambda_old;
  Matrix lambda_new;
  std::optional<double> scale_alpha;  // set when lambda_new == alpha * lambda_old

  static CovarianceRetune scaled(const Matrix& lambda_old, double alpha);
};

/// Checks both matrices are SPD and, when scale_alpha is set, that
/// lambda_new matches alpha * lambda_old to 1e-12 relative.
void validate_retune(const CovarianceRetune& retune, Eigen::Index n);

/// Posterior under the prior mean Lambda x_new. The covariance is
/// independent of x.
PosteriorSummary retarget_prior_mean(const RiccatiState& state, const Vector& x_new);

/// Principal inverse square root through a symmetric eigendecomposition.
/// Throws NonSPD when an eigenvalue is <= 1e-14 times the largest.
Matrix matrix_inv_sqrt(const Matrix& a);

/// Two-phase prior covariance change. `x` is the evaluation point the caller
/// reads posteriors at; the state itself is x-independent, it is only checked
/// for length.
RiccatiState tune_prior_covariance(const RiccatiState& state, const CovarianceRetune& retune,
                                   const Vector& x, double h);

/// Single-flow change Lambda -> alpha Lambda. The observer sees each step with
/// the implied factor 1 / (1 + elapsed).
RiccatiState scale_prior_covariance(const RiccatiState& state, const Matrix& lambda, double alpha,
                                    double h, const FlowObserver& emit = {});

}  // namespace hjr
