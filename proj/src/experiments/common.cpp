#include "internal.hpp"

namespace hjr::detail {

GaussianPrior make_prior(const ExperimentConfig& cfg, Eigen::Index n) {
  return GaussianPrior::isotropic(n, cfg.prior_variance, cfg.epsilon);
}

std::vector<Point> unit_grid(int count) {
  std::vector<Point> pts(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) pts[static_cast<std::size_t>(i)] = {static_cast<double>(i) / (count - 1), 0.0};
  return pts;
}

double mean(const Vector& v) { return v.size() ? v.mean() : 0.0; }

CheckpointReport make_report(long long count, const RiccatiState& state, const BasisFamily& basis,
                             const OperatorSpec& op, const std::vector<Point>& points,
                             const std::vector<double>& u_exact, const std::vector<double>& f_exact) {
  CheckpointReport r;
  r.count = count;
  r.grid = prediction_grid(state, basis, op, points, Vector::Zero(state.dim()));
  r.u_exact = u_exact;
  r.f_exact = f_exact;
  const auto& g = r.grid;
  r.u_error = relative_l2_error({g.u_mean.data(), static_cast<std::size_t>(g.u_mean.size())}, u_exact);
  r.f_error = relative_l2_error({g.f_mean.data(), static_cast<std::size_t>(g.f_mean.size())}, f_exact);
  r.mean_u_band = mean(g.u_band);
  r.mean_f_band = mean(g.f_band);
  return r;
}

double max_abs_difference(const PosteriorSummary& a, const PosteriorSummary& b) {
  return std::max((a.mu - b.mu).cwiseAbs().maxCoeff(), (a.sigma - b.sigma).cwiseAbs().maxCoeff());
}

}  // namespace hjr::detail
