#pragma once

#include <vector>

#include "hjr/experiments.hpp"

namespace hjr::detail {

GaussianPrior make_prior(const ExperimentConfig& cfg, Eigen::Index n);

/// `count` equispaced points on [0, 1].
std::vector<Point> unit_grid(int count);

double mean(const Vector& v);

CheckpointReport make_report(long long count, const RiccatiState& state, const BasisFamily& basis,
                             const OperatorSpec& op, const std::vector<Point>& points,
                             const std::vector<double>& u_exact, const std::vector<double>& f_exact);

/// max |a - b| over mu and sigma.
double max_abs_difference(const PosteriorSummary& a, const PosteriorSummary& b);

}  // namespace hjr::detail
