#include <algorithm>
#include <cmath>
#include <map>

#include "hjr/error.hpp"
#include "hjr/prior_ops.hpp"
#include "internal.hpp"

namespace hjr {

using detail::make_prior;
using detail::make_report;
using detail::unit_grid;

namespace {

struct BvpSetup {
  BasisFamily basis;
  OperatorSpec op;
  std::vector<Point> eval;
  std::vector<double> u_exact, f_exact;
};

BvpSetup bvp_setup(const ExperimentConfig& cfg) {
  const auto& b = cfg.bvp;
  BvpSetup s;
  s.basis = build_exp_kernel_kl(b.n, b.ell, b.half_width);
  if (b.kl_domain == "mapped") map_onto_kernel_interval(s.basis, 0.0, 1.0);
  s.op = OperatorSpec::bvp4(b.kappa, b.beta);
  s.eval = unit_grid(b.eval_points);
  for (const Point& p : s.eval) {
    s.u_exact.push_back(exact::bvp_u(p.x));
    s.f_exact.push_back(exact::bvp_f(p.x, b.kappa, b.beta));
  }
  return s;
}

RiccatiState absorb_boundary(RiccatiState state, const BvpData& data, const ExperimentConfig& cfg,
                             OracleAccumulator* acc) {
  for (const DataBlock& blk : data.boundary) {
    state = incorporate(state, blk, cfg.bvp.h_boundary);
    if (acc) acc->add(blk);
  }
  return state;
}

}  // namespace

ContinualResult run_continual_learning(const ExperimentConfig& cfg) {
  cfg.validate();
  const BvpSetup s = bvp_setup(cfg);
  const BvpData data = synth_bvp_data(cfg, s.basis, cfg.bvp.f_count);
  const GaussianPrior prior = make_prior(cfg, cfg.bvp.n);

  OracleAccumulator acc(prior);
  RiccatiState state = absorb_boundary(init_state(prior), data, cfg, &acc);

  ContinualResult res;
  auto next_cp = cfg.bvp.checkpoints.begin();
  for (std::size_t i = 0; i < data.f.size(); ++i) {
    state = incorporate(state, data.f[i], cfg.bvp.h);
    acc.add(data.f[i]);
    const int count = static_cast<int>(i) + 1;
    if (next_cp != cfg.bvp.checkpoints.end() && *next_cp == count) {
      res.checkpoints.push_back(make_report(count, state, s.basis, s.op, s.eval, s.u_exact, s.f_exact));
      ++next_cp;
    }
  }
  res.oracle_discrepancy = relative_discrepancy(posterior(state, prior.x), acc.posterior());
  res.final_state = std::move(state);
  return res;
}

TuningResult run_hyperparameter_tuning(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& tc = cfg.tuning;
  const BvpSetup s = bvp_setup(cfg);
  const BvpData data = synth_bvp_data(cfg, s.basis, tc.train_f_count);
  const Eigen::Index n = cfg.bvp.n;
  const double eps = cfg.epsilon;

  std::vector<DataBlock> training = data.boundary;
  training.insert(training.end(), data.f.begin(), data.f.end());

  // validation data at random locations
  Rng vrng = Rng::stream(cfg.seed, 3);
  std::vector<Point> vpts;
  Vector yv(tc.validation_count);
  for (int i = 0; i < tc.validation_count; ++i) {
    const double t = vrng.uniform();
    vpts.push_back({t, 0.0});
    yv(i) = exact::bvp_f(t, cfg.bvp.kappa, cfg.bvp.beta) + cfg.bvp.noise_scale * cfg.bvp.sd_f * vrng.normal();
  }
  const RowMatrix Fv = design_matrix(s.basis, s.op, vpts);
  std::vector<Point> spts;
  for (double t : tc.slices) spts.push_back({t, 0.0});
  const RowMatrix Us = design_matrix(s.basis, OperatorSpec::identity(), spts);

  auto lambda_of = [&](double sigma) -> Matrix { return (sigma * sigma / eps) * Matrix::Identity(n, n); };
  auto prior_of = [&](double sigma) {
    GaussianPrior p;
    p.lambda = lambda_of(sigma);
    p.x = Vector::Zero(n);
    p.epsilon = eps;
    return p;
  };
  const Vector x0 = Vector::Zero(n);

  TuningResult res;
  auto record = [&](int segment, std::size_t step, double sigma, const RiccatiState& st) {
    const Vector mu = st.P * x0 + st.q;
    FlowRow row;
    row.segment = segment;
    row.step = step;
    row.sigma = sigma;
    row.validation_error = 100.0 * (Fv * mu - yv).norm() / yv.norm();
    const Vector us = Us * mu;
    row.u_slices.assign(us.data(), us.data() + us.size());
    res.flow.push_back(std::move(row));
  };

  const double sigma0 = tc.schedule.front().from;
  RiccatiState base = closed_form_state(prior_of(sigma0), training);
  record(-1, 0, sigma0, base);
  res.baseline_validation_error = res.flow.back().validation_error;
  res.checks.push_back({sigma0, 0.0});

  std::map<double, RiccatiState> at_sigma{{sigma0, base}};
  RiccatiState last = base;
  for (std::size_t k = 0; k < tc.schedule.size(); ++k) {
    const TuningSegment& seg = tc.schedule[k];
    const auto start = at_sigma.find(seg.from);
    if (start == at_sigma.end()) {
      throw Error(ErrorCode::Config, "run_hyperparameter_tuning",
                  "segment " + std::to_string(k) + " starts at a sigma that has not been reached");
    }
    const double alpha = (seg.to / seg.from) * (seg.to / seg.from);
    const double h_tau = seg.h * seg.from * seg.from;
    const int segment = static_cast<int>(k);
    const std::size_t steps = step_count(std::abs(1.0 / alpha - 1.0), h_tau);
    record(segment, 0, seg.from, start->second);
    auto emit = [&](const FlowSample& fs) {
      const std::size_t step = fs.step + 1;
      if (step % static_cast<std::size_t>(tc.emit_stride) == 0 || step == steps) {
        record(segment, step, seg.from * std::sqrt(fs.parameter), fs.state);
      }
    };
    RiccatiState end = scale_prior_covariance(start->second, lambda_of(seg.from), alpha, h_tau, emit);
    const PosteriorSummary want = closed_form_posterior(prior_of(seg.to), training);
    res.checks.push_back({seg.to, relative_discrepancy(posterior(end, x0), want)});
    last = end;
    at_sigma.insert_or_assign(seg.to, std::move(end));
  }
  res.final_state = std::move(last);
  return res;
}

OutlierResult run_outlier_removal(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& oc = cfg.outlier;
  const BvpSetup s = bvp_setup(cfg);
  BvpData data = synth_bvp_data(cfg, s.basis, cfg.bvp.f_count);
  for (std::size_t k = 0; k < oc.indices.size(); ++k) {
    data.f[static_cast<std::size_t>(oc.indices[k])].y.array() += oc.offsets_sd[k] * cfg.bvp.sd_f;
  }
  const GaussianPrior prior = make_prior(cfg, cfg.bvp.n);

  std::vector<DataBlock> all = data.boundary;
  all.insert(all.end(), data.f.begin(), data.f.end());
  const RiccatiState base = closed_form_state(prior, all);

  OutlierResult res;
  res.stages.push_back(make_report(0, base, s.basis, s.op, s.eval, s.u_exact, s.f_exact));
  RiccatiState state = base;
  for (std::size_t k = 0; k < oc.indices.size(); ++k) {
    state = retract(state, data.f[static_cast<std::size_t>(oc.indices[k])], oc.h_remove);
    res.stages.push_back(make_report(static_cast<long long>(k) + 1, state, s.basis, s.op, s.eval,
                                     s.u_exact, s.f_exact));
  }

  std::vector<DataBlock> kept = data.boundary;
  for (std::size_t i = 0; i < data.f.size(); ++i) {
    if (std::find(oc.indices.begin(), oc.indices.end(), static_cast<int>(i)) == oc.indices.end()) {
      kept.push_back(data.f[i]);
    }
  }
  const PosteriorSummary got = posterior(state, prior.x);
  res.oracle_discrepancy = relative_discrepancy(got, closed_form_posterior(prior, kept));

  RiccatiState reversed = base;
  for (auto it = oc.indices.rbegin(); it != oc.indices.rend(); ++it) {
    reversed = retract(reversed, data.f[static_cast<std::size_t>(*it)], oc.h_remove);
  }
  res.order_difference = detail::max_abs_difference(got, posterior(reversed, prior.x));
  res.final_state = std::move(state);
  return res;
}

}  // namespace hjr
