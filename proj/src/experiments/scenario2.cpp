#include <cmath>

#include "hjr/error.hpp"
#include "hjr/kernels.hpp"
#include "internal.hpp"

namespace hjr {

using detail::make_prior;
using detail::make_report;
using detail::unit_grid;

namespace {

/// Single-point blocks f(x) + noise at uniform random x, generated on demand.
class StreamSource final : public BlockSource {
 public:
  StreamSource(const ExperimentConfig& cfg, BasisFamily basis, OperatorSpec op)
      : rng_(Rng::stream(cfg.seed, 4)), basis_(std::move(basis)), op_(op), cfg_(cfg.stream) {}

  std::shared_ptr<const DataBlock> next() override {
    const double x = rng_.uniform();
    auto blk = std::make_shared<DataBlock>();
    blk->phi = design_row(basis_, op_, {x, 0.0}).transpose();
    blk->y.resize(1);
    blk->y(0) = exact::stream_f(x, cfg_.diffusion, cfg_.kappa) + cfg_.sd_f * rng_.normal();
    blk->sigma2 = cfg_.sd_f * cfg_.sd_f;
    return blk;
  }

 private:
  Rng rng_;
  BasisFamily basis_;
  OperatorSpec op_;
  StreamConfig cfg_;
};

Vector f_bands(const RiccatiState& state, const RowMatrix& rows, double epsilon) {
  const auto n = static_cast<std::size_t>(state.dim());
  const auto count = static_cast<std::size_t>(rows.rows());
  Vector out(rows.rows());
  std::vector<double> scratch(n);
  kernels::active().quad_rows(rows.data(), count, n, state.P.data(), out.data(), scratch.data());
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = 2.0 * std::sqrt(std::max(0.0, epsilon * out(i)));
  return out;
}

}  // namespace

ContinualResult run_bigdata_stream(const ExperimentConfig& cfg, const SourceWrapper& wrap) {
  cfg.validate();
  const auto& sc = cfg.stream;
  BasisFamily basis = build_brownian_bridge(sc.n);
  const OperatorSpec op = OperatorSpec::adv_diff(sc.diffusion, sc.kappa);
  const GaussianPrior prior = make_prior(cfg, sc.n);

  const std::vector<Point> eval = unit_grid(sc.eval_points);
  std::vector<double> u_exact, f_exact;
  for (const Point& p : eval) {
    u_exact.push_back(exact::stream_u(p.x));
    f_exact.push_back(exact::stream_f(p.x, sc.diffusion, sc.kappa));
  }

  std::unique_ptr<BlockSource> source = std::make_unique<StreamSource>(cfg, basis, op);
  if (wrap) source = wrap(std::move(source));

  const long long length = stream_length(cfg);
  const std::vector<long long> cps = stream_checkpoints(cfg);
  auto next_cp = cps.begin();

  OracleAccumulator acc(prior);
  RiccatiState state = init_state(prior);
  ContinualResult res;
  for (long long count = 1; count <= length; ++count) {
    std::shared_ptr<const DataBlock> blk = source->next();
    state = incorporate(state, *blk, sc.h);
    acc.add(*blk);
    blk.reset();
    if (next_cp != cps.end() && *next_cp == count) {
      res.checkpoints.push_back(make_report(count, state, basis, op, eval, u_exact, f_exact));
      ++next_cp;
    }
  }
  res.oracle_discrepancy = relative_discrepancy(posterior(state, prior.x), acc.posterior());
  res.final_state = std::move(state);
  return res;
}

ActiveResult run_active_learning(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& sc = cfg.stream;
  const auto& ac = cfg.active;
  const BasisFamily basis = build_brownian_bridge(sc.n);
  const OperatorSpec op = OperatorSpec::adv_diff(sc.diffusion, sc.kappa);
  const GaussianPrior prior = make_prior(cfg, sc.n);

  const std::vector<Point> cand = unit_grid(ac.candidates);
  const RowMatrix F = design_matrix(basis, op, cand);
  Rng rng = Rng::stream(cfg.seed, 5);
  std::vector<double> noise(cand.size());
  for (double& z : noise) z = rng.normal();

  const std::vector<Point> eval = unit_grid(sc.eval_points);
  std::vector<double> u_exact, f_exact;
  for (const Point& p : eval) {
    u_exact.push_back(exact::stream_u(p.x));
    f_exact.push_back(exact::stream_f(p.x, sc.diffusion, sc.kappa));
  }

  OracleAccumulator acc(prior);
  RiccatiState state = init_state(prior);
  std::vector<bool> available(cand.size(), true);
  ActiveResult res;
  for (int it = 0;; ++it) {
    const Vector bands = f_bands(state, F, cfg.epsilon);
    int best = -1;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (available[i] && (best < 0 || bands(static_cast<Eigen::Index>(i)) > bands(best))) best = static_cast<int>(i);
    }
    if (best < 0) {
      res.stop_reason = "pool exhausted";
      break;
    }
    if (bands(best) < ac.threshold) {
      res.stop_reason = "threshold";
      break;
    }
    if (ac.max_sensors > 0 && it >= ac.max_sensors) {
      res.stop_reason = "max_sensors";
      break;
    }

    ActiveIteration row;
    row.iteration = it;
    row.chosen = best;
    row.x = cand[static_cast<std::size_t>(best)].x;
    row.band_before = bands(best);
    row.f_bands.assign(bands.data(), bands.data() + bands.size());
    row.available = available;

    DataBlock blk;
    blk.phi = F.row(best);
    blk.y.resize(1);
    blk.y(0) = exact::stream_f(row.x, sc.diffusion, sc.kappa) + ac.sd_f * noise[static_cast<std::size_t>(best)];
    blk.sigma2 = ac.sd_f * ac.sd_f;
    state = incorporate(state, blk, ac.h);
    acc.add(blk);
    available[static_cast<std::size_t>(best)] = false;

    const RowMatrix chosen_row = F.row(best);
    row.band_after = f_bands(state, chosen_row, cfg.epsilon)(0);
    const CheckpointReport rep = make_report(it + 1, state, basis, op, eval, u_exact, f_exact);
    row.u_error = rep.u_error;
    row.f_error = rep.f_error;
    row.mean_u_band = rep.mean_u_band;
    res.iterations.push_back(std::move(row));
  }
  res.oracle_discrepancy = relative_discrepancy(posterior(state, prior.x), acc.posterior());
  res.final_state = std::move(state);
  return res;
}

std::optional<int> verify_active_log(const ActiveResult& result) {
  std::vector<bool> taken;
  for (const ActiveIteration& row : result.iterations) {
    const std::size_t c = row.f_bands.size();
    if (row.available.size() != c) return row.iteration;
    if (taken.empty()) taken.assign(c, false);
    int best = -1;
    for (std::size_t i = 0; i < c; ++i) {
      if (row.available[i] == taken[i]) return row.iteration;  // pool out of sync with history
      if (row.available[i] && (best < 0 || row.f_bands[i] > row.f_bands[static_cast<std::size_t>(best)])) {
        best = static_cast<int>(i);
      }
    }
    if (best != row.chosen) return row.iteration;
    taken[static_cast<std::size_t>(best)] = true;
  }
  return std::nullopt;
}

}  // namespace hjr
