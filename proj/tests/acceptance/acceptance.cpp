// Acceptance checks, one line per criterion:
//
//   hjr_acceptance            run all ten
//   hjr_acceptance 3 8        run a subset
//
// Exit status is 0 only if every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "basis_checks.hpp"
#include "hjr/experiments.hpp"
#include "hjr/prior_ops.hpp"
#include "hjr/riccati.hpp"
#include "oracles.hpp"

using namespace hjr;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_moments(const PosteriorSummary& got, const oracle::Moments& want) {
  return std::max(oracle::max_rel(got.mu, want.mu), oracle::max_rel(got.sigma, want.sigma));
}

ExperimentConfig defaults(const std::string& id) { return load_config(json::object(), id); }

/// Forwards blocks unchanged and keeps a copy for an independent oracle.
class Recorder final : public BlockSource {
 public:
  Recorder(std::unique_ptr<BlockSource> inner, std::vector<DataBlock>& out) : inner_(std::move(inner)), out_(out) {}
  std::shared_ptr<const DataBlock> next() override {
    auto b = inner_->next();
    out_.push_back(*b);
    return b;
  }

 private:
  std::unique_ptr<BlockSource> inner_;
  std::vector<DataBlock>& out_;
};

// 1. Sequential RK4 against the closed form on random instances.
Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> nd(1, 10), Nd(1, 20), md(1, 3);
  double worst_closed = 0.0, worst_normal = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = nd(rng), N = Nd(rng);
    const Matrix lambda = oracle::random_spd(rng, n);
    const double eps = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    const Vector x = Vector::Random(n);
    const GaussianPrior prior{lambda, x, eps};
    std::vector<DataBlock> blocks;
    for (int i = 0; i < N; ++i) blocks.push_back(oracle::random_block(rng, md(rng), n, 0.2, 2.0));
    RiccatiState st = init_state(prior);
    for (const auto& b : blocks) st = incorporate(st, b, 1e-3);
    const PosteriorSummary got = posterior(st, x);
    const PosteriorSummary closed = closed_form_posterior(prior, blocks);
    worst_closed = std::max({worst_closed, oracle::max_rel(got.mu, closed.mu), oracle::max_rel(got.sigma, closed.sigma)});
    worst_normal = std::max(worst_normal, rel_moments(got, oracle::normal_equations(lambda, lambda * x, eps, blocks)));
  }
  const double secs = seconds_since(t0);
  return {worst_closed < 1e-6 && worst_normal < 1e-6 && secs < 60.0,
          fmt("200 instances: max rel error %.2e vs closed form, %.2e vs normal equations, %.1f s", worst_closed,
              worst_normal, secs)};
}

// 2. Incorporate/retract roundtrip and permutation invariance.
Outcome roundtrip_and_order() {
  std::mt19937_64 rng(777);
  double roundtrip = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 8;
    const Matrix lambda = oracle::random_spd(rng, n);
    const Vector x = Vector::Random(n);
    RiccatiState st = init_state(GaussianPrior{lambda, x, 1.0});
    for (int i = 0; i < 3; ++i) st = incorporate(st, oracle::random_block(rng, 2, n, 0.3, 2.0), 1e-3);
    const DataBlock b = oracle::random_block(rng, 1 + trial % 3, n, 0.3, 2.0);
    const RiccatiState back = retract(incorporate(st, b, 1e-3), b, 1e-3);
    const auto p0 = posterior(st, x), p1 = posterior(back, x);
    roundtrip = std::max({roundtrip, oracle::max_abs(p0.mu, p1.mu), oracle::max_abs(p0.sigma, p1.sigma)});
  }

  const int n = 6;
  const Matrix lambda = oracle::random_spd(rng, n);
  const Vector x = Vector::Random(n);
  std::vector<DataBlock> blocks;
  for (int i = 0; i < 10; ++i) blocks.push_back(oracle::random_block(rng, 1 + i % 3, n, 0.3, 2.0));
  std::vector<int> order(10);
  std::iota(order.begin(), order.end(), 0);
  std::vector<PosteriorSummary> finals;
  for (int p = 0; p < 20; ++p) {
    std::shuffle(order.begin(), order.end(), rng);
    RiccatiState st = init_state(GaussianPrior{lambda, x, 1.0});
    for (int i : order) st = incorporate(st, blocks[static_cast<std::size_t>(i)], 1e-3);
    finals.push_back(posterior(st, x));
  }
  double spread = 0.0;
  for (const auto& f : finals) {
    spread = std::max({spread, oracle::max_abs(f.mu, finals[0].mu), oracle::max_abs(f.sigma, finals[0].sigma)});
  }
  return {roundtrip < 1e-8 && spread < 1e-8,
          fmt("roundtrip max abs %.2e over 20 instances; 20 permutations of 10 blocks agree to %.2e", roundtrip,
              spread)};
}

// 3. Prior retuning paths against the oracle under the new prior.
Outcome prior_tuning() {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> nd(1, 8), Nd(1, 10);
  std::uniform_real_distribution<double> ad(0.3, 3.0);
  double two_phase = 0.0, one_phase = 0.0, agree = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = nd(rng), N = Nd(rng);
    const Matrix l_old = oracle::random_spd(rng, n);
    const Matrix l_new = oracle::random_spd(rng, n);
    const Vector x = Vector::Random(n);
    std::vector<DataBlock> blocks;
    for (int i = 0; i < N; ++i) blocks.push_back(oracle::random_block(rng, 1 + i % 2, n, 0.5, 2.0));
    RiccatiState st = init_state(GaussianPrior{l_old, x, 1.0});
    for (const auto& b : blocks) st = incorporate(st, b, 1e-3);

    const RiccatiState general = tune_prior_covariance(st, CovarianceRetune{l_old, l_new, std::nullopt}, x, 1e-3);
    two_phase = std::max(two_phase, rel_moments(posterior(general, x), oracle::normal_equations(l_new, l_new * x, 1.0, blocks)));

    const double alpha = ad(rng);
    const auto want = oracle::normal_equations(alpha * l_old, alpha * l_old * x, 1.0, blocks);
    const auto one = posterior(scale_prior_covariance(st, l_old, alpha, 1e-3), x);
    const auto two = posterior(tune_prior_covariance(st, CovarianceRetune::scaled(l_old, alpha), x, 1e-3), x);
    one_phase = std::max(one_phase, rel_moments(one, want));
    two_phase = std::max(two_phase, rel_moments(two, want));
    agree = std::max({agree, oracle::max_abs(one.mu, two.mu), oracle::max_abs(one.sigma, two.sigma)});
  }
  return {two_phase < 1e-6 && one_phase < 1e-6 && agree < 1e-7,
          fmt("50 instances: two-phase max rel %.2e, one-phase max rel %.2e, paths agree to %.2e", two_phase,
              one_phase, agree)};
}

// 4. The 1b sigma flow against the closed form at the schedule endpoints.
Outcome sigma_flow() {
  const auto t0 = Clock::now();
  const auto cfg = defaults("1b");
  const TuningResult r = run_hyperparameter_tuning(cfg);
  std::string parts;
  bool pass = true;
  std::set<double> seen;
  for (const auto& c : r.checks) {
    if (c.sigma == 1.0) continue;
    seen.insert(c.sigma);
    pass = pass && c.discrepancy < 1e-5;
    parts += fmt(" sigma=%g:%.1e", c.sigma, c.discrepancy);
  }
  pass = pass && seen == std::set<double>{0.5, 2.0, 5.0, 10.0, 20.0};

  // Independent check of the last endpoint (sigma = 20) with the normal equations.
  const auto basis = build_exp_kernel_kl(cfg.bvp.n, cfg.bvp.ell, cfg.bvp.half_width);
  const BvpData d = synth_bvp_data(cfg, basis, cfg.tuning.train_f_count);
  std::vector<DataBlock> training = d.boundary;
  training.insert(training.end(), d.f.begin(), d.f.end());
  const Eigen::Index n = cfg.bvp.n;
  const Matrix l20 = (400.0 / cfg.epsilon) * Matrix::Identity(n, n);
  const double ind = rel_moments(posterior(r.final_state, Vector::Zero(n)),
                                 oracle::normal_equations(l20, Vector::Zero(n), cfg.epsilon, training));
  pass = pass && ind < 1e-5;
  return {pass, fmt("endpoint discrepancies%s; sigma=20 vs normal equations %.1e; %zu flow rows, %.0f s",
                    parts.c_str(), ind, r.flow.size(), seconds_since(t0))};
}

// 5. KL eigenpairs of the exponential kernel.
Outcome kl_basis() {
  const auto b = build_exp_kernel_kl(30, 0.05, 10.0);
  const checks::KlReport rep = checks::check_kl(b);
  bool decreasing = true;
  for (std::size_t k = 1; k < b.modes.size(); ++k) decreasing = decreasing && b.modes[k].alpha < b.modes[k - 1].alpha;
  const bool pass = rep.eigen_identity < 1e-6 && rep.gram < 1e-6 && rep.alpha_sum > 0.95 * 20.0 &&
                    rep.alpha_sum <= 20.0 && decreasing;
  return {pass, fmt("eigen identity %.1e, Gram %.1e, sum alpha %.6f (required in (19, 20]), root residual %.1e",
                    rep.eigen_identity, rep.gram, rep.alpha_sum, rep.max_residual)};
}

// 6. Operator rows against finite differences.
Outcome operator_rows() {
  double worst = 0.0;
  std::uint64_t seed = 600;
  for (const auto& b : checks::paper_bases()) {
    for (const auto& op : checks::paper_operators()) worst = std::max(worst, checks::check_operator_rows(b, op, 20, seed++));
  }
  return {worst < 1e-5, fmt("4 operators x 3 bases x 20 points: max relative error %.2e", worst)};
}

// 7. Scenario 1a error trend.
Outcome scenario_1a() {
  const auto t0 = Clock::now();
  const ContinualResult r = run_continual_learning(defaults("1a"));
  const double secs = seconds_since(t0);
  bool decreasing = r.checkpoints.size() == 3;
  std::string u, f;
  for (std::size_t i = 0; i < r.checkpoints.size(); ++i) {
    if (i > 0) {
      decreasing = decreasing && r.checkpoints[i].u_error < r.checkpoints[i - 1].u_error &&
                   r.checkpoints[i].f_error < r.checkpoints[i - 1].f_error;
    }
    u += fmt("%s%.2f", i ? "/" : "", r.checkpoints[i].u_error);
    f += fmt("%s%.2f", i ? "/" : "", r.checkpoints[i].f_error);
  }
  const double final_f = r.checkpoints.empty() ? 1e300 : r.checkpoints.back().f_error;
  return {decreasing && final_f < 3.0 * 3.39 && secs < 300.0,
          fmt("u error %% %s, f error %% %s (need strictly decreasing, final f < 10.17), oracle %.1e, %.0f s", u.c_str(),
              f.c_str(), r.oracle_discrepancy, secs)};
}

// 8. Scenario 3 at desk scale: traversal order invariance and the oracle.
Outcome scenario_3_desk() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = defaults("3a");
  const HelmholtzConfig sized = helmholtz_sizes(cfg);
  std::vector<DataBlock> blocks;
  const SourceWrapper record = [&](std::unique_ptr<BlockSource> inner) -> std::unique_ptr<BlockSource> {
    return std::make_unique<Recorder>(std::move(inner), blocks);
  };
  const HelmholtzResult r = run_helmholtz_decomposition(cfg, Traversal::Snake, record);
  const double secs = seconds_since(t0);
  const auto prior = GaussianPrior::isotropic(sized.n, cfg.prior_variance, cfg.epsilon);
  const double ind = rel_moments(posterior(r.final_state, prior.x),
                                 oracle::normal_equations(prior.lambda, prior.mean(), prior.epsilon, blocks));
  const double order = r.order_difference.value_or(1e300);
  return {sized.grid == 90 && sized.n == 81 && sized.subdomains == 3 && order < 1e-6 && ind < 1e-5 &&
              r.oracle_discrepancy < 1e-5 && secs < 600.0,
          fmt("%dx%d grid, n=%ld, %dx%d subdomains: snake vs multi-level %.2e, oracle %.2e (independent %.2e), %.0f s",
              sized.grid, sized.grid, static_cast<long>(sized.n), sized.subdomains, sized.subdomains, order,
              r.oracle_discrepancy, ind, secs)};
}

// 9. Active learning log: every choice is the widest remaining f band.
Outcome active_log() {
  ExperimentConfig cfg = defaults("2b");
  cfg.active.max_sensors = 46;
  cfg.active.threshold = 0.0;
  const ActiveResult r = run_active_learning(cfg);
  const bool logged = !verify_active_log(r).has_value();

  // Re-derive each choice from scratch: posterior covariance of the sensors
  // chosen so far, bands at every remaining candidate, argmax.
  const auto basis = build_brownian_bridge(cfg.stream.n);
  const auto op = OperatorSpec::adv_diff(cfg.stream.diffusion, cfg.stream.kappa);
  const int c = cfg.active.candidates;
  std::vector<Vector> rows;
  for (int i = 0; i < c; ++i) rows.push_back(design_row(basis, op, {i / (c - 1.0), 0.0}));
  const double s2 = cfg.active.sd_f * cfg.active.sd_f;
  Matrix precision = Matrix::Identity(cfg.stream.n, cfg.stream.n) / cfg.prior_variance;
  std::vector<bool> taken(static_cast<std::size_t>(c), false);
  int mismatches = 0, ties = 0;
  for (const auto& it : r.iterations) {
    const Matrix sigma = precision.ldlt().solve(Matrix::Identity(cfg.stream.n, cfg.stream.n));
    std::vector<double> band(static_cast<std::size_t>(c), -1.0);
    double best_band = -1.0;
    for (int i = 0; i < c; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (taken[k]) continue;
      band[k] = 2.0 * std::sqrt(std::max(0.0, rows[k].dot(sigma * rows[k])));
      best_band = std::max(best_band, band[k]);
    }
    // Mirror-symmetric candidates can tie to rounding; any choice within
    // 1e-9 of the maximum is accepted, and such ties are counted.
    const auto chosen = static_cast<std::size_t>(it.chosen);
    if (taken[chosen] || band[chosen] < best_band * (1.0 - 1e-9)) ++mismatches;
    if (std::count_if(band.begin(), band.end(), [&](double b) { return b >= best_band * (1.0 - 1e-9); }) > 1) ++ties;
    taken[static_cast<std::size_t>(it.chosen)] = true;
    precision += rows[static_cast<std::size_t>(it.chosen)] * rows[static_cast<std::size_t>(it.chosen)].transpose() / s2;
  }
  const bool pass = r.iterations.size() == 46 && logged && mismatches == 0;
  return {pass, fmt("%zu sensors; logged bands consistent: %s; independent recomputation mismatches: %d (%d near-ties)",
                    r.iterations.size(), logged ? "yes" : "no", mismatches, ties)};
}

// 10. Same seed, same bytes.
Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "hjr_acceptance_determinism";
  std::filesystem::remove_all(root);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  int compared = 0, differing = 0;
  std::string ids;
  for (const char* id : {"1a", "1c", "2a", "2b"}) {
    const auto cfg = defaults(id);
    const RunSummary a = run_scenario(cfg, root / "a");
    run_scenario(cfg, root / "b");
    for (const auto& f : a.files) {
      if (f.ends_with(".json")) continue;  // manifests record wall time
      ++compared;
      if (slurp(root / "a" / f) != slurp(root / "b" / f)) ++differing;
    }
    ids += ids.empty() ? id : std::string(", ") + id;
  }
  std::filesystem::remove_all(root);
  return {compared > 0 && differing == 0,
          fmt("scenarios %s run twice with seed 7: %d output files compared, %d differ", ids.c_str(), compared,
              differing)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "oracle equivalence", oracle_equivalence},
      {2, "roundtrip and order invariance", roundtrip_and_order},
      {3, "prior tuning", prior_tuning},
      {4, "sigma flow", sigma_flow},
      {5, "KL basis", kl_basis},
      {6, "operator rows", operator_rows},
      {7, "scenario 1a trend", scenario_1a},
      {8, "scenario 3 desk scale", scenario_3_desk},
      {9, "active learning log", active_log},
      {10, "determinism", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    try {
      wanted.insert(std::stoi(argv[i]));
    } catch (const std::exception&) {
      std::cerr << "usage: hjr_acceptance [criterion number ...]\n";
      return 2;
    }
  }
  bool ok = true;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    ok = ok && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << o.detail << std::endl;
  }
  return ok ? 0 : 1;
}
