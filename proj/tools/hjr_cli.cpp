// hjr: experiment runner and checkpoint tool.
//
//   hjr run <scenario> [--config PATH] [--out DIR] [--seed N] [--h X] [--scale F] [--paper-scale]
//   hjr oracle-check --config PATH [--tol X]
//   hjr state <op> ...
//
// Exit codes: 0 success, 1 usage or config, 2 numerical failure, 3 verification failure.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "hjr/error.hpp"
#include "hjr/experiments.hpp"
#include "hjr/prior_ops.hpp"
#include "hjr/riccati.hpp"
#include "hjr/state_io.hpp"

namespace {

using nlohmann::json;
using hjr::Error;
using hjr::ErrorCode;
using hjr::Matrix;
using hjr::Vector;

constexpr int kOk = 0, kUsage = 1, kNumerical = 2, kVerification = 3;

// ---------------------------------------------------------------- JSON inputs

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "read_json", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, "read_json", path + ": " + e.what());
  }
}

Vector to_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::Config, "read_json", what + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::Config, "read_json", what + " must hold numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix to_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::Config, "read_json", what + " must be a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw Error(ErrorCode::Config, "read_json", what + " rows must have equal length");
    }
    m.row(static_cast<Eigen::Index>(i)) = to_vector(j[i], what).transpose();
  }
  return m;
}

double number(const json& j, const char* key, std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw Error(ErrorCode::Config, "read_json", std::string("missing '") + key + "'");
  }
  if (!j[key].is_number()) throw Error(ErrorCode::Config, "read_json", std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

/// {"lambda": [[..]] | "variance": v, "n": n, "x": [..], "epsilon": e}
hjr::GaussianPrior to_prior(const json& j) {
  const double eps = number(j, "epsilon", 1.0);
  hjr::GaussianPrior p;
  if (j.contains("lambda")) {
    p.lambda = to_matrix(j["lambda"], "prior.lambda");
    p.epsilon = eps;
    p.x = j.contains("x") ? to_vector(j["x"], "prior.x") : Vector::Zero(p.lambda.rows());
  } else {
    p = hjr::GaussianPrior::isotropic(static_cast<Eigen::Index>(number(j, "n")), number(j, "variance", 1.0), eps);
    if (j.contains("x")) p.x = to_vector(j["x"], "prior.x");
  }
  hjr::validate_prior(p, "read prior");
  return p;
}

/// {"phi": [[..]], "y": [..], "sigma2": s}
hjr::DataBlock to_block(const json& j) {
  hjr::DataBlock b;
  b.phi = to_matrix(j.at("phi"), "block.phi");
  b.y = to_vector(j.at("y"), "block.y");
  b.sigma2 = number(j, "sigma2", 1.0);
  return b;
}

// ---------------------------------------------------------------- run

void apply_h(hjr::ExperimentConfig& cfg, double h) {
  const std::string& s = cfg.scenario;
  if (s == "1a") cfg.bvp.h = h;
  else if (s == "1b") for (auto& seg : cfg.tuning.schedule) seg.h = h;
  else if (s == "1c") cfg.outlier.h_remove = h;
  else if (s == "2a") cfg.stream.h = h;
  else if (s == "2b") cfg.active.h = h;
  else cfg.helmholtz.h = cfg.helmholtz.h_paper = h;
}

struct RunArgs {
  std::string scenario, config, out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> h, scale;
  bool paper_scale = false;
};

int cmd_run(const RunArgs& a) {
  if (!hjr::is_scenario(a.scenario)) {
    std::cerr << "unknown scenario '" << a.scenario << "'; expected one of:";
    for (const auto& id : hjr::scenario_ids()) std::cerr << " " << id;
    std::cerr << "\nusage: hjr run <scenario> [--config PATH] [--out DIR] [--seed N] [--h X] [--scale F] [--paper-scale]\n";
    return kUsage;
  }
  hjr::ExperimentConfig cfg = a.config.empty() ? hjr::load_config(json::object(), a.scenario)
                                               : hjr::load_config_file(a.config, a.scenario);
  if (a.seed) cfg.seed = *a.seed;
  if (a.h) apply_h(cfg, *a.h);
  if (a.scale) cfg.scale = *a.scale;
  if (a.paper_scale) cfg.paper_scale = true;
  cfg.validate();

  const hjr::RunSummary s = hjr::run_scenario(cfg, a.out);
  std::cout << s.metrics.dump(2) << "\n";
  for (const auto& f : s.files) std::cout << "wrote " << (std::filesystem::path(a.out) / f).string() << "\n";
  if (!s.verified) {
    std::cerr << "verification failed: " << s.failure << "\n";
    return kVerification;
  }
  return kOk;
}

// ---------------------------------------------------------------- oracle-check

int cmd_oracle_check(const std::string& path, double tol) {
  const json doc = read_json(path);
  hjr::GaussianPrior prior = to_prior(doc.at("prior"));
  if (doc.contains("epsilon")) prior.epsilon = number(doc, "epsilon");
  const double h = number(doc, "h");
  std::vector<hjr::DataBlock> blocks;
  for (const json& b : doc.value("blocks", json::array())) blocks.push_back(to_block(b));

  hjr::RiccatiState state = hjr::init_state(prior);
  for (const auto& b : blocks) state = hjr::incorporate(state, b, h);
  const hjr::PosteriorSummary got = hjr::posterior(state, prior.x);
  const hjr::PosteriorSummary want = hjr::closed_form_posterior(prior, blocks);

  auto rel = [](const auto& a, const auto& b) {
    const double scale = b.cwiseAbs().maxCoeff();
    const double diff = (a - b).cwiseAbs().maxCoeff();
    return scale > 0.0 ? diff / scale : diff;
  };
  const double dmu = rel(got.mu, want.mu), dsigma = rel(got.sigma, want.sigma);
  std::cout << "blocks=" << blocks.size() << " h=" << hjr::format_double(h) << "\n"
            << "mu_rel_error=" << hjr::format_double(dmu) << "\n"
            << "sigma_rel_error=" << hjr::format_double(dsigma) << "\n";
  if (!(std::max(dmu, dsigma) < tol)) {
    std::cerr << "discrepancy exceeds tolerance " << tol << "\n";
    return kVerification;
  }
  return kOk;
}

// ---------------------------------------------------------------- state

struct StateArgs {
  std::string state, out, prior, block, x, lambda_old, lambda_new;
  double h = 1e-3;
  double sigma2_new = 0.0;
  std::optional<double> alpha;
  bool track_r = false;
};

Vector eval_point(const StateArgs& a, Eigen::Index n) {
  if (a.x.empty()) return Vector::Zero(n);
  Vector x = to_vector(read_json(a.x), "x");
  if (x.size() != n) throw Error(ErrorCode::DimensionMismatch, "state", "x has the wrong length");
  return x;
}

void write_out(const hjr::RiccatiState& s, const StateArgs& a) {
  if (a.out.empty()) throw Error(ErrorCode::Config, "state", "--out is required");
  hjr::save_state(s, a.out);
}

int cmd_state(const std::string& op, const StateArgs& a) {
  if (op == "save") {
    write_out(hjr::init_state(to_prior(read_json(a.prior)), a.track_r), a);
    return kOk;
  }
  const hjr::RiccatiState s = hjr::load_state(a.state);
  if (op == "load") {
    if (!a.out.empty()) hjr::save_state(s, a.out);
    else std::cout << "n=" << s.dim() << " epsilon=" << hjr::format_double(s.epsilon)
                   << " track_r=" << (s.track_r ? 1 : 0) << "\n";
    return kOk;
  }
  if (op == "posterior") {
    const hjr::PosteriorSummary p = hjr::posterior(s, eval_point(a, s.dim()));
    std::cout << "index,mu,sigma_diag\n";
    for (Eigen::Index i = 0; i < s.dim(); ++i) {
      std::cout << i << "," << hjr::format_double(p.mu(i)) << "," << hjr::format_double(p.sigma(i, i)) << "\n";
    }
    return kOk;
  }
  if (op == "incorporate" || op == "retract" || op == "tune-sigma") {
    const hjr::DataBlock b = to_block(read_json(a.block));
    if (op == "incorporate") write_out(hjr::incorporate(s, b, a.h), a);
    else if (op == "retract") write_out(hjr::retract(s, b, a.h), a);
    else write_out(hjr::tune_observation_variance(s, b, a.sigma2_new, a.h), a);
    return kOk;
  }
  // tune-prior
  const Matrix old_l = to_matrix(read_json(a.lambda_old), "lambda_old");
  if (a.alpha) {
    write_out(hjr::scale_prior_covariance(s, old_l, *a.alpha, a.h), a);
    return kOk;
  }
  const hjr::CovarianceRetune rt{old_l, to_matrix(read_json(a.lambda_new), "lambda_new"), std::nullopt};
  write_out(hjr::tune_prior_covariance(s, rt, eval_point(a, s.dim()), a.h), a);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riccati-based Bayesian regression: experiments and checkpoint tools", "hjr"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run an experiment scenario");
  run_cmd->add_option("scenario", run.scenario, "1a, 1b, 1c, 2a, 2b, 3a or 3b")->required();
  run_cmd->add_option("--config", run.config, "JSON config with one object per scenario");
  run_cmd->add_option("--out", run.out, "output directory")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "noise seed");
  run_cmd->add_option("--h", run.h, "RK4 step")->check(CLI::PositiveNumber);
  run_cmd->add_option("--scale", run.scale, "desk-scale factor in (0, 1]")->check(CLI::Range(0.0, 1.0));
  run_cmd->add_flag("--paper-scale", run.paper_scale, "use the full published problem sizes");

  std::string oracle_config;
  double tol = 1e-6;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "compare sequential RK4 with the closed form");
  oracle_cmd->add_option("--config", oracle_config, "JSON with prior, blocks and h")->required();
  oracle_cmd->add_option("--tol", tol, "relative tolerance")->capture_default_str();

  std::string state_op;
  StateArgs st;
  auto* state_cmd = app.add_subcommand("state", "operate on a state checkpoint");
  state_cmd->add_option("op", state_op, "save, load, posterior, incorporate, retract, tune-sigma or tune-prior")
      ->required()
      ->check(CLI::IsMember({"save", "load", "posterior", "incorporate", "retract", "tune-sigma", "tune-prior"}));
  state_cmd->add_option("--state", st.state, "input state file");
  state_cmd->add_option("--out", st.out, "output state file");
  state_cmd->add_option("--prior", st.prior, "prior JSON (save)");
  state_cmd->add_option("--block", st.block, "block JSON");
  state_cmd->add_option("--x", st.x, "evaluation point JSON array");
  state_cmd->add_option("--h", st.h, "RK4 step")->check(CLI::PositiveNumber)->capture_default_str();
  state_cmd->add_option("--sigma2-new", st.sigma2_new, "new observation variance (tune-sigma)");
  state_cmd->add_option("--lambda-old", st.lambda_old, "current prior Lambda JSON (tune-prior)");
  state_cmd->add_option("--lambda-new", st.lambda_new, "new prior Lambda JSON (tune-prior)");
  state_cmd->add_option("--alpha", st.alpha, "scale Lambda by alpha instead of --lambda-new");
  state_cmd->add_flag("--track-r", st.track_r, "track the scalar r (save)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*oracle_cmd) return cmd_oracle_check(oracle_config, tol);
    return cmd_state(state_op, st);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_numerical() ? kNumerical : kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
