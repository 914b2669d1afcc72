#pragma once

// Experiment harness: synthetic data, scenario runners and metrics.
//
//   1a  continual learning on a fourth-order BVP (KL basis of exp kernel)
//   1b  continuous tuning of the prior standard deviation
//   1c  outlier removal by backward evolution
//   2a  long noisy stream for an advection-diffusion problem (Brownian bridge basis)
//   2b  uncertainty-driven sensor placement
//   3a  2D Helmholtz, subdomains visited in snake order
//   3b  2D Helmholtz, subdomains visited level by level

#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hjr/bases.hpp"
#include "hjr/riccati.hpp"

namespace hjr {

// ---------------------------------------------------------------- RNG

/// mt19937_64 with portable uniform and Box-Muller normal draws, so streams
/// are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  /// Independent stream derived from (seed, id) with splitmix64.
  static Rng stream(std::uint64_t seed, std::uint64_t id);

  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();   // N(0, 1)

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------- configs

struct BvpConfig {
  Eigen::Index n = 30;
  double ell = 0.05;
  double half_width = 10.0;
  // "mapped": [0, 1] is stretched onto [-a, a]; "embedded": t is used as the
  // kernel coordinate directly, so [0, 1] is a small piece of [-a, a].
  std::string kl_domain = "embedded";
  double kappa = 1e-4;
  double beta = 0.01;
  double sd_u_boundary = 0.01;
  double sd_du_boundary = 0.001;
  double sd_f = 0.2;
  double noise_scale = 1.0;  // multiplies every noise draw; 0 gives exact data
  int f_count = 201;
  int eval_points = 1001;
  double h = 5e-5;
  double h_boundary = 1e-2;
  std::vector<int> checkpoints{101, 151, 201};
};

struct TuningSegment {
  double from = 1.0;
  double to = 1.0;
  double h = 1e-5;  // step in precision time 1 / sigma^2
};

struct TuningConfig {
  int train_f_count = 41;
  int validation_count = 10;
  std::vector<TuningSegment> schedule{
      {1.0, 0.5, 1e-5}, {1.0, 2.0, 1e-5}, {2.0, 5.0, 1e-6}, {5.0, 10.0, 1e-7}, {10.0, 20.0, 1e-7}};
  int emit_stride = 100;
  std::vector<double> slices{0.25, 0.5, 0.75};
};

struct OutlierConfig {
  std::vector<int> indices{60, 140};  // positions in the f stream
  std::vector<double> offsets_sd{10.0, -10.0};
  double h_remove = 1e-5;
};

struct StreamConfig {
  Eigen::Index n = 50;
  double diffusion = 1e-3;
  double kappa = 1.0;
  double sd_f = 2.0;
  long long total = 100000;  // before scaling
  std::vector<long long> checkpoints{1000, 5000, 100000};
  double h = 0.005;
  int eval_points = 1001;
};

struct ActiveConfig {
  int candidates = 101;
  double sd_f = 0.1;
  double h = 1e-2;
  double threshold = 0.5;
  int max_sensors = 0;  // 0 = until the threshold or the pool runs out
};

struct HelmholtzConfig {
  int grid = 450;        // points per side including the boundary, before scaling
  Eigen::Index n = 81;   // desk default; 225 at paper scale
  int subdomains = 3;    // per side; 7 at paper scale
  double length = 6.283185307179586;
  double kappa2 = 1.0;
  double sd_f = 0.5;
  double h = 2e-4;
  double h_paper = 2e-6;
  bool compare_orders = true;
};

struct ExperimentConfig {
  std::string scenario;
  std::uint64_t seed = 7;
  double epsilon = 1.0;
  double prior_variance = 1.0;
  double scale = 0.2;        // desk-scale factor for 2a stream length and scenario 3 grid
  bool paper_scale = false;

  BvpConfig bvp;
  TuningConfig tuning;
  OutlierConfig outlier;
  StreamConfig stream;
  ActiveConfig active;
  HelmholtzConfig helmholtz;

  /// The nominal RK4 step of this scenario.
  double h() const;
  /// Scenario-specific keys for output headers and manifests.
  nlohmann::json echo() const;
  /// Throws Error(Config) on invalid values.
  void validate() const;
};

bool is_scenario(std::string_view id);
const std::vector<std::string>& scenario_ids();

/// Defaults for `scenario`, overlaid with `doc[scenario]` when present.
ExperimentConfig load_config(const nlohmann::json& doc, const std::string& scenario);
ExperimentConfig load_config_file(const std::filesystem::path& path, const std::string& scenario);
nlohmann::json default_config_document();

/// Effective stream length and Helmholtz sizes after desk / paper scaling.
long long stream_length(const ExperimentConfig& cfg);
std::vector<long long> stream_checkpoints(const ExperimentConfig& cfg);
HelmholtzConfig helmholtz_sizes(const ExperimentConfig& cfg);

// ---------------------------------------------------------------- exact solutions

namespace exact {
/// u(t) = exp(-2t) sin(15t) and its derivatives of order 0..4.
double bvp_u(double t, int order = 0);
double bvp_f(double t, double kappa, double beta);
/// u(x) = sin(pi x) exp(-x) and its derivatives of order 0..2.
double stream_u(double x, int order = 0);
double stream_f(double x, double diffusion, double kappa);
double helmholtz_f(double x, double y);
double helmholtz_u(double x, double y, double kappa2);
}  // namespace exact

// ---------------------------------------------------------------- data

struct BvpData {
  std::vector<DataBlock> boundary;  // u(0), u(T), u'(0), u'(T)
  std::vector<DataBlock> f;         // f stream in tau order
  std::vector<double> f_tau;
};

/// Boundary and f blocks for the BVP. `f_count` equispaced points on [0, 1].
BvpData synth_bvp_data(const ExperimentConfig& cfg, const BasisFamily& basis, int f_count,
                       std::uint64_t stream_id = 2);

/// Source of blocks for streaming runs. Blocks are handed out one at a time
/// and the runner drops each before asking for the next.
class BlockSource {
 public:
  virtual ~BlockSource() = default;
  virtual std::shared_ptr<const DataBlock> next() = 0;
};

using SourceWrapper = std::function<std::unique_ptr<BlockSource>(std::unique_ptr<BlockSource>)>;

// ---------------------------------------------------------------- metrics

struct PredictionGrid {
  std::vector<Point> points;
  Vector u_mean, f_mean;
  Vector u_band, f_band;  // 2 * posterior standard deviation
};

/// Predicted means and bands at `points`, evaluated in chunks without forming
/// the full covariance between points.
PredictionGrid prediction_grid(const RiccatiState& state, const BasisFamily& basis,
                               const OperatorSpec& op, std::span<const Point> points,
                               const Vector& x);

/// 100 * ||pred - exact|| / ||exact|| with trapezoid weights on a uniform 1D grid.
double relative_l2_error(std::span<const double> predicted, std::span<const double> exact);
/// Same with tensor trapezoid weights on an nx-by-ny row-major grid (x fastest).
double relative_l2_error_2d(std::span<const double> predicted, std::span<const double> exact,
                            std::size_t nx, std::size_t ny);

/// Running precision and linear term of the closed form, so streamed data can
/// be checked without being retained.
class OracleAccumulator {
 public:
  explicit OracleAccumulator(const GaussianPrior& prior);
  void add(const DataBlock& block);
  PosteriorSummary posterior() const;

 private:
  GaussianPrior prior_;
  Matrix precision_;
  Vector linear_;
};

/// max |a - b| / max |b| over all entries of mu and sigma.
double relative_discrepancy(const PosteriorSummary& got, const PosteriorSummary& want);

// ---------------------------------------------------------------- results

struct CheckpointReport {
  long long count = 0;
  double u_error = 0.0;
  double f_error = 0.0;
  double mean_u_band = 0.0;
  double mean_f_band = 0.0;
  PredictionGrid grid;
  std::vector<double> u_exact, f_exact;
};

struct ContinualResult {
  std::vector<CheckpointReport> checkpoints;
  RiccatiState final_state;
  double oracle_discrepancy = 0.0;
};

struct FlowRow {
  int segment = 0;
  std::size_t step = 0;
  double sigma = 0.0;
  double validation_error = 0.0;
  std::vector<double> u_slices;
};

struct FlowCheck {
  double sigma = 0.0;
  double discrepancy = 0.0;  // against the closed form with Lambda = sigma^2 I
};

struct TuningResult {
  std::vector<FlowRow> flow;
  std::vector<FlowCheck> checks;  // baseline plus every segment endpoint
  double baseline_validation_error = 0.0;
  RiccatiState final_state;
};

struct OutlierResult {
  std::vector<CheckpointReport> stages;  // baseline, after first, after second removal
  RiccatiState final_state;
  double oracle_discrepancy = 0.0;
  double order_difference = 0.0;  // removal order A,B vs B,A
};

struct ActiveIteration {
  int iteration = 0;
  int chosen = -1;
  double x = 0.0;
  double band_before = 0.0;
  double band_after = 0.0;
  double u_error = 0.0;
  double f_error = 0.0;
  double mean_u_band = 0.0;
  std::vector<double> f_bands;      // at every candidate, before the choice
  std::vector<bool> available;      // pool membership before the choice
};

struct ActiveResult {
  std::vector<ActiveIteration> iterations;
  std::string stop_reason;
  RiccatiState final_state;
  double oracle_discrepancy = 0.0;
};

/// Returns the first iteration whose logged choice is not the argmax of the
/// logged bands over available candidates (lowest index on ties), or nullopt.
std::optional<int> verify_active_log(const ActiveResult& result);

enum class Traversal { Snake, MultiLevel };

/// Subdomain visiting order as (row, col) with row 0 at the bottom (small y).
std::vector<std::pair<int, int>> traversal_order(int per_side, Traversal kind);

struct SubdomainError {
  int visited = 0;
  int row = 0, col = 0;
  double mean_abs_u = 0.0, max_abs_u = 0.0;
  double mean_abs_f = 0.0, max_abs_f = 0.0;
};

struct HelmholtzProgress {
  int visited = 0;
  int row = 0, col = 0;
  long long rows_in_block = 0;
  double u_error = 0.0, f_error = 0.0;
  double mean_u_band = 0.0;
};

struct HelmholtzResult {
  Traversal order = Traversal::Snake;
  std::vector<HelmholtzProgress> progress;
  std::vector<SubdomainError> subdomain_errors;
  PredictionGrid final_grid;
  std::vector<double> u_exact, f_exact;
  std::size_t grid_side = 0;
  RiccatiState final_state;
  double oracle_discrepancy = 0.0;
  std::optional<double> order_difference;  // max |mu| / |Sigma| difference to the other order
};

// ---------------------------------------------------------------- runners

ContinualResult run_continual_learning(const ExperimentConfig& cfg);
TuningResult run_hyperparameter_tuning(const ExperimentConfig& cfg);
OutlierResult run_outlier_removal(const ExperimentConfig& cfg);
ContinualResult run_bigdata_stream(const ExperimentConfig& cfg, const SourceWrapper& wrap = {});
ActiveResult run_active_learning(const ExperimentConfig& cfg);
HelmholtzResult run_helmholtz_decomposition(const ExperimentConfig& cfg, Traversal order,
                                            const SourceWrapper& wrap = {});

// ---------------------------------------------------------------- output

struct RunSummary {
  nlohmann::json metrics;
  std::vector<std::string> files;
  bool verified = true;  // oracle gates passed
  std::string failure;
};

/// Runs `cfg.scenario`, writes `<scenario>_*.csv`, the final state and a
/// manifest into `out_dir`.
RunSummary run_scenario(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Relative tolerance of the built-in oracle gate.
inline constexpr double kOracleGate = 1e-5;

}  // namespace hjr
