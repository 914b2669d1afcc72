#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "hjr/error.hpp"
#include "internal.hpp"

namespace hjr {

using detail::make_prior;

std::vector<std::pair<int, int>> traversal_order(int per_side, Traversal kind) {
  if (per_side < 1) throw Error(ErrorCode::InvalidArgument, "traversal_order", "need at least one subdomain per side");
  std::vector<std::pair<int, int>> out;
  if (kind == Traversal::Snake) {
    for (int r = 0; r < per_side; ++r) {
      for (int k = 0; k < per_side; ++k) out.emplace_back(r, r % 2 == 0 ? k : per_side - 1 - k);
    }
    return out;
  }
  if (per_side % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "traversal_order", "multi-level order needs an odd count per side");
  }
  // Levels by offset parity from the centre: centre, both even, both odd, mixed.
  const int c = per_side / 2;
  auto level = [&](int r, int k) {
    const int dr = std::abs(r - c), dk = std::abs(k - c);
    if (dr == 0 && dk == 0) return 0;
    if (dr % 2 == 0 && dk % 2 == 0) return 1;
    if (dr % 2 == 1 && dk % 2 == 1) return 2;
    return 3;
  };
  for (int lv = 0; lv < 4; ++lv) {
    for (int r = 0; r < per_side; ++r) {
      for (int k = 0; k < per_side; ++k) {
        if (level(r, k) == lv) out.emplace_back(r, k);
      }
    }
  }
  return out;
}

namespace {

struct Grid2d {
  int side = 0;
  double length = 0.0;
  int per_side = 0;
  std::vector<double> coord;
  std::vector<int> cell;  // subdomain index of each coordinate

  Grid2d(int g, double l, int s) : side(g), length(l), per_side(s) {
    for (int i = 0; i < g; ++i) {
      const double x = l * i / (g - 1);
      coord.push_back(x);
      cell.push_back(std::min(s - 1, static_cast<int>(std::floor(s * x / l))));
    }
  }
};

/// Interior grid points of one subdomain per block, in the given visiting order.
class SubdomainSource final : public BlockSource {
 public:
  SubdomainSource(const ExperimentConfig& cfg, const HelmholtzConfig& hz, const Grid2d& grid,
                  std::vector<std::pair<int, int>> order)
      : seed_(cfg.seed), hz_(hz), grid_(grid), order_(std::move(order)),
        basis_(build_sine2d(hz.n, hz.length)), op_(OperatorSpec::helmholtz(hz.kappa2)) {}

  std::shared_ptr<const DataBlock> next() override {
    if (pos_ >= order_.size()) throw Error(ErrorCode::InvalidArgument, "SubdomainSource", "no more subdomains");
    const auto [row, col] = order_[pos_++];
    std::vector<Point> pts;
    for (int j = 1; j < grid_.side - 1; ++j) {
      if (grid_.cell[static_cast<std::size_t>(j)] != row) continue;
      for (int i = 1; i < grid_.side - 1; ++i) {
        if (grid_.cell[static_cast<std::size_t>(i)] == col) pts.push_back({grid_.coord[static_cast<std::size_t>(i)], grid_.coord[static_cast<std::size_t>(j)]});
      }
    }
    Rng rng = Rng::stream(seed_, 100 + static_cast<std::uint64_t>(row * grid_.per_side + col));
    auto blk = std::make_shared<DataBlock>();
    blk->phi = design_matrix(basis_, op_, pts);
    blk->y.resize(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t p = 0; p < pts.size(); ++p) {
      blk->y(static_cast<Eigen::Index>(p)) = exact::helmholtz_f(pts[p].x, pts[p].y) + hz_.sd_f * rng.normal();
    }
    blk->sigma2 = hz_.sd_f * hz_.sd_f;
    return blk;
  }

 private:
  std::uint64_t seed_;
  HelmholtzConfig hz_;
  const Grid2d& grid_;
  std::vector<std::pair<int, int>> order_;
  std::size_t pos_ = 0;
  BasisFamily basis_;
  OperatorSpec op_;
};

struct Evaluation {
  std::vector<Point> points;
  std::vector<double> u_exact, f_exact;
};

Evaluation evaluation_points(const Grid2d& grid, double kappa2) {
  Evaluation e;
  for (int j = 0; j < grid.side; ++j) {
    for (int i = 0; i < grid.side; ++i) {
      const double x = grid.coord[static_cast<std::size_t>(i)], y = grid.coord[static_cast<std::size_t>(j)];
      e.points.push_back({x, y});
      e.u_exact.push_back(exact::helmholtz_u(x, y, kappa2));
      e.f_exact.push_back(exact::helmholtz_f(x, y));
    }
  }
  return e;
}

std::vector<SubdomainError> subdomain_errors(int visited, const PredictionGrid& g, const Evaluation& e,
                                             const Grid2d& grid) {
  const int s = grid.per_side;
  std::vector<SubdomainError> out(static_cast<std::size_t>(s * s));
  std::vector<long long> counts(out.size(), 0);
  for (int j = 0; j < grid.side; ++j) {
    for (int i = 0; i < grid.side; ++i) {
      const auto p = static_cast<std::size_t>(j * grid.side + i);
      const auto c = static_cast<std::size_t>(grid.cell[static_cast<std::size_t>(j)] * s + grid.cell[static_cast<std::size_t>(i)]);
      const double du = std::abs(g.u_mean(static_cast<Eigen::Index>(p)) - e.u_exact[p]);
      const double df = std::abs(g.f_mean(static_cast<Eigen::Index>(p)) - e.f_exact[p]);
      SubdomainError& se = out[c];
      se.mean_abs_u += du;
      se.mean_abs_f += df;
      se.max_abs_u = std::max(se.max_abs_u, du);
      se.max_abs_f = std::max(se.max_abs_f, df);
      ++counts[c];
    }
  }
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c].visited = visited;
    out[c].row = static_cast<int>(c) / s;
    out[c].col = static_cast<int>(c) % s;
    out[c].mean_abs_u /= static_cast<double>(std::max(1LL, counts[c]));
    out[c].mean_abs_f /= static_cast<double>(std::max(1LL, counts[c]));
  }
  return out;
}

}  // namespace

HelmholtzResult run_helmholtz_decomposition(const ExperimentConfig& cfg, Traversal order,
                                            const SourceWrapper& wrap) {
  cfg.validate();
  const HelmholtzConfig hz = helmholtz_sizes(cfg);
  const Grid2d grid(hz.grid, hz.length, hz.subdomains);
  const BasisFamily basis = build_sine2d(hz.n, hz.length);
  const OperatorSpec op = OperatorSpec::helmholtz(hz.kappa2);
  const GaussianPrior prior = make_prior(cfg, hz.n);
  const Evaluation ev = evaluation_points(grid, hz.kappa2);
  const auto side = static_cast<std::size_t>(hz.grid);

  auto run_order = [&](Traversal kind, HelmholtzResult* report) {
    const auto visits = traversal_order(hz.subdomains, kind);
    std::unique_ptr<BlockSource> source = std::make_unique<SubdomainSource>(cfg, hz, grid, visits);
    if (wrap && report) source = wrap(std::move(source));
    OracleAccumulator acc(prior);
    RiccatiState state = init_state(prior);
    for (std::size_t v = 0; v < visits.size(); ++v) {
      std::shared_ptr<const DataBlock> blk = source->next();
      state = incorporate(state, *blk, hz.h);
      acc.add(*blk);
      const long long rows = blk->rows();
      blk.reset();
      if (!report) continue;
      PredictionGrid g = prediction_grid(state, basis, op, ev.points, prior.x);
      HelmholtzProgress pr;
      pr.visited = static_cast<int>(v) + 1;
      pr.row = visits[v].first;
      pr.col = visits[v].second;
      pr.rows_in_block = rows;
      pr.u_error = relative_l2_error_2d({g.u_mean.data(), side * side}, ev.u_exact, side, side);
      pr.f_error = relative_l2_error_2d({g.f_mean.data(), side * side}, ev.f_exact, side, side);
      pr.mean_u_band = g.u_band.mean();
      report->progress.push_back(pr);
      const auto errs = subdomain_errors(pr.visited, g, ev, grid);
      report->subdomain_errors.insert(report->subdomain_errors.end(), errs.begin(), errs.end());
      if (v + 1 == visits.size()) report->final_grid = std::move(g);
    }
    if (report) report->oracle_discrepancy = relative_discrepancy(posterior(state, prior.x), acc.posterior());
    return state;
  };

  HelmholtzResult res;
  res.order = order;
  res.grid_side = side;
  res.u_exact = ev.u_exact;
  res.f_exact = ev.f_exact;
  res.final_state = run_order(order, &res);
  if (hz.compare_orders) {
    const Traversal other = order == Traversal::Snake ? Traversal::MultiLevel : Traversal::Snake;
    const RiccatiState alt = run_order(other, nullptr);
    res.order_difference =
        detail::max_abs_difference(posterior(res.final_state, prior.x), posterior(alt, prior.x));
  }
  return res;
}

}  // namespace hjr
