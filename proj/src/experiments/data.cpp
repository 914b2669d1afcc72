#include <cmath>
#include <numbers>

#include "hjr/error.hpp"
#include "hjr/experiments.hpp"

namespace hjr {

namespace {
constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

Rng Rng::stream(std::uint64_t seed, std::uint64_t id) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(id + 0x5851F42D4C957F2DULL)));
}

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * kPi * u2);
}

namespace exact {

// With z = -2 + 15i, u = Im(exp(z t)) and u^(k) = Im(z^k exp(z t)):
//   z^1 = -2 + 15i, z^2 = -221 - 60i, z^3 = 1342 - 3195i, z^4 = 45241 + 26520i.
double bvp_u(double t, int order) {
  static constexpr double re[5] = {1.0, -2.0, -221.0, 1342.0, 45241.0};
  static constexpr double im[5] = {0.0, 15.0, -60.0, -3195.0, 26520.0};
  if (order < 0 || order > 4) throw Error(ErrorCode::InvalidArgument, "exact::bvp_u", "order must be 0..4");
  const double e = std::exp(-2.0 * t), s = std::sin(15.0 * t), c = std::cos(15.0 * t);
  return e * (re[order] * s + im[order] * c);
}

double bvp_f(double t, double kappa, double beta) {
  return kappa * bvp_u(t, 4) + beta * bvp_u(t, 2) + bvp_u(t, 0);
}

double stream_u(double x, int order) {
  const double e = std::exp(-x), s = std::sin(kPi * x), c = std::cos(kPi * x);
  switch (order) {
    case 0: return s * e;
    case 1: return e * (kPi * c - s);
    case 2: return e * ((1.0 - kPi * kPi) * s - 2.0 * kPi * c);
  }
  throw Error(ErrorCode::InvalidArgument, "exact::stream_u", "order must be 0..2");
}

double stream_f(double x, double diffusion, double kappa) {
  return diffusion * stream_u(x, 2) + kappa * stream_u(x, 1);
}

double helmholtz_f(double x, double y) {
  return std::sin(6 * x) * std::sin(4 * y) - 0.8 * std::sin(5 * x) * std::sin(7 * y);
}

double helmholtz_u(double x, double y, double kappa2) {
  return std::sin(6 * x) * std::sin(4 * y) / (kappa2 + 52.0) -
         0.8 * std::sin(5 * x) * std::sin(7 * y) / (kappa2 + 74.0);
}

}  // namespace exact

BvpData synth_bvp_data(const ExperimentConfig& cfg, const BasisFamily& basis, int f_count,
                       std::uint64_t stream_id) {
  const auto& b = cfg.bvp;
  const auto id = OperatorSpec::identity();
  const auto d1 = OperatorSpec::derivative1();
  const auto op = OperatorSpec::bvp4(b.kappa, b.beta);

  auto single = [&](const OperatorSpec& o, double t, double value, double sd) {
    DataBlock blk;
    blk.phi = design_row(basis, o, {t, 0.0}).transpose();
    blk.y = Vector::Constant(1, value);
    blk.sigma2 = sd * sd;
    return blk;
  };

  BvpData data;
  // Boundary noise comes from its own stream so every scenario sees the same boundary data.
  Rng brng = Rng::stream(cfg.seed, 1);
  const double T = 1.0;
  data.boundary.push_back(single(id, 0.0, exact::bvp_u(0.0) + b.noise_scale * b.sd_u_boundary * brng.normal(),
                                 b.sd_u_boundary));
  data.boundary.push_back(single(id, T, exact::bvp_u(T) + b.noise_scale * b.sd_u_boundary * brng.normal(),
                                 b.sd_u_boundary));
  data.boundary.push_back(single(d1, 0.0, exact::bvp_u(0.0, 1) + b.noise_scale * b.sd_du_boundary * brng.normal(),
                                 b.sd_du_boundary));
  data.boundary.push_back(single(d1, T, exact::bvp_u(T, 1) + b.noise_scale * b.sd_du_boundary * brng.normal(),
                                 b.sd_du_boundary));

  Rng frng = Rng::stream(cfg.seed, stream_id);
  for (int i = 0; i < f_count; ++i) {
    const double t = T * i / (f_count - 1);
    const double value = exact::bvp_f(t, b.kappa, b.beta) + b.noise_scale * b.sd_f * frng.normal();
    data.f.push_back(single(op, t, value, b.sd_f));
    data.f_tau.push_back(t);
  }
  return data;
}

}  // namespace hjr
