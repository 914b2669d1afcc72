#include <cmath>
#include <fstream>

#include "hjr/error.hpp"
#include "hjr/experiments.hpp"

namespace hjr {

using nlohmann::json;

namespace {

const std::vector<std::string> kScenarios{"1a", "1b", "1c", "2a", "2b", "3a", "3b"};

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::Config, "config", what);
}

template <class T>
void read(const json& j, const char* key, T& field, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(where + "." + key + ": " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) config_error("unknown key " + where + "." + key);
  }
}

void read_bvp(const json& j, BvpConfig& c) {
  const std::string w = "bvp";
  reject_unknown(j, {"n", "ell", "half_width", "kl_domain", "kappa", "beta", "sd_u_boundary", "sd_du_boundary", "sd_f",
                     "noise_scale", "f_count", "eval_points", "h", "h_boundary", "checkpoints"},
                 w);
  read(j, "n", c.n, w);
  read(j, "ell", c.ell, w);
  read(j, "half_width", c.half_width, w);
  read(j, "kl_domain", c.kl_domain, w);
  read(j, "kappa", c.kappa, w);
  read(j, "beta", c.beta, w);
  read(j, "sd_u_boundary", c.sd_u_boundary, w);
  read(j, "sd_du_boundary", c.sd_du_boundary, w);
  read(j, "sd_f", c.sd_f, w);
  read(j, "noise_scale", c.noise_scale, w);
  read(j, "f_count", c.f_count, w);
  read(j, "eval_points", c.eval_points, w);
  read(j, "h", c.h, w);
  read(j, "h_boundary", c.h_boundary, w);
  read(j, "checkpoints", c.checkpoints, w);
}

void read_tuning(const json& j, TuningConfig& c) {
  const std::string w = "tuning";
  reject_unknown(j, {"train_f_count", "validation_count", "schedule", "emit_stride", "slices"}, w);
  read(j, "train_f_count", c.train_f_count, w);
  read(j, "validation_count", c.validation_count, w);
  read(j, "emit_stride", c.emit_stride, w);
  read(j, "slices", c.slices, w);
  if (j.contains("schedule")) {
    if (!j["schedule"].is_array()) config_error("tuning.schedule must be an array");
    c.schedule.clear();
    for (const auto& s : j["schedule"]) {
      TuningSegment seg;
      reject_unknown(s, {"from", "to", "h"}, "tuning.schedule[]");
      read(s, "from", seg.from, w);
      read(s, "to", seg.to, w);
      read(s, "h", seg.h, w);
      c.schedule.push_back(seg);
    }
  }
}

void read_outlier(const json& j, OutlierConfig& c) {
  const std::string w = "outlier";
  reject_unknown(j, {"indices", "offsets_sd", "h_remove"}, w);
  read(j, "indices", c.indices, w);
  read(j, "offsets_sd", c.offsets_sd, w);
  read(j, "h_remove", c.h_remove, w);
}

void read_stream(const json& j, StreamConfig& c) {
  const std::string w = "stream";
  reject_unknown(j, {"n", "diffusion", "kappa", "sd_f", "total", "checkpoints", "h", "eval_points"}, w);
  read(j, "n", c.n, w);
  read(j, "diffusion", c.diffusion, w);
  read(j, "kappa", c.kappa, w);
  read(j, "sd_f", c.sd_f, w);
  read(j, "total", c.total, w);
  read(j, "checkpoints", c.checkpoints, w);
  read(j, "h", c.h, w);
  read(j, "eval_points", c.eval_points, w);
}

void read_active(const json& j, ActiveConfig& c) {
  const std::string w = "active";
  reject_unknown(j, {"candidates", "sd_f", "h", "threshold", "max_sensors"}, w);
  read(j, "candidates", c.candidates, w);
  read(j, "sd_f", c.sd_f, w);
  read(j, "h", c.h, w);
  read(j, "threshold", c.threshold, w);
  read(j, "max_sensors", c.max_sensors, w);
}

void read_helmholtz(const json& j, HelmholtzConfig& c) {
  const std::string w = "helmholtz";
  reject_unknown(j, {"grid", "n", "subdomains", "length", "kappa2", "sd_f", "h", "h_paper", "compare_orders"}, w);
  read(j, "grid", c.grid, w);
  read(j, "n", c.n, w);
  read(j, "subdomains", c.subdomains, w);
  read(j, "length", c.length, w);
  read(j, "kappa2", c.kappa2, w);
  read(j, "sd_f", c.sd_f, w);
  read(j, "h", c.h, w);
  read(j, "h_paper", c.h_paper, w);
  read(j, "compare_orders", c.compare_orders, w);
}

json bvp_json(const BvpConfig& c) {
  return {{"n", c.n},
          {"ell", c.ell},
          {"half_width", c.half_width},
          {"kl_domain", c.kl_domain},
          {"kappa", c.kappa},
          {"beta", c.beta},
          {"sd_u_boundary", c.sd_u_boundary},
          {"sd_du_boundary", c.sd_du_boundary},
          {"sd_f", c.sd_f},
          {"noise_scale", c.noise_scale},
          {"f_count", c.f_count},
          {"eval_points", c.eval_points},
          {"h", c.h},
          {"h_boundary", c.h_boundary},
          {"checkpoints", c.checkpoints}};
}

json tuning_json(const TuningConfig& c) {
  json sched = json::array();
  for (const auto& s : c.schedule) sched.push_back({{"from", s.from}, {"to", s.to}, {"h", s.h}});
  return {{"train_f_count", c.train_f_count},
          {"validation_count", c.validation_count},
          {"schedule", sched},
          {"emit_stride", c.emit_stride},
          {"slices", c.slices}};
}

json outlier_json(const OutlierConfig& c) {
  return {{"indices", c.indices}, {"offsets_sd", c.offsets_sd}, {"h_remove", c.h_remove}};
}

json stream_json(const StreamConfig& c) {
  return {{"n", c.n},         {"diffusion", c.diffusion}, {"kappa", c.kappa},
          {"sd_f", c.sd_f},   {"total", c.total},         {"checkpoints", c.checkpoints},
          {"h", c.h},         {"eval_points", c.eval_points}};
}

json active_json(const ActiveConfig& c) {
  return {{"candidates", c.candidates},
          {"sd_f", c.sd_f},
          {"h", c.h},
          {"threshold", c.threshold},
          {"max_sensors", c.max_sensors}};
}

json helmholtz_json(const HelmholtzConfig& c) {
  return {{"grid", c.grid},     {"n", c.n},       {"subdomains", c.subdomains},
          {"length", c.length}, {"kappa2", c.kappa2}, {"sd_f", c.sd_f},
          {"h", c.h},           {"h_paper", c.h_paper}, {"compare_orders", c.compare_orders}};
}

void require(bool ok, const std::string& what) {
  if (!ok) config_error(what);
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace

const std::vector<std::string>& scenario_ids() { return kScenarios; }

bool is_scenario(std::string_view id) {
  for (const auto& s : kScenarios)
    if (s == id) return true;
  return false;
}

double ExperimentConfig::h() const {
  const char s = scenario.empty() ? '?' : scenario[0];
  if (scenario == "1b") return tuning.schedule.empty() ? bvp.h : tuning.schedule.front().h;
  if (scenario == "1c") return outlier.h_remove;
  if (scenario == "2b") return active.h;
  if (s == '1') return bvp.h;
  if (s == '2') return stream.h;
  if (s == '3') return helmholtz_sizes(*this).h;
  return bvp.h;
}

json ExperimentConfig::echo() const {
  json j{{"scenario", scenario},
         {"seed", seed},
         {"epsilon", epsilon},
         {"prior_variance", prior_variance},
         {"scale", scale},
         {"paper_scale", paper_scale}};
  if (scenario[0] == '1') j["bvp"] = bvp_json(bvp);
  if (scenario == "1b") j["tuning"] = tuning_json(tuning);
  if (scenario == "1c") j["outlier"] = outlier_json(outlier);
  if (scenario[0] == '2') j["stream"] = stream_json(stream);
  if (scenario == "2b") j["active"] = active_json(active);
  if (scenario[0] == '3') j["helmholtz"] = helmholtz_json(helmholtz);
  return j;
}

void ExperimentConfig::validate() const {
  require(is_scenario(scenario), "unknown scenario '" + scenario + "'");
  require(positive(epsilon), "epsilon must be positive");
  require(positive(prior_variance), "prior_variance must be positive");
  require(scale > 0.0 && scale <= 1.0, "scale must lie in (0, 1]");

  const char s = scenario[0];
  if (s == '1') {
    const auto& b = bvp;
    require(b.n >= 1, "bvp.n must be at least 1");
    require(b.kl_domain == "mapped" || b.kl_domain == "embedded", "bvp.kl_domain must be mapped or embedded");
    require(positive(b.ell) && positive(b.half_width) && (b.kl_domain == "mapped" || b.half_width >= 1.0),
            "bvp.ell must be positive and an embedded bvp.half_width at least 1");
    require(positive(b.kappa) && std::isfinite(b.beta), "bvp.kappa must be positive");
    require(positive(b.sd_u_boundary) && positive(b.sd_du_boundary) && positive(b.sd_f),
            "bvp standard deviations must be positive");
    require(b.noise_scale >= 0.0 && std::isfinite(b.noise_scale), "bvp.noise_scale must be >= 0");
    require(b.f_count >= 2, "bvp.f_count must be at least 2");
    require(b.eval_points >= 2, "bvp.eval_points must be at least 2");
    require(positive(b.h) && positive(b.h_boundary), "bvp step sizes must be positive");
    for (std::size_t i = 0; i < b.checkpoints.size(); ++i) {
      require(b.checkpoints[i] >= 1 && b.checkpoints[i] <= b.f_count, "bvp.checkpoints out of range");
      require(i == 0 || b.checkpoints[i] > b.checkpoints[i - 1], "bvp.checkpoints must increase");
    }
  }
  if (scenario == "1b") {
    const auto& t = tuning;
    require(t.train_f_count >= 2 && t.validation_count >= 1, "tuning counts too small");
    require(t.emit_stride >= 1, "tuning.emit_stride must be at least 1");
    require(!t.schedule.empty(), "tuning.schedule is empty");
    for (const auto& seg : t.schedule)
      require(positive(seg.from) && positive(seg.to) && positive(seg.h), "tuning.schedule values must be positive");
    for (double x : t.slices) require(x >= 0.0 && x <= 1.0, "tuning.slices must lie in [0, 1]");
  }
  if (scenario == "1c") {
    const auto& o = outlier;
    require(o.indices.size() == 2 && o.offsets_sd.size() == 2, "outlier needs exactly two indices and offsets");
    require(o.indices[0] != o.indices[1], "outlier indices must differ");
    for (int i : o.indices) require(i >= 0 && i < bvp.f_count, "outlier index out of range");
    require(positive(o.h_remove), "outlier.h_remove must be positive");
  }
  if (s == '2') {
    const auto& st = stream;
    require(st.n >= 1, "stream.n must be at least 1");
    require(positive(st.diffusion) && std::isfinite(st.kappa), "stream.diffusion must be positive");
    require(positive(st.sd_f) && positive(st.h), "stream.sd_f and stream.h must be positive");
    require(st.total >= 1, "stream.total must be at least 1");
    require(st.eval_points >= 2, "stream.eval_points must be at least 2");
    for (std::size_t i = 0; i < st.checkpoints.size(); ++i)
      require(st.checkpoints[i] >= 1 && (i == 0 || st.checkpoints[i] > st.checkpoints[i - 1]),
              "stream.checkpoints must be positive and increasing");
  }
  if (scenario == "2b") {
    const auto& a = active;
    require(a.candidates >= 2, "active.candidates must be at least 2");
    require(positive(a.sd_f) && positive(a.h), "active.sd_f and active.h must be positive");
    require(a.threshold >= 0.0, "active.threshold must be >= 0");
    require(a.max_sensors >= 0, "active.max_sensors must be >= 0");
  }
  if (s == '3') {
    const auto& hz = helmholtz;
    require(hz.grid >= 4, "helmholtz.grid must be at least 4");
    require(hz.n >= 1 && hz.subdomains >= 1, "helmholtz.n and helmholtz.subdomains must be positive");
    require(positive(hz.length) && std::isfinite(hz.kappa2), "helmholtz.length must be positive");
    require(positive(hz.sd_f) && positive(hz.h) && positive(hz.h_paper), "helmholtz noise and steps must be positive");
    const auto sized = helmholtz_sizes(*this);
    require(sized.grid - 2 >= sized.subdomains, "helmholtz grid too coarse for the subdomain count");
  }
}

ExperimentConfig load_config(const json& doc, const std::string& scenario) {
  ExperimentConfig cfg;
  cfg.scenario = scenario;
  if (!is_scenario(scenario)) config_error("unknown scenario '" + scenario + "'");
  if (!doc.is_null() && !doc.is_object()) config_error("config document must be an object");
  if (doc.is_object() && doc.contains(scenario)) {
    const json& j = doc.at(scenario);
    reject_unknown(j, {"seed", "epsilon", "prior_variance", "scale", "paper_scale", "bvp", "tuning", "outlier",
                       "stream", "active", "helmholtz"},
                   scenario);
    read(j, "seed", cfg.seed, scenario);
    read(j, "epsilon", cfg.epsilon, scenario);
    read(j, "prior_variance", cfg.prior_variance, scenario);
    read(j, "scale", cfg.scale, scenario);
    read(j, "paper_scale", cfg.paper_scale, scenario);
    if (j.contains("bvp")) read_bvp(j["bvp"], cfg.bvp);
    if (j.contains("tuning")) read_tuning(j["tuning"], cfg.tuning);
    if (j.contains("outlier")) read_outlier(j["outlier"], cfg.outlier);
    if (j.contains("stream")) read_stream(j["stream"], cfg.stream);
    if (j.contains("active")) read_active(j["active"], cfg.active);
    if (j.contains("helmholtz")) read_helmholtz(j["helmholtz"], cfg.helmholtz);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, const std::string& scenario) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "config", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  return load_config(doc, scenario);
}

json default_config_document() {
  json doc = json::object();
  for (const auto& id : kScenarios) {
    ExperimentConfig cfg;
    cfg.scenario = id;
    json j = cfg.echo();
    j.erase("scenario");
    doc[id] = j;
  }
  return doc;
}

long long stream_length(const ExperimentConfig& cfg) {
  if (cfg.paper_scale) return cfg.stream.total;
  return std::max(1LL, std::llround(static_cast<double>(cfg.stream.total) * cfg.scale));
}

std::vector<long long> stream_checkpoints(const ExperimentConfig& cfg) {
  const long long len = stream_length(cfg);
  std::vector<long long> out;
  for (long long c : cfg.stream.checkpoints)
    if (c < len) out.push_back(c);
  out.push_back(len);
  return out;
}

HelmholtzConfig helmholtz_sizes(const ExperimentConfig& cfg) {
  HelmholtzConfig hz = cfg.helmholtz;
  if (cfg.paper_scale) {
    hz.n = 225;
    hz.subdomains = 7;
    hz.h = hz.h_paper;
  } else {
    hz.grid = static_cast<int>(std::lround(hz.grid * cfg.scale));
  }
  return hz;
}

}  // namespace hjr
