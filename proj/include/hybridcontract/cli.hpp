#pragma once

// Command implementations behind the hybridcontract tool: simulate, jacobian,
// certify, distance. Configuration merges built-in defaults, an optional TOML
// file, and command-line overrides (strongest). All outputs are deterministic
// for a fixed config and seed: byte-identical JSON/CSV, no wall-clock values.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hybridcontract/certify.hpp"
#include "hybridcontract/errors.hpp"
#include "hybridcontract/hybrid_system.hpp"
#include "hybridcontract/integrate.hpp"
#include "hybridcontract/metric.hpp"
#include "hybridcontract/models.hpp"
#include "hybridcontract/toml_lite.hpp"
#include "hybridcontract/variational.hpp"
#include "hybridcontract/version.hpp"

namespace hybridcontract::cli {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// logging, HYBRIDCONTRACT_LOG in {error, warn, info, debug}

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel log_threshold() {
  static const LogLevel level = [] {
    const char* env = std::getenv("HYBRIDCONTRACT_LOG");
    const std::string v = env ? env : "warn";
    if (v == "error") return LogLevel::Error;
    if (v == "warn") return LogLevel::Warn;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    std::fprintf(stderr,
                 "hybridcontract: unknown HYBRIDCONTRACT_LOG value '%s', "
                 "using 'warn'\n",
                 v.c_str());
    return LogLevel::Warn;
  }();
  return level;
}

inline void log(LogLevel level, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (level <= log_threshold())
    std::fprintf(stderr, "hybridcontract [%s] %s\n",
                 names[static_cast<int>(level)], msg.c_str());
}

// ---------------------------------------------------------------------------
// run configuration

struct RunConfig {
  std::string command;
  std::string model = "example1";
  std::string mode;             // empty: model default
  std::vector<double> x0;       // empty: model default
  double t0 = 0.0;
  double t_end = 10.0;
  int samples = 200;            // trajectory grid intervals
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output_dir = "out";
  std::string format = "csv";   // trajectory table format: csv | json
  IntegratorOptions integrator;
  std::map<std::string, double> model_params;

  // jacobian
  double fd_step = 0.0;         // 0: step chosen from the state magnitude

  // certify
  int samples_per_mode = 10000;
  int guard_samples = 256;
  int time_samples = 32;
  double dwell_min = 0.0;
  double dwell_max = std::numeric_limits<double>::infinity();
  int pairs = 3;
  int grid = 25;
  double horizon = -1.0;        // <0: use t_end
  double tol_env = 1e-3;

  // distance
  std::vector<double> ax, bx;
  std::string amode, bmode;     // empty: model default
  bool series = false;
  int max_hops = 2;
  int multistarts = 8;
};

inline RunConfig config_from_toml(const TomlTable& t) {
  RunConfig c;
  c.model = t.get_string("model", c.model);
  c.mode = t.get_string("mode", c.mode);
  c.x0 = t.get_number_array("x0", c.x0);
  c.t0 = t.get_double("t0", c.t0);
  c.t_end = t.get_double("t_end", c.t_end);
  c.samples = static_cast<int>(t.get_integer("samples", c.samples));
  c.seed = static_cast<std::uint64_t>(t.get_integer("seed", 0));
  c.threads = static_cast<int>(t.get_integer("threads", c.threads));
  c.output_dir = t.get_string("output_dir", c.output_dir);
  c.format = t.get_string("format", c.format);

  IntegratorOptions& o = c.integrator;
  o.rel_tol = t.get_double("integrator.rel_tol", o.rel_tol);
  o.abs_tol = t.get_double("integrator.abs_tol", o.abs_tol);
  o.max_step = t.get_double("integrator.max_step", o.max_step);
  o.event_tol = t.get_double("integrator.event_tol", o.event_tol);
  o.max_events = t.get_integer("integrator.max_events", o.max_events);
  o.min_dwell_warn =
      t.get_double("integrator.min_dwell_warn", o.min_dwell_warn);
  o.transversality_eps =
      t.get_double("integrator.transversality_eps", o.transversality_eps);

  for (const std::string& k : t.keys_in("model_params"))
    c.model_params[k] = t.get_double("model_params." + k, 0.0);

  c.fd_step = t.get_double("jacobian.fd_step", c.fd_step);

  c.samples_per_mode = static_cast<int>(
      t.get_integer("certify.samples_per_mode", c.samples_per_mode));
  c.guard_samples =
      static_cast<int>(t.get_integer("certify.guard_samples", c.guard_samples));
  c.time_samples =
      static_cast<int>(t.get_integer("certify.time_samples", c.time_samples));
  c.dwell_min = t.get_double("certify.dwell_min", c.dwell_min);
  c.dwell_max = t.get_double("certify.dwell_max", c.dwell_max);
  c.pairs = static_cast<int>(t.get_integer("certify.pairs", c.pairs));
  c.grid = static_cast<int>(t.get_integer("certify.grid", c.grid));
  c.horizon = t.get_double("certify.horizon", c.horizon);
  c.tol_env = t.get_double("certify.tol_env", c.tol_env);

  c.ax = t.get_number_array("distance.a", c.ax);
  c.bx = t.get_number_array("distance.b", c.bx);
  c.amode = t.get_string("distance.amode", c.amode);
  c.bmode = t.get_string("distance.bmode", c.bmode);
  c.series = t.get_bool("distance.series", c.series);
  c.max_hops = static_cast<int>(t.get_integer("distance.max_hops", c.max_hops));
  c.multistarts =
      static_cast<int>(t.get_integer("distance.multistarts", c.multistarts));
  c.grid = static_cast<int>(t.get_integer("distance.grid", c.grid));
  c.horizon = t.get_double("distance.horizon", c.horizon);

  const std::vector<std::string> leftover = t.unconsumed();
  if (!leftover.empty()) {
    std::string msg = "unknown config key(s):";
    for (const std::string& k : leftover) msg += " " + k;
    throw InvalidArgument(msg);
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_toml(TomlTable::parse(ss.str()));
}

// ---------------------------------------------------------------------------
// model registry

struct ModelBundle {
  HybridSystem system;
  RegionSampler sampler;
  HybridState default_state;
  ordered_json params;  // resolved parameter values
};

namespace detail {

class ParamSet {
 public:
  explicit ParamSet(std::map<std::string, double> overrides)
      : overrides_(std::move(overrides)) {}

  void apply(const char* key, double& field) {
    const auto it = overrides_.find(key);
    if (it != overrides_.end()) {
      field = it->second;
      overrides_.erase(it);
    }
    resolved_[key] = field;
  }

  void finish(const std::string& model) const {
    if (overrides_.empty()) return;
    std::string msg = "unknown " + model + " parameter(s):";
    for (const auto& [k, v] : overrides_) msg += " " + k;
    throw InvalidArgument(msg);
  }

  [[nodiscard]] const ordered_json& resolved() const { return resolved_; }

 private:
  std::map<std::string, double> overrides_;
  ordered_json resolved_ = ordered_json::object();
};

}  // namespace detail

inline ModelBundle make_model(const std::string& name,
                              std::map<std::string, double> overrides) {
  detail::ParamSet ps(std::move(overrides));
  if (name == "example1") {
    Example1Params p;
    ps.apply("a_L", p.a_L);
    ps.apply("b_L", p.b_L);
    ps.apply("a_R", p.a_R);
    ps.apply("b_R", p.b_R);
    ps.finish(name);
    HybridSystem sys = build_example1(p);
    Vec x0(2);
    x0 << 2.0, 1.0;
    const ModeId m = *sys.mode_by_name("R");
    return {std::move(sys), example1_sampler(), {m, x0}, ps.resolved()};
  }
  if (name == "pwl") {
    PlanarPwlParams p;
    ps.apply("alpha_plus", p.alpha_plus);
    ps.apply("alpha_minus", p.alpha_minus);
    ps.apply("beta_plus", p.beta_plus);
    ps.apply("beta_minus", p.beta_minus);
    ps.apply("c_plus", p.c_plus);
    ps.apply("c_minus", p.c_minus);
    ps.finish(name);
    HybridSystem sys = build_planar_pwl(p);
    Vec x0(2);
    x0 << 1.0, 0.0;
    const ModeId m = *sys.mode_by_name("plus");
    return {std::move(sys), pwl_sampler(), {m, x0}, ps.resolved()};
  }
  if (name == "traffic") {
    TrafficParams p;
    ps.apply("cap1", p.cap1);
    ps.apply("scale1", p.scale1);
    ps.apply("cap2", p.cap2);
    ps.apply("scale2", p.scale2);
    ps.apply("supply_slope", p.supply_slope);
    ps.apply("x_jam", p.x_jam);
    ps.apply("x2_bar", p.x2_bar);
    ps.apply("x2_under", p.x2_under);
    ps.apply("u0", p.u0);
    ps.apply("u_amp", p.u_amp);
    ps.apply("u_freq", p.u_freq);
    ps.finish(name);
    HybridSystem sys = build_traffic(p);
    Vec x0(2);
    x0 << 20.0, 20.0;
    const ModeId m = *sys.mode_by_name("SCbar");
    return {std::move(sys), traffic_sampler(p), {m, x0}, ps.resolved()};
  }
  throw InvalidArgument("unknown model '" + name +
                        "' (available: example1, pwl, traffic)");
}

inline HybridState resolve_initial_state(const ModelBundle& mb,
                                         const RunConfig& cfg) {
  HybridState s = mb.default_state;
  if (!cfg.mode.empty()) {
    const auto m = mb.system.mode_by_name(cfg.mode);
    if (!m) throw InvalidArgument("unknown mode '" + cfg.mode + "'");
    s.mode = *m;
  }
  if (!cfg.x0.empty()) {
    if (static_cast<int>(cfg.x0.size()) != mb.system.mode(s.mode).dim)
      throw DimensionMismatch("x0 has " + std::to_string(cfg.x0.size()) +
                              " entries, mode " + mb.system.mode(s.mode).name +
                              " needs " +
                              std::to_string(mb.system.mode(s.mode).dim));
    s.x = Eigen::Map<const Vec>(cfg.x0.data(),
                                static_cast<Eigen::Index>(cfg.x0.size()));
  }
  return s;
}

// ---------------------------------------------------------------------------
// serialization helpers

inline ordered_json to_json(const Vec& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline ordered_json to_json(const Row& r) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < r.size(); ++i) a.push_back(r(i));
  return a;
}

inline ordered_json to_json(const Mat& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

// infinity is not representable in JSON; certificates carry dwell_max = inf
inline ordered_json finite_or_string(double v) {
  if (std::isfinite(v)) return ordered_json(v);
  return ordered_json(v > 0 ? "inf" : "-inf");
}

inline ordered_json config_to_json(const RunConfig& c) {
  ordered_json j;
  j["command"] = c.command;
  j["model"] = c.model;
  j["mode"] = c.mode;
  j["x0"] = c.x0;
  j["t0"] = c.t0;
  j["t_end"] = c.t_end;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  j["format"] = c.format;
  ordered_json o;
  o["rel_tol"] = c.integrator.rel_tol;
  o["abs_tol"] = c.integrator.abs_tol;
  o["max_step"] = finite_or_string(c.integrator.max_step);
  o["event_tol"] = c.integrator.event_tol;
  o["max_events"] = c.integrator.max_events;
  o["min_dwell_warn"] = c.integrator.min_dwell_warn;
  o["transversality_eps"] = c.integrator.transversality_eps;
  j["integrator"] = std::move(o);
  return j;
}

inline ordered_json document_header(const RunConfig& cfg,
                                    const ModelBundle& mb) {
  ordered_json doc;
  doc["version"] = kVersion;
  doc["config"] = config_to_json(cfg);
  doc["config"]["model_params"] = mb.params;
  return doc;
}

inline void write_text(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InvalidArgument("short write to '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path,
                       const ordered_json& doc) {
  write_text(path, doc.dump(2) + "\n");
  log(LogLevel::Info, "wrote " + path.string());
}

// %.17g round-trips doubles and keeps CSV output byte-stable
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// simulate

inline std::vector<double> linspace(double a, double b, int intervals) {
  std::vector<double> out;
  const int n = std::max(intervals, 1);
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i)
    out.push_back(a + (b - a) * static_cast<double>(i) / n);
  return out;
}

struct TrajectoryRow {
  double t = 0.0;
  std::string mode;
  Vec x;
};

inline std::vector<TrajectoryRow> trajectory_rows(const HybridSystem& sys,
                                                  const Execution& exec,
                                                  int samples) {
  std::vector<TrajectoryRow> rows;
  for (double t : linspace(exec.t0, exec.t_end, samples)) {
    bool near_event = false;
    for (const ResetEvent& ev : exec.events)
      if (std::abs(t - ev.time) <= 1e-12 * (1.0 + std::abs(ev.time)))
        near_event = true;
    if (near_event) continue;
    const HybridState s = sample(exec, t);
    rows.push_back({t, sys.mode(s.mode).name, s.x});
  }
  for (const ResetEvent& ev : exec.events) {
    rows.push_back({ev.time, sys.mode(ev.from).name, ev.pre_state});
    rows.push_back({ev.time, sys.mode(ev.to).name, ev.post_state});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const TrajectoryRow& a, const TrajectoryRow& b) {
                     return a.t < b.t;
                   });
  return rows;
}

inline void cmd_simulate(const RunConfig& cfg) {
  const ModelBundle mb = make_model(cfg.model, cfg.model_params);
  const HybridState s0 = resolve_initial_state(mb, cfg);
  log(LogLevel::Info, "simulate " + cfg.model + " from mode " +
                          mb.system.mode(s0.mode).name);

  const Execution exec = flow(mb.system, cfg.t0, s0, cfg.t_end,
                              cfg.integrator);
  for (const std::string& w : exec.warnings) log(LogLevel::Warn, w);

  const std::vector<TrajectoryRow> rows =
      trajectory_rows(mb.system, exec, cfg.samples);
  const int dim = mb.system.mode(s0.mode).dim;

  std::filesystem::create_directories(cfg.output_dir);
  const std::filesystem::path dir(cfg.output_dir);

  if (cfg.format == "csv") {
    std::string csv = "t,mode";
    for (int i = 1; i <= dim; ++i) csv += ",x" + std::to_string(i);
    csv += "\n";
    for (const TrajectoryRow& r : rows) {
      csv += fmt(r.t) + "," + r.mode;
      for (Eigen::Index i = 0; i < r.x.size(); ++i) csv += "," + fmt(r.x(i));
      csv += "\n";
    }
    write_text(dir / "trajectory.csv", csv);
    log(LogLevel::Info, "wrote " + (dir / "trajectory.csv").string());
  } else if (cfg.format == "json") {
    ordered_json doc = document_header(cfg, mb);
    ordered_json cols = ordered_json::array();
    cols.push_back("t");
    cols.push_back("mode");
    for (int i = 1; i <= dim; ++i) cols.push_back("x" + std::to_string(i));
    doc["columns"] = std::move(cols);
    ordered_json jrows = ordered_json::array();
    for (const TrajectoryRow& r : rows) {
      ordered_json row = ordered_json::array();
      row.push_back(r.t);
      row.push_back(r.mode);
      for (Eigen::Index i = 0; i < r.x.size(); ++i) row.push_back(r.x(i));
      jrows.push_back(std::move(row));
    }
    doc["rows"] = std::move(jrows);
    write_json(dir / "trajectory.json", doc);
  } else {
    throw InvalidArgument("unknown format '" + cfg.format +
                          "' (available: csv, json)");
  }

  ordered_json doc = document_header(cfg, mb);
  ordered_json inits = ordered_json::array();
  for (int a : exec.initial_resets) inits.push_back(mb.system.arc(a).label);
  doc["initial_resets"] = std::move(inits);
  ordered_json events = ordered_json::array();
  for (const ResetEvent& ev : exec.events) {
    ordered_json e;
    e["time"] = ev.time;
    e["arc"] = mb.system.arc(ev.arc_index).label;
    e["from"] = mb.system.mode(ev.from).name;
    e["to"] = mb.system.mode(ev.to).name;
    e["pre_state"] = to_json(ev.pre_state);
    e["post_state"] = to_json(ev.post_state);
    e["guard_residual"] = ev.guard_residual;
    e["transversality"] = ev.transversality;
    events.push_back(std::move(e));
  }
  doc["events"] = std::move(events);
  doc["warnings"] = exec.warnings;
  const HybridState fin = final_state(exec);
  ordered_json f;
  f["t"] = exec.t_end;
  f["mode"] = mb.system.mode(fin.mode).name;
  f["x"] = to_json(fin.x);
  doc["final"] = std::move(f);
  write_json(dir / "events.json", doc);
}

// ---------------------------------------------------------------------------
// jacobian

inline void cmd_jacobian(const RunConfig& cfg) {
  const ModelBundle mb = make_model(cfg.model, cfg.model_params);
  const HybridState s0 = resolve_initial_state(mb, cfg);
  log(LogLevel::Info, "jacobian " + cfg.model + " over [" + fmt(cfg.t0) +
                          ", " + fmt(cfg.t_end) + "]");

  const FlowJacobianResult var =
      flow_jacobian(mb.system, cfg.t0, s0, cfg.t_end, cfg.integrator);
  const Mat fd = finite_difference_flow_jacobian(
      mb.system, cfg.t0, s0, cfg.t_end, cfg.integrator, cfg.fd_step);
  const double diff = (var.jacobian - fd).cwiseAbs().maxCoeff();

  ordered_json doc = document_header(cfg, mb);
  doc["jacobian"] = to_json(var.jacobian);
  doc["finite_difference"] = to_json(fd);
  doc["max_abs_diff"] = diff;
  ordered_json salts = ordered_json::array();
  for (const SaltationRecord& rec : var.saltations) {
    ordered_json s;
    s["time"] = rec.time;
    s["arc"] = mb.system.arc(rec.arc_index).label;
    s["from"] = mb.system.mode(rec.from).name;
    s["to"] = mb.system.mode(rec.to).name;
    s["point"] = to_json(rec.point);
    s["matrix"] = to_json(rec.matrix);
    s["denominator"] = rec.denom;
    salts.push_back(std::move(s));
  }
  doc["saltations"] = std::move(salts);

  std::filesystem::create_directories(cfg.output_dir);
  write_json(std::filesystem::path(cfg.output_dir) / "jacobian.json", doc);
}

// ---------------------------------------------------------------------------
// certify

inline std::vector<std::pair<HybridState, HybridState>> random_pairs(
    const HybridSystem& sys, const RegionSampler& sampler, ModeId mode,
    int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Box& box = sampler.boxes[static_cast<std::size_t>(mode.index)];
  auto draw = [&] {
    const Eigen::Index dim = box.lo.size();
    Vec x(dim);
    for (long tries = 0; tries < 100000; ++tries) {
      for (Eigen::Index i = 0; i < dim; ++i) {
        std::uniform_real_distribution<double> u(box.lo(i), box.hi(i));
        x(i) = u(rng);
      }
      if (sys.mode(mode).domain_membership == nullptr ||
          sys.mode(mode).domain_membership(x))
        return x;
    }
    throw InvalidArgument("mode box rejection sampling failed; the box "
                          "barely intersects the mode domain");
  };
  std::vector<std::pair<HybridState, HybridState>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    out.push_back({HybridState{mode, draw()}, HybridState{mode, draw()}});
  return out;
}

inline void cmd_certify(const RunConfig& cfg) {
  const ModelBundle mb = make_model(cfg.model, cfg.model_params);
  RegionSampler sampler = mb.sampler;
  sampler.samples_per_mode = cfg.samples_per_mode;
  sampler.guard_samples_per_arc = cfg.guard_samples;
  sampler.time_samples = cfg.time_samples;
  log(LogLevel::Info, "certify " + cfg.model + " with " +
                          std::to_string(cfg.samples_per_mode) +
                          " samples per mode");

  const MeasureBound mbound =
      bound_flow_measure(mb.system, sampler, cfg.threads);
  const SaltationBound sbound =
      bound_saltation_norm(mb.system, sampler, cfg.threads);

  std::vector<NormSpec> norms;
  for (const Mode& m : mb.system.modes()) norms.push_back(m.norm);
  const ContractionCertificate cert =
      make_certificate(mbound.c, sbound.K, cfg.dwell_min, cfg.dwell_max,
                       sbound.exact, norms, mbound.witness, sbound.witness);

  const double horizon = cfg.horizon > 0.0 ? cfg.horizon : cfg.t_end;
  const std::vector<double> t_grid =
      linspace(cfg.t0, horizon, std::max(cfg.grid - 1, 1));
  const auto pairs = random_pairs(mb.system, sampler, mb.default_state.mode,
                                  cfg.pairs, cfg.seed);
  DistanceOptions dopts;
  dopts.max_hops = cfg.max_hops;
  dopts.multistarts = cfg.multistarts;
  const EnvelopeReport report = check_envelope(
      mb.system, cert, pairs, t_grid, cfg.integrator, dopts, cfg.tol_env);

  std::filesystem::create_directories(cfg.output_dir);
  const std::filesystem::path dir(cfg.output_dir);

  ordered_json doc = document_header(cfg, mb);
  doc["c"] = cert.c;
  doc["K"] = cert.K;
  doc["dwell_min"] = cert.dwell_min;
  doc["dwell_max"] = finite_or_string(cert.dwell_max);
  doc["kind"] = to_string(cert.kind);
  doc["contractive"] = cert.contractive();
  doc["exact_norms"] = sbound.exact;
  if (cert.c_witness) {
    ordered_json w;
    w["mode"] = mb.system.mode(cert.c_witness->mode).name;
    w["time"] = cert.c_witness->time;
    w["point"] = to_json(cert.c_witness->point);
    w["value"] = cert.c_witness->value;
    doc["c_witness"] = std::move(w);
  }
  if (cert.K_witness) {
    ordered_json w;
    w["arc"] = mb.system.arc(cert.K_witness->arc_index).label;
    w["time"] = cert.K_witness->time;
    w["point"] = to_json(cert.K_witness->point);
    w["value"] = cert.K_witness->value;
    doc["K_witness"] = std::move(w);
  }
  ordered_json counts;
  counts["measure_samples"] = mbound.samples_evaluated;
  counts["saltation_samples"] = sbound.samples_evaluated;
  counts["skipped_non_transversal"] = sbound.skipped_non_transversal;
  doc["sample_counts"] = std::move(counts);
  doc["arc_notes"] = sbound.arc_notes;
  write_json(dir / "certificate.json", doc);

  ordered_json env = document_header(cfg, mb);
  env["tol_env"] = report.tol_env;
  env["all_pass"] = report.all_pass;
  ordered_json jpairs = ordered_json::array();
  for (const PairEnvelopeResult& r : report.pairs) {
    ordered_json p;
    p["a_mode"] = mb.system.mode(r.xi.mode).name;
    p["a"] = to_json(r.xi.x);
    p["b_mode"] = mb.system.mode(r.zeta.mode).name;
    p["b"] = to_json(r.zeta.x);
    p["d0"] = r.d0;
    p["max_ratio"] = finite_or_string(r.max_ratio);
    p["t_at_max"] = r.t_at_max;
    p["pass"] = r.pass;
    p["possibly_estimator_slack"] = r.possibly_estimator_slack;
    ordered_json series = ordered_json::array();
    for (const auto& [t, d] : r.series) {
      ordered_json pt = ordered_json::array();
      pt.push_back(t);
      pt.push_back(d);
      series.push_back(std::move(pt));
    }
    p["series"] = std::move(series);
    jpairs.push_back(std::move(p));
  }
  env["pairs"] = std::move(jpairs);
  write_json(dir / "envelope.json", env);

  if (!report.all_pass)
    log(LogLevel::Warn, "envelope check failed for at least one pair");
}

// ---------------------------------------------------------------------------
// distance

inline void cmd_distance(const RunConfig& cfg) {
  const ModelBundle mb = make_model(cfg.model, cfg.model_params);
  if (cfg.ax.empty() || cfg.bx.empty())
    throw InvalidArgument("distance needs both endpoint states (a and b)");

  auto mk_state = [&](const std::vector<double>& x, const std::string& mode) {
    HybridState s = mb.default_state;
    if (!mode.empty()) {
      const auto m = mb.system.mode_by_name(mode);
      if (!m) throw InvalidArgument("unknown mode '" + mode + "'");
      s.mode = *m;
    }
    if (static_cast<int>(x.size()) != mb.system.mode(s.mode).dim)
      throw DimensionMismatch("endpoint state has " +
                              std::to_string(x.size()) + " entries, mode " +
                              mb.system.mode(s.mode).name + " needs " +
                              std::to_string(mb.system.mode(s.mode).dim));
    s.x = Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()));
    return s;
  };
  const HybridState a = mk_state(cfg.ax, cfg.amode);
  const HybridState b = mk_state(cfg.bx, cfg.bmode);

  DistanceOptions dopts;
  dopts.max_hops = cfg.max_hops;
  dopts.multistarts = cfg.multistarts;
  const PathEstimate est = intrinsic_distance(mb.system, a, b, dopts);

  ordered_json doc = document_header(cfg, mb);
  doc["a_mode"] = mb.system.mode(a.mode).name;
  doc["a"] = to_json(a.x);
  doc["b_mode"] = mb.system.mode(b.mode).name;
  doc["b"] = to_json(b.x);
  doc["distance"] = est.total_length;
  doc["reversed"] = est.reversed;
  ordered_json hops = ordered_json::array();
  for (const PathHop& h : est.hops) {
    ordered_json jh;
    jh["mode"] = mb.system.mode(h.mode).name;
    jh["start"] = to_json(h.start);
    jh["end"] = to_json(h.end);
    jh["length"] = h.length;
    hops.push_back(std::move(jh));
  }
  doc["hops"] = std::move(hops);
  ordered_json jumps = ordered_json::array();
  for (const PathJump& j : est.jumps) {
    ordered_json jj;
    jj["arc"] = mb.system.arc(j.arc_index).label;
    jj["guard_point"] = to_json(j.guard_point);
    jumps.push_back(std::move(jj));
  }
  doc["jumps"] = std::move(jumps);

  if (cfg.series) {
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : cfg.t_end;
    const std::vector<double> t_grid =
        linspace(cfg.t0, horizon, std::max(cfg.grid - 1, 1));
    const auto series = divergence_series(mb.system, a, b, t_grid,
                                          cfg.integrator, dopts, cfg.t0);
    ordered_json js = ordered_json::array();
    for (const auto& [t, d] : series) {
      ordered_json pt = ordered_json::array();
      pt.push_back(t);
      pt.push_back(d);
      js.push_back(std::move(pt));
    }
    doc["series"] = std::move(js);
  }

  std::filesystem::create_directories(cfg.output_dir);
  write_json(std::filesystem::path(cfg.output_dir) / "distance.json", doc);
}

// ---------------------------------------------------------------------------

inline void run_command(const RunConfig& cfg) {
  if (cfg.command == "simulate") return cmd_simulate(cfg);
  if (cfg.command == "jacobian") return cmd_jacobian(cfg);
  if (cfg.command == "certify") return cmd_certify(cfg);
  if (cfg.command == "distance") return cmd_distance(cfg);
  throw InvalidArgument("unknown command '" + cfg.command + "'");
}

}  // namespace hybridcontract::cli
