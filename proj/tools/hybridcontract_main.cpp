// hybridcontract: simulate hybrid executions, differentiate flow maps through
// resets, bound distance between executions, certify contraction.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime/integration error.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "hybridcontract/cli.hpp"

namespace hc = hybridcontract;

namespace {

// CLI flags override TOML values only when given on the command line.
struct Overrides {
  std::string config_path;
  std::string model, mode, output_dir, format, amode, bmode;
  std::vector<double> x0, ax, bx;
  double t0 = 0, t_end = 0, fd_step = 0, dwell_min = 0, dwell_max = 0;
  double horizon = 0, tol_env = 0, rel_tol = 0, abs_tol = 0, max_step = 0;
  double event_tol = 0;
  std::uint64_t seed = 0;
  int samples = 0, threads = 0, samples_per_mode = 0, guard_samples = 0;
  int time_samples = 0, pairs = 0, grid = 0, max_hops = 0, multistarts = 0;
  long max_events = 0;
  bool series = false;
  std::vector<std::string> params;
};

void add_common(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--config", ov.config_path, "TOML config file");
  cmd->add_option("--model", ov.model, "model name: example1, pwl, traffic");
  cmd->add_option("--mode", ov.mode, "initial mode name");
  cmd->add_option("--x0", ov.x0, "initial state components");
  cmd->add_option("--t0", ov.t0, "start time");
  cmd->add_option("--t-end", ov.t_end, "end time");
  cmd->add_option("--seed", ov.seed, "seed for randomized checks");
  cmd->add_option("--threads", ov.threads, "worker threads for bound scans");
  cmd->add_option("--out", ov.output_dir, "output directory");
  cmd->add_option("--rel-tol", ov.rel_tol, "integrator relative tolerance");
  cmd->add_option("--abs-tol", ov.abs_tol, "integrator absolute tolerance");
  cmd->add_option("--max-step", ov.max_step, "integrator max step");
  cmd->add_option("--event-tol", ov.event_tol, "event time tolerance");
  cmd->add_option("--max-events", ov.max_events, "event count limit");
  cmd->add_option("--param", ov.params,
                  "model parameter override name=value (repeatable)");
}

int dispatch(const std::string& command, const Overrides& ov,
             const CLI::App* cmd) {
  hc::cli::RunConfig cfg = hc::cli::load_config(ov.config_path);
  cfg.command = command;

  auto given = [&](const std::string& flag) {
    return cmd->count(flag) > 0;
  };
  if (given("--model")) cfg.model = ov.model;
  if (given("--mode")) cfg.mode = ov.mode;
  if (given("--x0")) cfg.x0 = ov.x0;
  if (given("--t0")) cfg.t0 = ov.t0;
  if (given("--t-end")) cfg.t_end = ov.t_end;
  if (given("--seed")) cfg.seed = ov.seed;
  if (given("--threads")) cfg.threads = ov.threads;
  if (given("--out")) cfg.output_dir = ov.output_dir;
  if (given("--rel-tol")) cfg.integrator.rel_tol = ov.rel_tol;
  if (given("--abs-tol")) cfg.integrator.abs_tol = ov.abs_tol;
  if (given("--max-step")) cfg.integrator.max_step = ov.max_step;
  if (given("--event-tol")) cfg.integrator.event_tol = ov.event_tol;
  if (given("--max-events")) cfg.integrator.max_events = ov.max_events;

  for (const std::string& p : ov.params) {
    const std::size_t eq = p.find('=');
    if (eq == std::string::npos)
      throw hc::InvalidArgument("--param expects name=value, got '" + p + "'");
    char* end = nullptr;
    const std::string raw = p.substr(eq + 1);
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0')
      throw hc::InvalidArgument("--param value '" + raw + "' is not a number");
    cfg.model_params[p.substr(0, eq)] = v;
  }

  if (command == "simulate") {
    if (given("--samples")) cfg.samples = ov.samples;
    if (given("--format")) cfg.format = ov.format;
  } else if (command == "jacobian") {
    if (given("--fd-step")) cfg.fd_step = ov.fd_step;
  } else if (command == "certify") {
    if (given("--samples-per-mode")) cfg.samples_per_mode = ov.samples_per_mode;
    if (given("--guard-samples")) cfg.guard_samples = ov.guard_samples;
    if (given("--time-samples")) cfg.time_samples = ov.time_samples;
    if (given("--dwell-min")) cfg.dwell_min = ov.dwell_min;
    if (given("--dwell-max")) cfg.dwell_max = ov.dwell_max;
    if (given("--pairs")) cfg.pairs = ov.pairs;
    if (given("--grid")) cfg.grid = ov.grid;
    if (given("--horizon")) cfg.horizon = ov.horizon;
    if (given("--tol-env")) cfg.tol_env = ov.tol_env;
    if (given("--max-hops")) cfg.max_hops = ov.max_hops;
    if (given("--multistarts")) cfg.multistarts = ov.multistarts;
  } else if (command == "distance") {
    if (given("--a")) cfg.ax = ov.ax;
    if (given("--b")) cfg.bx = ov.bx;
    if (given("--a-mode")) cfg.amode = ov.amode;
    if (given("--b-mode")) cfg.bmode = ov.bmode;
    if (given("--series")) cfg.series = ov.series;
    if (given("--grid")) cfg.grid = ov.grid;
    if (given("--horizon")) cfg.horizon = ov.horizon;
    if (given("--max-hops")) cfg.max_hops = ov.max_hops;
    if (given("--multistarts")) cfg.multistarts = ov.multistarts;
  }

  hc::cli::run_command(cfg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid system simulation, sensitivity, and contraction "
               "certification"};
  app.require_subcommand(1);

  Overrides ov;

  CLI::App* sim = app.add_subcommand("simulate", "integrate one execution");
  add_common(sim, ov);
  sim->add_option("--samples", ov.samples, "trajectory grid intervals");
  sim->add_option("--format", ov.format, "trajectory table format: csv, json");

  CLI::App* jac = app.add_subcommand(
      "jacobian", "flow Jacobian with saltation factors, plus a "
                  "finite-difference cross-check");
  add_common(jac, ov);
  jac->add_option("--fd-step", ov.fd_step, "finite-difference step");

  CLI::App* cert = app.add_subcommand(
      "certify", "sampled contraction bounds and envelope check");
  add_common(cert, ov);
  cert->add_option("--samples-per-mode", ov.samples_per_mode,
                   "interior samples per mode");
  cert->add_option("--guard-samples", ov.guard_samples,
                   "guard samples per arc");
  cert->add_option("--time-samples", ov.time_samples,
                   "time samples for nonautonomous bounds");
  cert->add_option("--dwell-min", ov.dwell_min, "assumed minimum dwell time");
  cert->add_option("--dwell-max", ov.dwell_max, "assumed maximum dwell time");
  cert->add_option("--pairs", ov.pairs, "random pairs for envelope check");
  cert->add_option("--grid", ov.grid, "time grid points for envelope check");
  cert->add_option("--horizon", ov.horizon, "envelope check horizon");
  cert->add_option("--tol-env", ov.tol_env, "envelope ratio tolerance");
  cert->add_option("--max-hops", ov.max_hops, "distance search reset budget");
  cert->add_option("--multistarts", ov.multistarts,
                   "distance optimizer restarts");

  CLI::App* dist = app.add_subcommand(
      "distance", "intrinsic distance between two states");
  add_common(dist, ov);
  dist->add_option("--a", ov.ax, "first state components");
  dist->add_option("--b", ov.bx, "second state components");
  dist->add_option("--a-mode", ov.amode, "first state mode");
  dist->add_option("--b-mode", ov.bmode, "second state mode");
  dist->add_flag("--series", ov.series, "also emit divergence over time");
  dist->add_option("--grid", ov.grid, "time grid points for the series");
  dist->add_option("--horizon", ov.horizon, "series horizon");
  dist->add_option("--max-hops", ov.max_hops, "reset budget per path");
  dist->add_option("--multistarts", ov.multistarts, "optimizer restarts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  CLI::App* active = app.get_subcommands().front();

  try {
    return dispatch(active->get_name(), ov, active);
  } catch (const hc::InvalidArgument& e) {
    hc::cli::log(hc::cli::LogLevel::Error, e.what());
    std::fprintf(stderr, "hybridcontract: configuration error: %s\n",
                 e.what());
    return 2;
  } catch (const hc::Error& e) {
    hc::cli::log(hc::cli::LogLevel::Error, e.what());
    std::fprintf(stderr, "hybridcontract: runtime error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hybridcontract: unexpected error: %s\n", e.what());
    return 3;
  }
}
