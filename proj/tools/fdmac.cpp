// Command-line front end: analytic reports, sweep CSV emission, and
// simulation-versus-analysis validation.
//
// Exit codes: 0 success, 1 usage/config error, 2 solver failure,
// 3 output I/O failure, 4 validation failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fdmac/analytic.hpp"
#include "fdmac/experiment.hpp"

namespace {

using fdmac::Mode;
using fdmac::ProtocolParams;
using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolver = 2;
constexpr int kExitIo = 3;
constexpr int kExitValidation = 4;

struct ParamFlags {
  std::optional<int> users, packet_len, cw_min, w_max, difs;
  std::optional<double> pf, pm;

  void attach(CLI::App* cmd) {
    cmd->add_option("--users", users, "Number of contending users");
    cmd->add_option("--packet-len", packet_len, "Packet length in slots");
    cmd->add_option("--cw-min", cw_min, "Initial contention window");
    cmd->add_option("--w-max", w_max, "Maximum backoff stage");
    cmd->add_option("--pf", pf, "Per-slot false-alarm probability");
    cmd->add_option("--pm", pm, "Per-slot miss-detection probability");
    cmd->add_option("--difs", difs, "DIFS duration in slots");
  }

  void apply(ProtocolParams* p) const {
    if (users) p->m_users = *users;
    if (packet_len) p->packet_len = *packet_len;
    if (cw_min) p->cw_min = *cw_min;
    if (w_max) p->w_max = *w_max;
    if (pf) p->p_false_alarm = *pf;
    if (pm) p->p_miss = *pm;
    if (difs) p->difs = *difs;
  }
};

json report_json(const fdmac::analytic::ThroughputReport& rep) {
  return {{"p_empty", rep.p_empty},
          {"p_single_success", rep.p_single_success},
          {"p_collision", rep.p_collision},
          {"len_success", rep.len_success},
          {"len_collision", rep.len_collision},
          {"throughput", rep.throughput}};
}

json params_json(const ProtocolParams& p) {
  return {{"m_users", p.m_users},
          {"packet_len", p.packet_len},
          {"cw_min", p.cw_min},
          {"w_max", p.w_max},
          {"p_false_alarm", p.p_false_alarm},
          {"p_miss", p.p_miss},
          {"difs", p.difs},
          {"mode", fdmac::to_string(p.mode)}};
}

int run_analyze(const std::string& config, const std::string& mode,
                const ParamFlags& flags) {
  ProtocolParams params;  // defaults describe the headline scenario
  params.cw_min = 128;
  params.w_max = 8;
  if (!config.empty())
    params = fdmac::cli::spec_from_json_file(config).base;
  flags.apply(&params);
  if (mode == "fd")
    params.mode = Mode::FullDuplex;
  else if (mode == "csma")
    params.mode = Mode::CsmaCa;
  else {
    std::cerr << "analyze needs --mode fd or --mode csma\n";
    return kExitUsage;
  }

  try {
    const fdmac::analytic::Analysis a = fdmac::analytic::analyze(params);
    json doc;
    doc["params"] = params_json(params);
    doc["solution"] = {{"p_attempt", a.solution.p_attempt},
                       {"p_success", a.solution.p_success},
                       {"residual", a.solution.residual},
                       {"iterations", a.solution.iterations}};
    doc["report"] = report_json(a.report);
    std::cout << doc.dump(2) << "\n";
    return kExitOk;
  } catch (const fdmac::SolverError& e) {
    std::cerr << "solver failure: " << e.what()
              << " (last iterate " << e.last_iterate << ", residual "
              << e.last_residual << ")\n";
    return kExitSolver;
  }
}

struct PlanOpts {
  std::string config, preset;
  std::string mode, engine;
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  std::optional<std::int64_t> warmup, measure;
  ParamFlags params;
};

std::vector<fdmac::cli::ExperimentSpec> build_plan(const PlanOpts& o,
                                                   bool for_validate) {
  std::vector<fdmac::cli::ExperimentSpec> plan;
  if (!o.preset.empty()) {
    if (o.preset == "fig3")
      plan = for_validate ? fdmac::cli::preset_fig3_validate()
                          : fdmac::cli::preset_fig3();
    else if (o.preset == "fig4")
      plan = fdmac::cli::preset_fig4();
    else
      throw std::invalid_argument("unknown preset: " + o.preset);
  } else if (!o.config.empty()) {
    plan = {fdmac::cli::spec_from_json_file(o.config)};
  } else {
    throw std::invalid_argument("either --preset or --config is required");
  }

  for (auto& spec : plan) {
    if (!o.mode.empty()) {
      if (o.mode == "fd")
        spec.modes = {Mode::FullDuplex};
      else if (o.mode == "csma")
        spec.modes = {Mode::CsmaCa};
      else if (o.mode == "both")
        spec.modes = {Mode::FullDuplex, Mode::CsmaCa};
      else
        throw std::invalid_argument("unknown mode: " + o.mode);
    }
    if (!o.engine.empty()) {
      if (o.engine == "analytic") {
        spec.engine_analytic = true;
        spec.engine_sim = false;
      } else if (o.engine == "sim") {
        spec.engine_analytic = false;
        spec.engine_sim = true;
      } else if (o.engine == "both") {
        spec.engine_analytic = true;
        spec.engine_sim = true;
      } else {
        throw std::invalid_argument("unknown engine: " + o.engine);
      }
    }
    if (o.seed) spec.seed_base = *o.seed;
    if (o.replications) spec.replications = *o.replications;
    if (o.warmup) spec.warmup_attempts = *o.warmup;
    if (o.measure) spec.measure_attempts = *o.measure;
    o.params.apply(&spec.base);
  }
  return plan;
}

int run_sweep(const PlanOpts& opts, const std::string& out, bool no_timestamp) {
  const auto plan = build_plan(opts, /*for_validate=*/false);
  const std::vector<fdmac::cli::ResultRow> rows =
      fdmac::cli::run_plan(plan, /*parallel=*/true);

  std::ofstream os(out, std::ios::binary);
  if (!os) {
    std::cerr << "cannot open output file: " << out << "\n";
    return kExitIo;
  }
  fdmac::cli::write_csv(os, rows, !no_timestamp);
  os.flush();
  if (!os) {
    std::cerr << "failed writing output file: " << out << "\n";
    return kExitIo;
  }
  std::cerr << "wrote " << rows.size() << " rows to " << out << "\n";
  return kExitOk;
}

int run_validate(const PlanOpts& opts, double tolerance) {
  if (!opts.engine.empty() && opts.engine != "both")
    throw std::invalid_argument("validate requires both engines");
  const auto plan = build_plan(opts, /*for_validate=*/true);
  const fdmac::cli::ValidateReport report =
      fdmac::cli::validate_plan(plan, tolerance, /*parallel=*/true);

  json doc;
  doc["tolerance"] = report.tolerance;
  doc["all_pass"] = report.all_pass;
  json points = json::array();
  for (const auto& pt : report.points) {
    json j = {{"sweep_name", pt.sweep_name},
              {"sweep_value", pt.sweep_value},
              {"mode", fdmac::to_string(pt.mode)},
              {"analytic", pt.analytic},
              {"sim_mean", pt.sim_mean},
              {"abs_diff", pt.abs_diff},
              {"pass", pt.pass}};
    if (pt.sim_std_error) j["sim_stderr"] = *pt.sim_std_error;
    points.push_back(std::move(j));
  }
  doc["points"] = std::move(points);
  std::cout << doc.dump(2) << "\n";
  return report.all_pass ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saturation-throughput analysis and slot-level simulation of a "
               "full-duplex MAC against the CSMA/CA baseline"};
  app.require_subcommand(1);

  // analyze
  auto* analyze = app.add_subcommand(
      "analyze", "Solve one scenario and print the throughput report as JSON");
  std::string an_config, an_mode = "fd";
  ParamFlags an_params;
  analyze->add_option("--config", an_config, "JSON experiment config");
  analyze->add_option("--mode", an_mode, "fd | csma");
  an_params.attach(analyze);

  // sweep
  auto* sweep = app.add_subcommand(
      "sweep", "Run a parameter sweep and write one CSV row per point");
  PlanOpts sw;
  std::string sw_out = "fdmac_sweep.csv";
  bool sw_no_timestamp = false;
  sweep->add_option("--config", sw.config, "JSON experiment config");
  sweep->add_option("--preset", sw.preset, "fig3 | fig4");
  sweep->add_option("--mode", sw.mode, "fd | csma | both");
  sweep->add_option("--engine", sw.engine, "analytic | sim | both");
  sweep->add_option("--seed", sw.seed, "Base seed for simulation streams");
  sweep->add_option("--replications", sw.replications,
                    "Simulation replications per point");
  sweep->add_option("--warmup", sw.warmup, "Warmup transmission attempts");
  sweep->add_option("--measure", sw.measure, "Measured transmission attempts");
  sweep->add_option("--out", sw_out, "Output CSV path");
  sweep->add_flag("--no-timestamp", sw_no_timestamp,
                  "Omit the timestamp comment line");
  sw.params.attach(sweep);

  // validate
  auto* validate = app.add_subcommand(
      "validate", "Compare simulated against analytic throughput per point");
  PlanOpts va;
  double va_tolerance = 0.01;
  validate->add_option("--config", va.config, "JSON experiment config");
  validate->add_option("--preset", va.preset, "fig3 | fig4");
  validate->add_option("--mode", va.mode, "fd | csma | both");
  validate->add_option("--engine", va.engine, "must be 'both' if given");
  validate->add_option("--seed", va.seed, "Base seed for simulation streams");
  validate->add_option("--replications", va.replications,
                       "Simulation replications per point");
  validate->add_option("--warmup", va.warmup, "Warmup transmission attempts");
  validate->add_option("--measure", va.measure,
                       "Measured transmission attempts");
  validate->add_option("--tolerance", va_tolerance,
                       "Absolute throughput tolerance");
  va.params.attach(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (analyze->parsed()) return run_analyze(an_config, an_mode, an_params);
    if (sweep->parsed()) return run_sweep(sw, sw_out, sw_no_timestamp);
    if (validate->parsed()) return run_validate(va, va_tolerance);
  } catch (const fdmac::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
