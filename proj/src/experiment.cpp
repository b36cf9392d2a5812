#include "fdmac/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <ostream>
#include <span>
#include <tuple>

#include "json.hpp"

#include "fdmac/batch.hpp"

namespace fdmac::cli {

using json = nlohmann::ordered_json;

const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::CwMin: return "cw_min";
    case SweepVariable::PacketLen: return "packet_len";
    case SweepVariable::Users: return "m_users";
    case SweepVariable::Pf: return "p_false_alarm";
    case SweepVariable::Pm: return "p_miss";
  }
  return "?";
}

SweepVariable sweep_variable_from_string(const std::string& s) {
  if (s == "cw_min") return SweepVariable::CwMin;
  if (s == "packet_len") return SweepVariable::PacketLen;
  if (s == "m_users") return SweepVariable::Users;
  if (s == "p_false_alarm" || s == "pf") return SweepVariable::Pf;
  if (s == "p_miss" || s == "pm") return SweepVariable::Pm;
  throw std::invalid_argument("unknown sweep variable: " + s);
}

const char* to_string(Engine e) {
  return e == Engine::Analytic ? "analytic" : "sim";
}

void ExperimentSpec::validate() const {
  base.validate();
  if (sweep_values.empty())
    throw std::invalid_argument("sweep_values must be non-empty");
  for (std::size_t i = 1; i < sweep_values.size(); ++i)
    if (!(sweep_values[i] > sweep_values[i - 1]))
      throw std::invalid_argument("sweep_values must be strictly increasing");
  if (modes.empty()) throw std::invalid_argument("modes must be non-empty");
  if (!engine_analytic && !engine_sim)
    throw std::invalid_argument("at least one engine must be enabled");
  if (engine_sim && replications < 1)
    throw std::invalid_argument(
        "replications must be >= 1 when simulation is enabled");
  if (warmup_attempts < 0 || measure_attempts < 1)
    throw std::invalid_argument("bad warmup/measure attempt counts");
}

namespace {

int integral_value(double v, const char* what) {
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 || r < 1.0 || r > 2e9)
    throw std::invalid_argument(std::string(what) +
                                " sweep value must be a positive integer");
  return static_cast<int>(r);
}

}  // namespace

ProtocolParams ExperimentSpec::params_at(double value, Mode mode) const {
  ProtocolParams p = base;
  p.mode = mode;
  switch (sweep_variable) {
    case SweepVariable::CwMin:
      p.cw_min = integral_value(value, "cw_min");
      break;
    case SweepVariable::PacketLen:
      p.packet_len = integral_value(value, "packet_len");
      break;
    case SweepVariable::Users:
      p.m_users = integral_value(value, "m_users");
      break;
    case SweepVariable::Pf:
      p.p_false_alarm = value;
      break;
    case SweepVariable::Pm:
      p.p_miss = value;
      break;
  }
  if (fixed_cw_max > 0) {
    if (fixed_cw_max % p.cw_min != 0)
      throw std::invalid_argument("fixed_cw_max is not a multiple of cw_min");
    const std::int64_t ratio = fixed_cw_max / p.cw_min;
    if ((ratio & (ratio - 1)) != 0)
      throw std::invalid_argument(
          "fixed_cw_max / cw_min must be a power of two");
    int k = 0;
    while ((std::int64_t{1} << k) < ratio) ++k;
    p.w_max = k;
  }
  p.validate();
  return p;
}

std::vector<ExperimentSpec> preset_fig3() {
  ExperimentSpec s;
  s.sweep_name = "fig3_cwmin";
  s.base = ProtocolParams{100, 1000, 16, 11, 1e-3, 1e-2, 2, Mode::FullDuplex};
  s.sweep_variable = SweepVariable::CwMin;
  s.sweep_values = {4, 8, 16, 32, 64, 128, 256, 512, 1024};
  s.modes = {Mode::FullDuplex, Mode::CsmaCa};
  s.engine_analytic = true;
  s.engine_sim = true;
  s.replications = 5;
  s.warmup_attempts = 10000;
  s.measure_attempts = 100000;
  s.fixed_cw_max = 32768;
  return {s};
}

std::vector<ExperimentSpec> preset_fig3_validate() {
  auto plan = preset_fig3();
  plan[0].sweep_values = {16, 64, 128, 256, 1024};
  plan[0].modes = {Mode::FullDuplex};
  return plan;
}

std::vector<ExperimentSpec> preset_fig4() {
  std::vector<ExperimentSpec> plan;
  for (int wmax : {2, 3, 8, 11}) {
    ExperimentSpec s;
    s.sweep_name = "fig4_wmax" + std::to_string(wmax);
    s.base =
        ProtocolParams{100, 1000, 16, wmax, 1e-3, 1e-2, 2, Mode::FullDuplex};
    s.sweep_variable = SweepVariable::PacketLen;
    s.sweep_values = {10,   20,    50,    100,   200,   500,  1000,
                      2000, 5000,  10000, 20000, 50000, 100000};
    s.modes = {Mode::FullDuplex, Mode::CsmaCa};
    s.engine_analytic = true;
    s.engine_sim = false;  // packet-length curves are analytic by default
    plan.push_back(std::move(s));
  }
  return plan;
}

namespace {

ResultRow analytic_row(const ExperimentSpec& spec, double value, Mode mode) {
  ResultRow row;
  row.sweep_name = spec.sweep_name;
  row.sweep_value = value;
  row.mode = mode;
  row.engine = Engine::Analytic;
  try {
    const ProtocolParams params = spec.params_at(value, mode);
    const analytic::Analysis a = analytic::analyze(params);
    row.throughput = a.report.throughput;
    row.p_empty = a.report.p_empty;
    row.p_success = a.report.p_single_success;
    row.p_collision = a.report.p_collision;
    row.len_success = a.report.len_success;
    row.len_collision = a.report.len_collision;
    row.p_attempt = a.solution.p_attempt;
    row.p_s = a.solution.p_success;
    row.residual = a.solution.residual;
    row.iterations = a.solution.iterations;
  } catch (const std::exception& e) {
    row.solver_ok = false;
    row.note = e.what();
    row.throughput = std::numeric_limits<double>::quiet_NaN();
  }
  return row;
}

ResultRow aggregate_sim_row(const ExperimentSpec& spec, double value,
                            Mode mode, std::uint64_t row_seed,
                            std::span<const sim::SimMetrics> reps,
                            const ProtocolParams& params) {
  ResultRow row;
  row.sweep_name = spec.sweep_name;
  row.sweep_value = value;
  row.mode = mode;
  row.engine = Engine::Sim;
  row.replications = static_cast<int>(reps.size());
  row.seed = row_seed;

  const auto n = static_cast<double>(reps.size());
  double mean = 0.0;
  for (const auto& m : reps) mean += m.throughput_estimate;
  mean /= n;
  row.throughput = mean;
  if (reps.size() >= 2) {
    double ss = 0.0;
    for (const auto& m : reps) {
      const double d = m.throughput_estimate - mean;
      ss += d * d;
    }
    row.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }

  // Pool counters across replications, then form the event-level estimates.
  sim::SimMetrics pool;
  pool.collision_event_lengths.assign(1, 0);
  for (const auto& m : reps) {
    pool.total_slots += m.total_slots;
    pool.idle_slots += m.idle_slots;
    pool.single_tx_slots += m.single_tx_slots;
    pool.collision_slots += m.collision_slots;
    pool.attempts += m.attempts;
    pool.perceived_successes += m.perceived_successes;
    pool.false_alarm_truncations += m.false_alarm_truncations;
    pool.collision_events += m.collision_events;
    pool.solo_events += m.solo_events;
    pool.solo_slots += m.solo_slots;
    if (m.collision_event_lengths.size() > pool.collision_event_lengths.size())
      pool.collision_event_lengths.resize(m.collision_event_lengths.size(), 0);
    for (std::size_t d = 0; d < m.collision_event_lengths.size(); ++d)
      pool.collision_event_lengths[d] += m.collision_event_lengths[d];
  }
  const double events =
      static_cast<double>(pool.solo_events + pool.collision_events);
  // Idle slots spent re-arming DIFS after each event are not contention
  // slots; what remains estimates the per-slot event probabilities.
  double empty_decisions =
      static_cast<double>(pool.idle_slots) - params.difs * events;
  if (empty_decisions < 0.0) empty_decisions = 0.0;
  const double decisions = empty_decisions + events;
  if (decisions > 0.0) {
    row.p_empty = empty_decisions / decisions;
    row.p_success = static_cast<double>(pool.solo_events) / decisions;
    row.p_collision = static_cast<double>(pool.collision_events) / decisions;
    row.p_attempt = static_cast<double>(pool.attempts) /
                    (decisions * static_cast<double>(params.m_users));
  }
  row.len_success =
      pool.solo_events == 0
          ? std::numeric_limits<double>::quiet_NaN()
          : static_cast<double>(pool.solo_slots) /
                static_cast<double>(pool.solo_events);
  row.len_collision = pool.collision_events == 0
                          ? std::numeric_limits<double>::quiet_NaN()
                          : sim::empirical_collision_length(pool);
  row.p_s = pool.attempts == 0
                ? std::numeric_limits<double>::quiet_NaN()
                : static_cast<double>(pool.perceived_successes) /
                      static_cast<double>(pool.attempts);
  return row;
}

}  // namespace

std::vector<ResultRow> run_plan(const std::vector<ExperimentSpec>& plan,
                                bool parallel) {
  for (const auto& spec : plan) spec.validate();

  struct PendingSim {
    std::size_t spec_idx;
    std::size_t value_idx;
    Mode mode;
    std::uint64_t row_seed;
    std::size_t first_job;
    std::size_t job_count;
    ProtocolParams params;
  };

  std::vector<ResultRow> rows;
  std::vector<PendingSim> pending;
  std::vector<sim::SimConfig> jobs;

  for (std::size_t si = 0; si < plan.size(); ++si) {
    const ExperimentSpec& spec = plan[si];
    for (std::size_t vi = 0; vi < spec.sweep_values.size(); ++vi) {
      const double value = spec.sweep_values[vi];
      for (Mode mode : spec.modes) {
        if (spec.engine_analytic)
          rows.push_back(analytic_row(spec, value, mode));
        if (!spec.engine_sim) continue;
        const std::uint64_t mode_bit = mode == Mode::FullDuplex ? 0 : 1;
        const std::uint64_t row_seed =
            derive_seed(spec.seed_base, {si, vi, mode_bit});
        ProtocolParams params;
        try {
          params = spec.params_at(value, mode);
        } catch (const std::exception& e) {
          ResultRow row;
          row.sweep_name = spec.sweep_name;
          row.sweep_value = value;
          row.mode = mode;
          row.engine = Engine::Sim;
          row.solver_ok = false;
          row.note = e.what();
          row.throughput = std::numeric_limits<double>::quiet_NaN();
          rows.push_back(std::move(row));
          continue;
        }
        PendingSim p{si, vi, mode, row_seed, jobs.size(),
                     static_cast<std::size_t>(spec.replications), params};
        for (int rep = 0; rep < spec.replications; ++rep) {
          sim::SimConfig cfg;
          cfg.params = params;
          cfg.seed = derive_seed(row_seed, {static_cast<std::uint64_t>(rep)});
          cfg.warmup_attempts = spec.warmup_attempts;
          cfg.measure_attempts = spec.measure_attempts;
          jobs.push_back(cfg);
        }
        pending.push_back(std::move(p));
      }
    }
  }

  const std::vector<sim::SimMetrics> results = sim::run_batch(jobs, parallel);
  for (const auto& p : pending) {
    const std::span<const sim::SimMetrics> reps(results.data() + p.first_job,
                                                p.job_count);
    rows.push_back(aggregate_sim_row(plan[p.spec_idx],
                                     plan[p.spec_idx].sweep_values[p.value_idx],
                                     p.mode, p.row_seed, reps, p.params));
  }
  sort_rows(rows);
  return rows;
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::sort(rows.begin(), rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              return std::make_tuple(a.sweep_name, a.sweep_value,
                                     static_cast<int>(a.engine),
                                     static_cast<int>(a.mode)) <
                     std::make_tuple(b.sweep_name, b.sweep_value,
                                     static_cast<int>(b.engine),
                                     static_cast<int>(b.mode));
            });
}

const char* const kCsvHeader =
    "sweep_name,sweep_value,mode,engine,replication,throughput,stderr,"
    "p_empty,p_success,p_collision,len_success,len_collision,p_attempt,p_s,"
    "seed";

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows,
               bool timestamp) {
  if (timestamp) os << "# generated " << utc_now() << "\n";
  os << kCsvHeader << "\n";
  for (const auto& r : rows) {
    os << r.sweep_name << ',' << fmt(r.sweep_value) << ',' << to_string(r.mode)
       << ',' << to_string(r.engine) << ',' << r.replications << ','
       << fmt(r.throughput) << ',';
    if (r.std_error) os << fmt(*r.std_error);
    os << ',' << fmt(r.p_empty) << ',' << fmt(r.p_success) << ','
       << fmt(r.p_collision) << ',' << fmt(r.len_success) << ','
       << fmt(r.len_collision) << ',' << fmt(r.p_attempt) << ',' << fmt(r.p_s)
       << ',';
    if (r.seed) os << *r.seed;
    os << '\n';
  }
}

ValidateReport validate_plan(const std::vector<ExperimentSpec>& plan,
                             double tolerance, bool parallel) {
  for (const auto& spec : plan) {
    spec.validate();
    if (!spec.engine_analytic || !spec.engine_sim)
      throw std::invalid_argument("validation requires both engines");
  }
  const std::vector<ResultRow> rows = run_plan(plan, parallel);

  ValidateReport report;
  report.tolerance = tolerance;
  for (const auto& a : rows) {
    if (a.engine != Engine::Analytic) continue;
    for (const auto& s : rows) {
      if (s.engine != Engine::Sim || s.sweep_name != a.sweep_name ||
          s.sweep_value != a.sweep_value || s.mode != a.mode)
        continue;
      ValidatePoint pt;
      pt.sweep_name = a.sweep_name;
      pt.sweep_value = a.sweep_value;
      pt.mode = a.mode;
      pt.analytic = a.throughput;
      pt.sim_mean = s.throughput;
      pt.sim_std_error = s.std_error;
      pt.abs_diff = std::abs(s.throughput - a.throughput);
      pt.pass = a.solver_ok && s.solver_ok && pt.abs_diff <= tolerance;
      report.all_pass = report.all_pass && pt.pass;
      report.points.push_back(std::move(pt));
    }
  }
  return report;
}

namespace {

Mode mode_from_string(const std::string& s) {
  if (s == "fd") return Mode::FullDuplex;
  if (s == "csma") return Mode::CsmaCa;
  throw std::invalid_argument("unknown mode: " + s);
}

}  // namespace

ExperimentSpec spec_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json doc = json::parse(in);

  ExperimentSpec spec;
  spec.sweep_name = doc.value("sweep_name", spec.sweep_name);
  if (doc.contains("base")) {
    const json& b = doc["base"];
    spec.base.m_users = b.value("m_users", spec.base.m_users);
    spec.base.packet_len = b.value("packet_len", spec.base.packet_len);
    spec.base.cw_min = b.value("cw_min", spec.base.cw_min);
    spec.base.w_max = b.value("w_max", spec.base.w_max);
    spec.base.p_false_alarm =
        b.value("p_false_alarm", spec.base.p_false_alarm);
    spec.base.p_miss = b.value("p_miss", spec.base.p_miss);
    spec.base.difs = b.value("difs", spec.base.difs);
    if (b.contains("mode"))
      spec.base.mode = mode_from_string(b["mode"].get<std::string>());
  }
  if (doc.contains("sweep_variable"))
    spec.sweep_variable =
        sweep_variable_from_string(doc["sweep_variable"].get<std::string>());
  if (doc.contains("sweep_values"))
    spec.sweep_values = doc["sweep_values"].get<std::vector<double>>();
  if (doc.contains("modes")) {
    spec.modes.clear();
    for (const auto& m : doc["modes"])
      spec.modes.push_back(mode_from_string(m.get<std::string>()));
  }
  if (doc.contains("engines")) {
    spec.engine_analytic = false;
    spec.engine_sim = false;
    for (const auto& e : doc["engines"]) {
      const std::string name = e.get<std::string>();
      if (name == "analytic")
        spec.engine_analytic = true;
      else if (name == "sim")
        spec.engine_sim = true;
      else
        throw std::invalid_argument("unknown engine: " + name);
    }
  }
  spec.replications = doc.value("replications", spec.replications);
  spec.seed_base = doc.value("seed_base", spec.seed_base);
  spec.warmup_attempts = doc.value("warmup_attempts", spec.warmup_attempts);
  spec.measure_attempts = doc.value("measure_attempts", spec.measure_attempts);
  spec.fixed_cw_max = doc.value("fixed_cw_max", spec.fixed_cw_max);
  return spec;
}

std::string spec_to_json(const ExperimentSpec& spec) {
  json doc;
  doc["sweep_name"] = spec.sweep_name;
  doc["base"] = {{"m_users", spec.base.m_users},
                 {"packet_len", spec.base.packet_len},
                 {"cw_min", spec.base.cw_min},
                 {"w_max", spec.base.w_max},
                 {"p_false_alarm", spec.base.p_false_alarm},
                 {"p_miss", spec.base.p_miss},
                 {"difs", spec.base.difs},
                 {"mode", to_string(spec.base.mode)}};
  doc["sweep_variable"] = to_string(spec.sweep_variable);
  doc["sweep_values"] = spec.sweep_values;
  json modes = json::array();
  for (Mode m : spec.modes) modes.push_back(to_string(m));
  doc["modes"] = modes;
  json engines = json::array();
  if (spec.engine_analytic) engines.push_back("analytic");
  if (spec.engine_sim) engines.push_back("sim");
  doc["engines"] = engines;
  doc["replications"] = spec.replications;
  doc["seed_base"] = spec.seed_base;
  doc["warmup_attempts"] = spec.warmup_attempts;
  doc["measure_attempts"] = spec.measure_attempts;
  doc["fixed_cw_max"] = spec.fixed_cw_max;
  return doc.dump(2);
}

}  // namespace fdmac::cli
