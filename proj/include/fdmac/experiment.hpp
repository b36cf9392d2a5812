#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fdmac/analytic.hpp"
#include "fdmac/simulator.hpp"

// Experiment plans: parameter sweeps evaluated by the analytic model and/or
// the simulator, emitted as schema-stable CSV, plus the simulation-versus-
// analysis validation report. Sweep points and replications run as
// independent jobs; rows are sorted before writing so output is independent
// of scheduling.

namespace fdmac::cli {

enum class SweepVariable { CwMin, PacketLen, Users, Pf, Pm };

const char* to_string(SweepVariable v);
SweepVariable sweep_variable_from_string(const std::string& s);

struct ExperimentSpec {
  std::string sweep_name = "custom";
  ProtocolParams base;
  SweepVariable sweep_variable = SweepVariable::CwMin;
  std::vector<double> sweep_values;
  std::vector<Mode> modes = {Mode::FullDuplex};
  bool engine_analytic = true;
  bool engine_sim = true;
  int replications = 5;
  std::uint64_t seed_base = 1;
  std::int64_t warmup_attempts = 10000;
  std::int64_t measure_attempts = 100000;
  // When positive, w_max is re-derived per point so cw_min * 2^w_max stays
  // pinned to this value (used by the cw_min sweep presets).
  std::int64_t fixed_cw_max = 0;

  void validate() const;
  // Scenario at one sweep value; applies the swept variable and the
  // fixed_cw_max coupling.
  ProtocolParams params_at(double value, Mode mode) const;
};

enum class Engine { Analytic, Sim };

const char* to_string(Engine e);

struct ResultRow {
  std::string sweep_name;
  double sweep_value = 0.0;
  Mode mode = Mode::FullDuplex;
  Engine engine = Engine::Analytic;
  int replications = 0;  // aggregated simulation replications; 0 for analytic
  double throughput = 0.0;
  std::optional<double> std_error;  // simulation rows with >= 2 replications
  double p_empty = 0.0;
  double p_success = 0.0;
  double p_collision = 0.0;
  double len_success = 0.0;
  double len_collision = 0.0;
  double p_attempt = 0.0;
  double p_s = 0.0;
  std::optional<std::uint64_t> seed;  // simulation rows only
  bool solver_ok = true;
  std::string note;        // failure diagnostics, kept out of the CSV
  double residual = 0.0;   // solver diagnostics (analytic rows)
  int iterations = 0;
};

// Built-in presets. The cw_min preset sweeps the initial window over powers
// of two with the maximum window pinned; the packet-length preset carries
// one sub-sweep per w_max setting.
std::vector<ExperimentSpec> preset_fig3();
std::vector<ExperimentSpec> preset_fig4();
// Reduced cw_min grid with both engines, full-duplex only: the standing
// cross-validation run.
std::vector<ExperimentSpec> preset_fig3_validate();

// Evaluates a plan into rows (one per sweep value x engine x mode, with
// simulation replications aggregated), sorted into the canonical order.
std::vector<ResultRow> run_plan(const std::vector<ExperimentSpec>& plan,
                                bool parallel = true);

void sort_rows(std::vector<ResultRow>& rows);

// CSV emission: fixed column order, one header row, optional leading
// timestamp comment. Bytes depend only on the rows when the timestamp is off.
extern const char* const kCsvHeader;
void write_csv(std::ostream& os, const std::vector<ResultRow>& rows,
               bool timestamp);

struct ValidatePoint {
  std::string sweep_name;
  double sweep_value = 0.0;
  Mode mode = Mode::FullDuplex;
  double analytic = 0.0;
  double sim_mean = 0.0;
  std::optional<double> sim_std_error;
  double abs_diff = 0.0;
  bool pass = false;
};

struct ValidateReport {
  double tolerance = 0.01;
  std::vector<ValidatePoint> points;
  bool all_pass = true;
};

// Runs a plan with both engines and compares simulated means against the
// analytic throughput point by point.
ValidateReport validate_plan(const std::vector<ExperimentSpec>& plan,
                             double tolerance, bool parallel = true);

// JSON config mirroring ExperimentSpec (single document -> one-spec plan).
ExperimentSpec spec_from_json_file(const std::string& path);
std::string spec_to_json(const ExperimentSpec& spec);

}  // namespace fdmac::cli
