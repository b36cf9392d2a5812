#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fdmac/experiment.hpp"

using namespace fdmac;
using namespace fdmac::cli;

namespace {

ExperimentSpec small_sim_spec() {
  ExperimentSpec s;
  s.sweep_name = "tiny";
  s.base = ProtocolParams{5, 40, 8, 3, 1e-2, 1e-1, 2, Mode::FullDuplex};
  s.sweep_variable = SweepVariable::CwMin;
  s.sweep_values = {4, 8};
  s.modes = {Mode::FullDuplex};
  s.engine_analytic = true;
  s.engine_sim = true;
  s.replications = 3;
  s.seed_base = 77;
  s.warmup_attempts = 100;
  s.measure_attempts = 1500;
  return s;
}

std::string csv_string(const std::vector<ResultRow>& rows, bool timestamp) {
  std::ostringstream os;
  write_csv(os, rows, timestamp);
  return os.str();
}

}  // namespace

TEST_CASE("preset shapes") {
  const auto fig3 = preset_fig3();
  REQUIRE(fig3.size() == 1);
  CHECK(fig3[0].sweep_values.size() == 9);
  CHECK(fig3[0].sweep_values.front() == 4);
  CHECK(fig3[0].sweep_values.back() == 1024);
  CHECK(fig3[0].fixed_cw_max == 32768);
  CHECK(fig3[0].modes.size() == 2);
  CHECK(fig3[0].engine_analytic);
  CHECK(fig3[0].engine_sim);

  // the window ceiling coupling drives w_max per point
  CHECK(fig3[0].params_at(128, Mode::FullDuplex).w_max == 8);
  CHECK(fig3[0].params_at(4, Mode::FullDuplex).w_max == 13);
  CHECK(fig3[0].params_at(1024, Mode::CsmaCa).w_max == 5);
  CHECK(fig3[0].params_at(1024, Mode::CsmaCa).mode == Mode::CsmaCa);

  const auto fig4 = preset_fig4();
  REQUIRE(fig4.size() == 4);
  CHECK(fig4[0].sweep_name == "fig4_wmax2");
  CHECK(fig4[3].sweep_name == "fig4_wmax11");
  CHECK(fig4[0].sweep_variable == SweepVariable::PacketLen);
  CHECK_FALSE(fig4[0].engine_sim);
  CHECK(fig4[3].params_at(5000, Mode::FullDuplex).packet_len == 5000);

  const auto val = preset_fig3_validate();
  REQUIRE(val.size() == 1);
  CHECK(val[0].sweep_values == std::vector<double>{16, 64, 128, 256, 1024});
  CHECK(val[0].modes == std::vector<Mode>{Mode::FullDuplex});
}

TEST_CASE("spec validation") {
  auto s = small_sim_spec();
  CHECK_NOTHROW(s.validate());

  s.sweep_values = {};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = small_sim_spec();
  s.sweep_values = {8, 8};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = small_sim_spec();
  s.engine_analytic = false;
  s.engine_sim = false;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = small_sim_spec();
  s.replications = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = small_sim_spec();
  s.sweep_values = {4.5};
  CHECK_THROWS_AS(s.params_at(4.5, Mode::FullDuplex), std::invalid_argument);

  s = small_sim_spec();
  s.fixed_cw_max = 100;  // not a power-of-two multiple of cw_min
  CHECK_THROWS_AS(s.params_at(8, Mode::FullDuplex), std::invalid_argument);
}

TEST_CASE("run_plan emits one row per value x engine x mode, sorted") {
  const auto rows = run_plan({small_sim_spec()}, /*parallel=*/true);
  REQUIRE(rows.size() == 4);  // 2 values x (analytic + sim)
  CHECK(rows[0].sweep_value == 4);
  CHECK(rows[0].engine == Engine::Analytic);
  CHECK(rows[1].sweep_value == 4);
  CHECK(rows[1].engine == Engine::Sim);
  CHECK(rows[2].sweep_value == 8);
  CHECK(rows[3].sweep_value == 8);

  for (const auto& r : rows) {
    CHECK(r.solver_ok);
    CHECK(r.throughput > 0.0);
    CHECK(r.throughput < 1.0);
    if (r.engine == Engine::Sim) {
      CHECK(r.replications == 3);
      CHECK(r.seed.has_value());
      CHECK(r.std_error.has_value());
    } else {
      CHECK(r.replications == 0);
      CHECK_FALSE(r.seed.has_value());
      CHECK_FALSE(r.std_error.has_value());
      CHECK(r.residual <= 1e-10);
    }
  }

  // sim and analytic agree loosely even on this tiny workload
  CHECK(std::abs(rows[0].throughput - rows[1].throughput) < 0.08);
  CHECK(std::abs(rows[0].p_s - rows[1].p_s) < 0.08);
}

TEST_CASE("plans replay byte-for-byte and ignore scheduling") {
  const auto a = run_plan({small_sim_spec()}, true);
  const auto b = run_plan({small_sim_spec()}, true);
  const auto c = run_plan({small_sim_spec()}, false);
  CHECK(csv_string(a, false) == csv_string(b, false));
  CHECK(csv_string(a, false) == csv_string(c, false));

  const std::string with_ts = csv_string(a, true);
  CHECK(with_ts.rfind("# generated ", 0) == 0);
}

TEST_CASE("csv schema") {
  const auto rows = run_plan({small_sim_spec()}, true);
  const std::string text = csv_string(rows, false);
  std::istringstream is(text);
  std::string header;
  std::getline(is, header);
  CHECK(header == kCsvHeader);
  int lines = 0;
  std::string line;
  while (std::getline(is, line)) {
    ++lines;
    int commas = 0;
    for (char ch : line) commas += ch == ',';
    CHECK(commas == 14);
  }
  CHECK(lines == 4);
}

TEST_CASE("validation report flags points by tolerance") {
  auto spec = small_sim_spec();
  const auto loose = validate_plan({spec}, 0.5, true);
  CHECK(loose.all_pass);
  REQUIRE(loose.points.size() == 2);
  for (const auto& pt : loose.points) {
    CHECK(pt.pass);
    CHECK(pt.abs_diff == std::abs(pt.analytic - pt.sim_mean));
  }

  const auto strict = validate_plan({spec}, 0.0, true);
  CHECK_FALSE(strict.all_pass);
}

TEST_CASE("validation requires both engines") {
  auto spec = small_sim_spec();
  spec.engine_sim = false;
  CHECK_THROWS_AS(validate_plan({spec}, 0.01, true), std::invalid_argument);
}

TEST_CASE("config round-trips through json") {
  auto spec = small_sim_spec();
  spec.fixed_cw_max = 64;
  spec.modes = {Mode::FullDuplex, Mode::CsmaCa};

  const auto path = std::filesystem::temp_directory_path() /
                    "fdmac_test_config.json";
  {
    std::ofstream os(path);
    os << spec_to_json(spec);
  }
  const ExperimentSpec back = spec_from_json_file(path.string());
  std::filesystem::remove(path);

  CHECK(back.sweep_name == spec.sweep_name);
  CHECK(back.base.m_users == spec.base.m_users);
  CHECK(back.base.p_miss == spec.base.p_miss);
  CHECK(back.base.mode == spec.base.mode);
  CHECK(back.sweep_variable == spec.sweep_variable);
  CHECK(back.sweep_values == spec.sweep_values);
  CHECK(back.modes == spec.modes);
  CHECK(back.engine_analytic == spec.engine_analytic);
  CHECK(back.engine_sim == spec.engine_sim);
  CHECK(back.replications == spec.replications);
  CHECK(back.seed_base == spec.seed_base);
  CHECK(back.warmup_attempts == spec.warmup_attempts);
  CHECK(back.measure_attempts == spec.measure_attempts);
  CHECK(back.fixed_cw_max == spec.fixed_cw_max);

  CHECK_THROWS(spec_from_json_file("/nonexistent/config.json"));
}

TEST_CASE("analytic cw sweep: peak above 0.99, decline past the user count") {
  auto plan = preset_fig3();
  plan[0].engine_sim = false;
  const auto rows = run_plan(plan, false);

  double best_fd = 0.0;
  std::vector<double> fd_curve;
  for (const auto& r : rows) {
    if (r.mode != Mode::FullDuplex) continue;
    fd_curve.push_back(r.throughput);
    best_fd = std::max(best_fd, r.throughput);
  }
  REQUIRE(fd_curve.size() == 9);
  CHECK(best_fd > 0.99);
  // rows are sorted by sweep value; beyond cw_min = 128 (index 5) the
  // overlong backoff wastes the channel
  for (std::size_t i = 5; i + 1 < fd_curve.size(); ++i)
    CHECK(fd_curve[i + 1] < fd_curve[i]);
}

TEST_CASE("simulated baseline stays below full duplex at small windows") {
  auto plan = preset_fig3();
  plan[0].sweep_values = {16, 128};  // at and below the user count
  plan[0].engine_analytic = false;
  plan[0].replications = 2;
  plan[0].warmup_attempts = 1000;
  plan[0].measure_attempts = 5000;
  const auto rows = run_plan(plan, true);
  REQUIRE(rows.size() == 4);
  for (double value : {16.0, 128.0}) {
    double fd = -1.0, csma = -1.0;
    for (const auto& r : rows) {
      if (r.sweep_value != value) continue;
      (r.mode == Mode::FullDuplex ? fd : csma) = r.throughput;
    }
    CHECK(fd > csma);
    CHECK(csma > 0.0);
  }
}

TEST_CASE("single-user validation point is tight") {
  ExperimentSpec s;
  s.sweep_name = "lone";
  s.base = ProtocolParams{1, 100, 16, 2, 0.0, 0.0, 2, Mode::FullDuplex};
  s.sweep_variable = SweepVariable::PacketLen;
  s.sweep_values = {100};
  s.modes = {Mode::FullDuplex};
  s.replications = 3;
  s.warmup_attempts = 500;
  s.measure_attempts = 20000;
  const auto report = validate_plan({s}, 0.005, true);
  REQUIRE(report.points.size() == 1);
  CHECK(report.all_pass);
  CHECK(report.points[0].abs_diff <= 0.005);
}

TEST_CASE("solver failures are recorded per row and the run continues") {
  // A sweep value that breaks parameter validation must not kill the plan.
  ExperimentSpec s;
  s.sweep_name = "edge";
  s.base = ProtocolParams{2, 10, 4, 2, 0.0, 0.0, 2, Mode::FullDuplex};
  s.sweep_variable = SweepVariable::Pf;
  s.sweep_values = {0.5, 2.0};  // the second is outside [0, 1)
  s.modes = {Mode::FullDuplex};
  s.engine_analytic = true;
  s.engine_sim = false;
  const auto rows = run_plan({s}, false);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].solver_ok);
  CHECK_FALSE(rows[1].solver_ok);
  CHECK(std::isnan(rows[1].throughput));
  CHECK_FALSE(rows[1].note.empty());
}
