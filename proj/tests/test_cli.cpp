#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "fdmac/experiment.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FDMAC_CLI_PATH) + " " + args;
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path tmp(const char* name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_CASE("cli: analyze prints a throughput report") {
  const auto out = tmp("fdmac_cli_analyze.json");
  CHECK(run_cli("analyze --mode fd > " + out.string()) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("\"throughput\"") != std::string::npos);
  CHECK(text.find("\"p_attempt\"") != std::string::npos);
  fs::remove(out);

  CHECK(run_cli("analyze --mode both 2> /dev/null") == 1);
  CHECK(run_cli("analyze --mode fd --pf 1.5 2> /dev/null") == 1);
}

TEST_CASE("cli: sweep needs a plan and honors exit codes") {
  CHECK(run_cli("sweep 2> /dev/null") == 1);
  CHECK(run_cli("sweep --preset nope 2> /dev/null") == 1);
  CHECK(run_cli("sweep --preset fig4 --mode csma --out "
                "/nonexistent_dir/x.csv 2> /dev/null") == 3);

  const auto out = tmp("fdmac_cli_sweep.csv");
  CHECK(run_cli("sweep --preset fig4 --mode csma --no-timestamp --out " +
                out.string() + " 2> /dev/null") == 0);
  const std::string text = slurp(out);
  CHECK(text.rfind(fdmac::cli::kCsvHeader, 0) == 0);
  // 4 sub-sweeps x 13 packet lengths, analytic only
  size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 1 + 4 * 13);
  fs::remove(out);
}

TEST_CASE("cli: validate exit codes follow the tolerance") {
  fdmac::cli::ExperimentSpec spec;
  spec.sweep_name = "tiny";
  spec.base = fdmac::ProtocolParams{5,    40,   8, 3,
                                    1e-2, 1e-1, 2, fdmac::Mode::FullDuplex};
  spec.sweep_variable = fdmac::cli::SweepVariable::CwMin;
  spec.sweep_values = {8};
  spec.modes = {fdmac::Mode::FullDuplex};
  spec.replications = 2;
  spec.warmup_attempts = 100;
  spec.measure_attempts = 1500;

  const auto cfg = tmp("fdmac_cli_validate.json");
  {
    std::ofstream os(cfg);
    os << fdmac::cli::spec_to_json(spec);
  }
  const auto out = tmp("fdmac_cli_validate_out.json");

  CHECK(run_cli("validate --config " + cfg.string() + " --tolerance 0.5 > " +
                out.string()) == 0);
  CHECK(slurp(out).find("\"all_pass\": true") != std::string::npos);

  CHECK(run_cli("validate --config " + cfg.string() +
                " --tolerance 0.0000000001 > /dev/null") == 4);
  CHECK(run_cli("validate --config " + cfg.string() +
                " --engine analytic 2> /dev/null") == 1);
  fs::remove(cfg);
  fs::remove(out);
}
