// Times the OpenMP batch runner against the serial reference, and the
// event-driven simulation loop against the slot-by-slot one, on identical
// workloads. Results must match exactly; only the wall time may differ.

#include <chrono>
#include <cstdio>
#include <vector>

#include "CLI11.hpp"

#include "fdmac/batch.hpp"

using Clock = std::chrono::steady_clock;

static double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int main(int argc, char** argv) {
  CLI::App app{"fdmac batch benchmark"};
  int jobs = 8;
  std::int64_t warmup = 2000;
  std::int64_t measure = 20000;
  app.add_option("--jobs", jobs, "Number of independent simulations");
  app.add_option("--warmup", warmup, "Warmup attempts per job");
  app.add_option("--measure", measure, "Measured attempts per job");
  CLI11_PARSE(app, argc, argv);

  fdmac::sim::SimConfig base;
  base.params =
      fdmac::ProtocolParams{100, 1000, 64, 9, 1e-3, 1e-2, 2,
                            fdmac::Mode::FullDuplex};
  base.warmup_attempts = warmup;
  base.measure_attempts = measure;

  std::vector<fdmac::sim::SimConfig> batch;
  for (int i = 0; i < jobs; ++i) {
    fdmac::sim::SimConfig cfg = base;
    cfg.seed = 1000 + static_cast<std::uint64_t>(i);
    batch.push_back(cfg);
  }

  auto t0 = Clock::now();
  const auto serial = fdmac::sim::run_batch_serial(batch);
  const double t_serial = seconds_since(t0);

  t0 = Clock::now();
  const auto parallel = fdmac::sim::run_batch_parallel(batch);
  const double t_parallel = seconds_since(t0);

  if (serial != parallel) {
    std::fprintf(stderr, "FATAL: parallel batch diverged from serial batch\n");
    return 1;
  }

  t0 = Clock::now();
  const auto fast = fdmac::sim::run(base);
  const double t_fast = seconds_since(t0);

  t0 = Clock::now();
  const auto reference = fdmac::sim::run_reference(base);
  const double t_reference = seconds_since(t0);

  if (!(fast == reference)) {
    std::fprintf(stderr, "FATAL: event-driven run diverged from reference\n");
    return 1;
  }

  std::printf("batch of %d jobs (%lld measured attempts each)\n", jobs,
              static_cast<long long>(measure));
  std::printf("  serial:   %8.3f s\n", t_serial);
  std::printf("  parallel: %8.3f s  (speedup %.2fx)\n", t_parallel,
              t_parallel > 0 ? t_serial / t_parallel : 0.0);
  std::printf("single job, %llu slots\n",
              static_cast<unsigned long long>(fast.total_slots));
  std::printf("  event-driven: %8.3f s\n", t_fast);
  std::printf("  per-slot:     %8.3f s  (ratio %.2fx)\n", t_reference,
              t_fast > 0 ? t_reference / t_fast : 0.0);
  return 0;
}
