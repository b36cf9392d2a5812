#include "fdmac/batch.hpp"

namespace fdmac::sim {

std::vector<SimMetrics> run_batch_serial(std::span<const SimConfig> jobs) {
  std::vector<SimMetrics> out(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = run(jobs[i]);
  return out;
}

std::vector<SimMetrics> run_batch_parallel(std::span<const SimConfig> jobs) {
  std::vector<SimMetrics> out(jobs.size());
  const auto n = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = run(jobs[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<SimMetrics> run_batch(std::span<const SimConfig> jobs,
                                  bool parallel) {
  return parallel ? run_batch_parallel(jobs) : run_batch_serial(jobs);
}

}  // namespace fdmac::sim
