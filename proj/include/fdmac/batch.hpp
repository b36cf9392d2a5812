#pragma once

#include <span>
#include <vector>

#include "fdmac/simulator.hpp"

// Runs independent simulation jobs, optionally across OpenMP threads.
// Every job owns its state and RNG streams, so the parallel runner returns
// exactly what the serial one does, in the same order.

namespace fdmac::sim {

// Serial reference: jobs executed one after another on the calling thread.
std::vector<SimMetrics> run_batch_serial(std::span<const SimConfig> jobs);

// OpenMP-parallel runner; falls back to the serial loop when OpenMP is
// unavailable. Results are positionally identical to run_batch_serial.
std::vector<SimMetrics> run_batch_parallel(std::span<const SimConfig> jobs);

std::vector<SimMetrics> run_batch(std::span<const SimConfig> jobs,
                                  bool parallel);

}  // namespace fdmac::sim
