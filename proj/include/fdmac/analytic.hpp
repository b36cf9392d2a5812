#pragma once

#include <vector>

#include "fdmac/params.hpp"

// Closed-form and numerical saturation-throughput model: the per-user backoff
// Markov chain, the coupled attempt/success fixed point, cycle-length
// formulas and the resulting normalized throughput, plus the blind-transmitter
// CSMA/CA baseline under identical cycle accounting.
//
// All functions are pure; they can be called concurrently from any thread.

namespace fdmac::analytic {

// Jointly solved per-slot attempt probability and perceived-success
// probability, with solver diagnostics.
struct FixedPointSolution {
  double p_attempt = 0.0;
  double p_success = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

// Cycle probabilities and lengths feeding the throughput ratio.
struct ThroughputReport {
  double p_empty = 0.0;           // no transmission starts
  double p_single_success = 0.0;  // exactly one user starts
  double p_collision = 0.0;       // two or more start together
  double len_success = 0.0;       // mean collision-free transmission length
  double len_collision = 0.0;     // mean collision length
  double throughput = 0.0;        // fraction of time in collision-free use
};

// Stationary distribution of the backoff chain: probability of holding
// residual counter w at stage W, for w in [0, cw_min * 2^W).
struct StationaryDistribution {
  std::vector<std::vector<double>> by_stage;  // by_stage[W][w]

  double sum() const;
  // Probability of sitting at a zero counter, i.e. transmitting next slot.
  double attempt_probability() const;
};

// Contention window at the given backoff stage: cw_min * 2^stage.
// Throws std::invalid_argument when stage lies outside [0, w_max].
std::int64_t cw_of_stage(int stage, const ProtocolParams& params);

// Per-slot probability that a user begins transmission, as a function of the
// perceived-success probability. The formula has a removable singularity at
// p_success = 1/2; the analytic limit 4 / (2(cw_min+1) + cw_min*w_max) is
// substituted when |2*p_success - 1| < 1e-9.
double attempt_probability(double p_success, const ProtocolParams& params);

// Probability that a transmission attempt ends up collision-free after
// overlapping exactly one other transmitter for l slots (l = 0: no overlap;
// l = packet_len: the full packet was spent colliding).
double collision_free_start_prob(int l, double p_attempt,
                                 const ProtocolParams& params);

// Probability of carrying a collision-free transmission through l more slots
// without a false alarm: (1 - p_false_alarm)^l.
double residual_success_prob(int l, const ProtocolParams& params);

// Perceived-success probability p_s at a given attempt probability, computed
// by direct summation over collision lengths (the canonical route).
double success_probability(double p_attempt, const ProtocolParams& params);

// Geometric-series fast path for success_probability. Falls back to the
// direct sum when its denominator 1 - p_false_alarm - p_miss^2 vanishes.
// Not an identity: it overstates the collision branch by a relative O(p_miss)
// term, so callers that care use the canonical sum.
double success_probability_closed_form(double p_attempt,
                                       const ProtocolParams& params);

// Solves p = attempt_probability(success_probability(p)) by bisection on
// (1e-12, 1 - 1e-12); residual <= 1e-10 on success, at most 200 iterations.
// Requires mode == FullDuplex. Throws SolverError on failure.
FixedPointSolution solve_fixed_point(const ProtocolParams& params);

// Builds the full backoff-chain transition structure and solves the
// stationary linear system directly. Serves as the independent oracle for
// attempt_probability: the summed zero-counter mass must match it to 1e-9.
StationaryDistribution stationary_distribution(double p_success,
                                               const ProtocolParams& params);

// Mean length of a collision-free transmission (truncated by false alarms);
// equals packet_len exactly when p_false_alarm = 0.
double avg_success_length(const ProtocolParams& params);

// Mean collision length at attempt probability p_attempt. Exactly 1 when
// p_miss = 0. Throws UndefinedQuantityError when collisions have zero
// probability (m_users == 1 or degenerate p_attempt).
double avg_collision_length(double p_attempt, const ProtocolParams& params);

// Full-duplex throughput report at a given attempt probability.
ThroughputReport throughput(double p_attempt, const ProtocolParams& params);

// Fixed point of the blind-transmitter (basic access) backoff model:
// attempt probability tau with conditional collision probability
// 1 - (1-tau)^(M-1). p_success carries the non-collision probability.
// Requires mode == CsmaCa.
FixedPointSolution csma_solve(const ProtocolParams& params);

// CSMA/CA throughput at a solved attempt probability: successes and
// collisions both occupy a full packet, with the same cycle accounting as the
// full-duplex report.
ThroughputReport csma_throughput_at(double tau, const ProtocolParams& params);

// Convenience: solves the baseline fixed point, then evaluates the report.
ThroughputReport csma_throughput(const ProtocolParams& params);

// Mode-dispatched solve + report, the pipeline behind `analyze`.
struct Analysis {
  FixedPointSolution solution;
  ThroughputReport report;
};
Analysis analyze(const ProtocolParams& params);

}  // namespace fdmac::analytic
