#pragma once

#include <cstdint>
#include <vector>

#include "fdmac/params.hpp"
#include "fdmac/rng.hpp"

// Deterministic slot-level simulation of M saturated users contending under
// the full-duplex MAC or the blind CSMA/CA baseline.
//
// Slot semantics, applied once per slot:
//   1. the set T of transmitters is fixed at slot start (a user that became
//      ready at the end of an idle slot transmits from the next slot on);
//   2. the slot is classified by |T| (idle / single / collision);
//   3. end-of-slot sensing: a non-transmitter senses busy iff |T| >= 1; a
//      lone transmitter raises a false alarm with probability p_false_alarm;
//      each of two colliding transmitters detects the other with probability
//      1 - p_miss; with three or more transmitters detection is certain.
//      Sensing is checked before completion, so a busy-sensed final slot
//      turns an otherwise finished packet into a perceived failure;
//   4. a transmitter that sensed busy stops, bumps its stage (capped at
//      w_max) and redraws its counter; one that finished resets to stage 0;
//      under CSMA/CA transmitters are blind, always send the whole packet,
//      and bump or reset depending on whether the packet overlapped another;
//   5. a non-transmitter that sensed busy loses its DIFS progress and freezes
//      its counter; on an idle slot it first accumulates DIFS, then counts
//      down, and becomes ready once the counter hits zero with DIFS complete.
//
// A Simulation instance owns all of its state and is single-threaded;
// independent instances may run concurrently.

namespace fdmac::sim {

enum class Phase { WaitingDifs, Backoff, Transmitting };

struct UserState {
  Phase phase = Phase::WaitingDifs;
  int difs_progress = 0;             // consecutive idle slots seen so far
  std::int64_t backoff_residual = 0; // pending countdown slots
  int stage = 0;                     // current backoff stage
  int tx_elapsed = 0;                // slots of the current packet sent
  bool event_collided = false;       // CSMA: packet started alongside others
};

struct SimConfig {
  ProtocolParams params;
  std::uint64_t seed = 1;
  std::int64_t warmup_attempts = 10000;
  std::int64_t measure_attempts = 100000;

  void validate() const;
};

// Counters over the measurement window. Slot classes partition total_slots.
struct SimMetrics {
  std::uint64_t total_slots = 0;
  std::uint64_t idle_slots = 0;
  std::uint64_t single_tx_slots = 0;
  std::uint64_t collision_slots = 0;
  std::uint64_t attempts = 0;             // transmission starts
  std::uint64_t perceived_successes = 0;  // packets finished with stage reset
  std::uint64_t false_alarm_truncations = 0;
  // collision_event_lengths[d] counts maximal runs of d consecutive slots
  // with two or more transmitters.
  std::vector<std::uint64_t> collision_event_lengths;
  std::uint64_t collision_events = 0;
  std::uint64_t solo_events = 0;  // transmissions that started collision-free
  std::uint64_t solo_slots = 0;   // total length of those transmissions
  double throughput_estimate = 0.0;  // single_tx_slots / total_slots

  bool operator==(const SimMetrics&) const = default;
};

// What a single slot did, for callers driving the simulation step by step.
struct SlotOutcome {
  int transmitters = 0;
  int started = 0;
  int finished = 0;
  int aborted = 0;
};

class Simulation {
 public:
  explicit Simulation(const SimConfig& config);

  // Advances exactly one slot with the reference per-slot semantics.
  SlotOutcome step();

  // Runs warmup then measurement, fast-forwarding deterministic stretches
  // (idle gaps; CSMA packets). Draw-for-draw identical to step().
  SimMetrics run();

  // Same contract as run(), but advances strictly one slot at a time.
  // Kept as the reference implementation; results match run() bit for bit.
  SimMetrics run_reference();

  bool done() const { return done_; }
  const SimMetrics& metrics() const { return metrics_; }
  const UserState& user(int i) const { return users_[static_cast<size_t>(i)]; }
  std::int64_t attempts_total() const { return attempts_total_; }

  // Test hook: overwrite one user's state.
  void set_user(int i, const UserState& s) {
    users_[static_cast<size_t>(i)] = s;
    rebuild_active();
  }

 private:
  SlotOutcome busy_slot_core();
  SlotOutcome idle_slot();
  void advance_idle_bulk();
  void csma_event_bulk();
  void begin_event();
  void end_event();
  void reset_contenders();
  void stop_transmitter(int user, bool success);
  void close_collision_run();
  void rebuild_active();
  void finalize();

  SimConfig cfg_;
  std::vector<UserState> users_;
  std::vector<Xoshiro256pp> rng_;
  std::vector<int> active_;       // transmitting users, ascending
  std::vector<int> scratch_;
  SimMetrics metrics_;
  std::int64_t attempts_total_ = 0;
  std::int64_t attempts_window_ = 0;
  std::int64_t slots_since_attempt_ = 0;
  std::int64_t collision_run_ = 0;  // open run of >=2-transmitter slots
  int solo_owner_ = -1;             // transmitter of the current solo event
  bool in_event_ = false;
  bool measuring_ = false;
  bool done_ = false;
};

// Convenience wrappers.
SimMetrics run(const SimConfig& config);
SimMetrics run_reference(const SimConfig& config);

// Mean of the recorded collision durations. Throws UndefinedQuantityError
// when no collision was observed.
double empirical_collision_length(const SimMetrics& metrics);

}  // namespace fdmac::sim
