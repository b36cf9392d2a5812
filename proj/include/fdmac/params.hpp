#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fdmac {

// Which MAC discipline a scenario runs under. FullDuplex transmitters keep
// sensing while they transmit; CsmaCa transmitters are blind until the
// packet ends.
enum class Mode { FullDuplex, CsmaCa };

const char* to_string(Mode mode);

// Full scenario description. All durations are expressed in sensing slots.
struct ProtocolParams {
  int m_users = 100;          // number of contending transceiver pairs
  int packet_len = 1000;      // fixed packet length, slots
  int cw_min = 16;            // initial contention window
  int w_max = 11;             // highest backoff stage; window doubles per stage
  double p_false_alarm = 1e-3;  // per-slot false alarm while transmitting alone
  double p_miss = 1e-2;         // per-slot miss while exactly two users collide
  int difs = 2;               // consecutive idle slots required before countdown
  Mode mode = Mode::FullDuplex;

  // Contention window at the highest stage, cw_min * 2^w_max.
  std::int64_t cw_max() const {
    return static_cast<std::int64_t>(cw_min) << w_max;
  }

  // Throws std::invalid_argument on the first violated constraint.
  void validate() const;
};

// A formula was evaluated at inputs outside its physical domain; carries the
// raw offending value.
class ModelDomainError : public std::runtime_error {
 public:
  ModelDomainError(const std::string& what, double raw)
      : std::runtime_error(what), raw_value(raw) {}
  double raw_value;
};

// Fixed-point solver gave up; carries the last iterate for diagnostics.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double iterate, double residual,
              int iterations)
      : std::runtime_error(what),
        last_iterate(iterate),
        last_residual(residual),
        iterations(iterations) {}
  double last_iterate;
  double last_residual;
  int iterations;
};

// A requested quantity is undefined for the given inputs (e.g. mean collision
// length when collisions have probability zero).
class UndefinedQuantityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The simulation made no progress for an implausibly long stretch.
class StallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fdmac
