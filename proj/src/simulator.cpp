#include "fdmac/simulator.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace fdmac::sim {

namespace {
constexpr std::int64_t kStallLimit = 1'000'000'000;
}

void SimConfig::validate() const {
  params.validate();
  if (warmup_attempts < 0)
    throw std::invalid_argument("warmup_attempts must be >= 0");
  if (measure_attempts < 1)
    throw std::invalid_argument("measure_attempts must be >= 1");
}

Simulation::Simulation(const SimConfig& config) : cfg_(config) {
  cfg_.validate();
  const int m = cfg_.params.m_users;
  users_.resize(static_cast<std::size_t>(m));
  rng_.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    rng_.push_back(Xoshiro256pp::for_user(cfg_.seed, i));
  const auto cw0 = static_cast<std::uint64_t>(cfg_.params.cw_min);
  for (int i = 0; i < m; ++i)
    users_[static_cast<std::size_t>(i)].backoff_residual =
        static_cast<std::int64_t>(rng_[static_cast<std::size_t>(i)].next_below(cw0));
  metrics_.collision_event_lengths.assign(
      static_cast<std::size_t>(cfg_.params.packet_len) + 1, 0);
  measuring_ = cfg_.warmup_attempts == 0;
}

void Simulation::rebuild_active() {
  active_.clear();
  for (int i = 0; i < static_cast<int>(users_.size()); ++i)
    if (users_[static_cast<std::size_t>(i)].phase == Phase::Transmitting)
      active_.push_back(i);
  in_event_ = false;
  collision_run_ = 0;
  solo_owner_ = -1;
}

void Simulation::begin_event() {
  in_event_ = true;
  const int k = static_cast<int>(active_.size());
  // Flip to the measurement window before counting, so the window opens
  // exactly on a transmission start.
  if (!measuring_ && attempts_total_ >= cfg_.warmup_attempts) {
    measuring_ = true;
    const auto hist_size = metrics_.collision_event_lengths.size();
    metrics_ = SimMetrics{};
    metrics_.collision_event_lengths.assign(hist_size, 0);
  }
  attempts_total_ += k;
  if (measuring_) metrics_.attempts += static_cast<std::uint64_t>(k);
  slots_since_attempt_ = 0;
  solo_owner_ = (k == 1) ? active_.front() : -1;
  const bool collided = k >= 2;
  for (int u : active_) {
    UserState& st = users_[static_cast<std::size_t>(u)];
    assert(st.tx_elapsed == 0);
    st.event_collided = collided;
  }
}

void Simulation::end_event() {
  in_event_ = false;
  if (measuring_ &&
      metrics_.attempts >= static_cast<std::uint64_t>(cfg_.measure_attempts))
    done_ = true;
}

void Simulation::close_collision_run() {
  if (collision_run_ <= 0) return;
  auto& hist = metrics_.collision_event_lengths;
  const auto len = static_cast<std::size_t>(collision_run_);
  if (len >= hist.size()) hist.resize(len + 1, 0);
  ++hist[len];
  ++metrics_.collision_events;
  collision_run_ = 0;
}

void Simulation::stop_transmitter(int user, bool success) {
  UserState& st = users_[static_cast<std::size_t>(user)];
  if (solo_owner_ == user) {
    ++metrics_.solo_events;
    metrics_.solo_slots += static_cast<std::uint64_t>(st.tx_elapsed);
    solo_owner_ = -1;
  }
  if (success) {
    ++metrics_.perceived_successes;
    st.stage = 0;
  } else {
    st.stage = std::min(st.stage + 1, cfg_.params.w_max);
  }
  if (st.stage < 0 || st.stage > cfg_.params.w_max)
    throw std::logic_error("backoff stage left its bounds");
  const auto cw = static_cast<std::uint64_t>(cfg_.params.cw_min) << st.stage;
  st.backoff_residual = static_cast<std::int64_t>(
      rng_[static_cast<std::size_t>(user)].next_below(cw));
  st.tx_elapsed = 0;
  st.difs_progress = 0;
  st.phase = Phase::WaitingDifs;
}

SlotOutcome Simulation::busy_slot_core() {
  SlotOutcome out;
  const int k = static_cast<int>(active_.size());
  out.transmitters = k;
  if (!in_event_) {
    begin_event();
    out.started = k;
  }
  ++metrics_.total_slots;
  ++slots_since_attempt_;
  if (k == 1)
    ++metrics_.single_tx_slots;
  else {
    ++metrics_.collision_slots;
    ++collision_run_;
  }

  const ProtocolParams& p = cfg_.params;
  scratch_.clear();
  for (int u : active_) {
    UserState& st = users_[static_cast<std::size_t>(u)];
    ++st.tx_elapsed;
    assert(st.tx_elapsed <= p.packet_len);
    bool stops = false;
    bool success = false;
    if (p.mode == Mode::FullDuplex) {
      bool busy;
      if (k == 1) {
        busy = rng_[static_cast<std::size_t>(u)].next_unit() < p.p_false_alarm;
        if (busy) ++metrics_.false_alarm_truncations;
      } else if (k == 2) {
        busy = rng_[static_cast<std::size_t>(u)].next_unit() >= p.p_miss;
      } else {
        busy = true;  // several interferers drown the self-interference
      }
      if (busy) {
        // Sensing wins over completion: a busy-sensed final slot is a
        // perceived failure even though the packet went out in full.
        stops = true;
        ++out.aborted;
      } else if (st.tx_elapsed == p.packet_len) {
        stops = true;
        success = true;
        ++out.finished;
      }
    } else if (st.tx_elapsed == p.packet_len) {
      stops = true;
      success = !st.event_collided;
      if (success)
        ++out.finished;
      else
        ++out.aborted;
    }
    if (stops)
      stop_transmitter(u, success);
    else
      scratch_.push_back(u);
  }
  active_.swap(scratch_);
  if (k >= 2 && active_.size() < 2) close_collision_run();
  if (active_.empty()) end_event();
  return out;
}

void Simulation::reset_contenders() {
  for (auto& st : users_) {
    if (st.phase == Phase::Transmitting) continue;
    st.difs_progress = 0;
    st.phase = Phase::WaitingDifs;
  }
}

SlotOutcome Simulation::idle_slot() {
  SlotOutcome out;
  ++metrics_.total_slots;
  ++metrics_.idle_slots;
  if (++slots_since_attempt_ > kStallLimit)
    throw StallError("no transmission attempt within the progress budget");
  const int difs = cfg_.params.difs;
  for (int i = 0; i < static_cast<int>(users_.size()); ++i) {
    UserState& st = users_[static_cast<std::size_t>(i)];
    if (st.difs_progress < difs) {
      if (++st.difs_progress == difs) st.phase = Phase::Backoff;
    } else if (st.backoff_residual > 0) {
      --st.backoff_residual;
    }
    if (st.difs_progress >= difs && st.backoff_residual == 0) {
      st.phase = Phase::Transmitting;  // transmits from the next slot
      active_.push_back(i);
    }
  }
  return out;
}

void Simulation::advance_idle_bulk() {
  const int difs = cfg_.params.difs;
  // A user that is already armed with a zero counter still needs one idle
  // slot to fire, hence the floor of 1.
  auto ready_in = [difs](const UserState& st) {
    const std::int64_t deficit = difs - st.difs_progress;
    return std::max<std::int64_t>(1, deficit + st.backoff_residual);
  };
  std::int64_t delta = std::numeric_limits<std::int64_t>::max();
  for (const auto& st : users_) delta = std::min(delta, ready_in(st));
  metrics_.total_slots += static_cast<std::uint64_t>(delta);
  metrics_.idle_slots += static_cast<std::uint64_t>(delta);
  slots_since_attempt_ += delta;
  if (slots_since_attempt_ > kStallLimit)
    throw StallError("no transmission attempt within the progress budget");
  for (int i = 0; i < static_cast<int>(users_.size()); ++i) {
    UserState& st = users_[static_cast<std::size_t>(i)];
    const bool starts = ready_in(st) == delta;
    const std::int64_t deficit = difs - st.difs_progress;
    const std::int64_t adv = std::min(delta, deficit);
    st.difs_progress += static_cast<int>(adv);
    if (st.difs_progress >= difs) st.phase = Phase::Backoff;
    st.backoff_residual -= std::min(delta - adv, st.backoff_residual);
    if (starts) {
      st.phase = Phase::Transmitting;
      active_.push_back(i);
    }
  }
}

void Simulation::csma_event_bulk() {
  // Blind transmitters draw nothing mid-packet and all stop together, so the
  // whole event collapses into one update.
  begin_event();
  const int k = static_cast<int>(active_.size());
  const int len = cfg_.params.packet_len;
  metrics_.total_slots += static_cast<std::uint64_t>(len);
  slots_since_attempt_ += len;
  if (k == 1) {
    metrics_.single_tx_slots += static_cast<std::uint64_t>(len);
  } else {
    metrics_.collision_slots += static_cast<std::uint64_t>(len);
    collision_run_ = len;
    close_collision_run();
  }
  scratch_ = active_;
  active_.clear();
  for (int u : scratch_) {
    UserState& st = users_[static_cast<std::size_t>(u)];
    st.tx_elapsed = len;
    stop_transmitter(u, !st.event_collided);
  }
  end_event();
  reset_contenders();
}

SlotOutcome Simulation::step() {
  if (active_.empty()) return idle_slot();
  const SlotOutcome out = busy_slot_core();
  reset_contenders();  // every busy slot re-arms the contenders' DIFS
  return out;
}

SimMetrics Simulation::run() {
  while (!done_) {
    if (active_.empty()) {
      advance_idle_bulk();
    } else if (cfg_.params.mode == Mode::CsmaCa) {
      csma_event_bulk();
    } else {
      busy_slot_core();
      if (active_.empty()) reset_contenders();
    }
  }
  finalize();
  return metrics_;
}

SimMetrics Simulation::run_reference() {
  while (!done_) step();
  finalize();
  return metrics_;
}

void Simulation::finalize() {
  metrics_.throughput_estimate =
      metrics_.total_slots == 0
          ? 0.0
          : static_cast<double>(metrics_.single_tx_slots) /
                static_cast<double>(metrics_.total_slots);
}

SimMetrics run(const SimConfig& config) { return Simulation(config).run(); }

SimMetrics run_reference(const SimConfig& config) {
  return Simulation(config).run_reference();
}

double empirical_collision_length(const SimMetrics& metrics) {
  std::uint64_t events = 0;
  std::uint64_t slots = 0;
  const auto& hist = metrics.collision_event_lengths;
  for (std::size_t d = 0; d < hist.size(); ++d) {
    events += hist[d];
    slots += hist[d] * static_cast<std::uint64_t>(d);
  }
  if (events == 0)
    throw UndefinedQuantityError("no collision event was recorded");
  return static_cast<double>(slots) / static_cast<double>(events);
}

}  // namespace fdmac::sim
