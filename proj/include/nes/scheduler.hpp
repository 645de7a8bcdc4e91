#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "nes/signaling.hpp"
#include "nes/traffic.hpp"

namespace nes {

/// Traffic gating: withhold normal-priority data for up to tau.
///
/// Release instants sit on a grid of multiples of tau anchored at t = 0. A
/// closed gate opens at the first grid instant after the withheld arrival
/// that closed it, so added delay never exceeds tau, and for nested timers
/// (10 | 30 | 60 ms) a longer timer never releases any data earlier.
struct GatingPolicy {
  double tau_ms = 0.0;  ///< 0 disables gating
  bool bypass_on_high_priority = true;

  bool enabled() const { return tau_ms > 0.0; }
  void validate(const TimeGrid& grid) const;
};

enum class GateStatus : std::uint8_t { Open, Closed };

struct GateState {
  GateStatus status = GateStatus::Open;
  std::optional<double> timer_start;  ///< start of the current gate window, s
};

struct GateDecision {
  GateState state;
  bool release = false;  ///< everything queued so far becomes schedulable
};

/// Advances the gate to `now` given the arrivals seen since the previous step.
GateDecision gate_step(const GateState& state, const GatingPolicy& policy, double now,
                       std::span<const DataArrival> arrivals);

struct SessionGrant {
  std::uint32_t session = 0;
  int prbs = 0;
  double bits = 0.0;
};

struct SlotAllocation {
  std::int64_t slot = 0;
  std::vector<SessionGrant> per_session;
  int signaling_prbs = 0;

  int data_prbs() const;
  double data_bits() const;
};

/// FIFO of buffered data. The front `released()` entries are schedulable.
class TxQueue {
 public:
  struct Entry {
    std::uint32_t session = 0;
    double remaining_bits = 0.0;
  };

  void push(const DataArrival& arrival) { entries_.push_back({arrival.session, arrival.bits}); }
  void release_all() { released_ = entries_.size(); }

  std::size_t size() const { return entries_.size(); }
  std::size_t released() const { return released_; }
  bool empty() const { return entries_.empty(); }
  double backlog_bits() const;

 private:
  friend SlotAllocation schedule_slot(TxQueue&, const LinkModel&,
                                      std::span<const SignalingEvent>, std::int64_t, double,
                                      std::span<Session>);
  std::deque<Entry> entries_;
  std::size_t released_ = 0;
};

/// Serves released data oldest-first with the PRBs left after DL signaling.
/// Sessions whose payload is fully delivered get `slot_end_time` as their
/// completion time.
SlotAllocation schedule_slot(TxQueue& queue, const LinkModel& link,
                             std::span<const SignalingEvent> signaling_in_slot, std::int64_t slot,
                             double slot_end_time, std::span<Session> sessions);

/// Payload over sojourn (arrival to completion) in Mb/s; nullopt when the
/// session never completed.
std::optional<double> session_throughput(const Session& session);

}  // namespace nes
