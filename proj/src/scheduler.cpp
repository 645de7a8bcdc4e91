#include "nes/scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "nes/error.hpp"

namespace nes {

namespace {

constexpr double kTimeEps = 1e-9;

double window_start(double t, double tau_s) {
  return std::floor(t / tau_s + kTimeEps) * tau_s;
}

}  // namespace

void GatingPolicy::validate(const TimeGrid& grid) const {
  if (tau_ms < 0.0) throw ConfigError("gating timer must be non-negative");
  if (enabled()) grid.slots_in(tau_ms * 1e-3);
}

GateDecision gate_step(const GateState& state, const GatingPolicy& policy, double now,
                       std::span<const DataArrival> arrivals) {
  if (!policy.enabled()) return {GateState{}, true};

  bool high = false;
  std::optional<double> first_normal;
  for (const auto& a : arrivals) {
    if (a.priority == Priority::High) {
      high = true;
    } else if (!first_normal || a.time < *first_normal) {
      first_normal = a.time;
    }
  }

  if (high && policy.bypass_on_high_priority) return {GateState{}, true};

  const double tau_s = policy.tau_ms * 1e-3;
  GateState next = state;
  if (next.status == GateStatus::Open && first_normal) {
    next.status = GateStatus::Closed;
    next.timer_start = window_start(*first_normal, tau_s);
  }
  if (next.status == GateStatus::Closed && now - *next.timer_start >= tau_s - kTimeEps) {
    return {GateState{}, true};
  }
  return {next, false};
}

int SlotAllocation::data_prbs() const {
  int n = 0;
  for (const auto& g : per_session) n += g.prbs;
  return n;
}

double SlotAllocation::data_bits() const {
  double b = 0.0;
  for (const auto& g : per_session) b += g.bits;
  return b;
}

double TxQueue::backlog_bits() const {
  double b = 0.0;
  for (const auto& e : entries_) b += e.remaining_bits;
  return b;
}

SlotAllocation schedule_slot(TxQueue& queue, const LinkModel& link,
                             std::span<const SignalingEvent> signaling_in_slot, std::int64_t slot,
                             double slot_end_time, std::span<Session> sessions) {
  SlotAllocation alloc;
  alloc.slot = slot;
  for (const auto& e : signaling_in_slot) {
    if (e.direction == LinkDirection::DlTransmit) alloc.signaling_prbs += e.prbs;
  }
  alloc.signaling_prbs = std::min(alloc.signaling_prbs, link.num_prbs);

  int available = link.num_prbs - alloc.signaling_prbs;
  std::size_t served = 0;
  while (served < queue.released_ && available > 0) {
    auto& entry = queue.entries_[served];
    const int wanted = link.prbs_for(entry.remaining_bits);
    const int prbs = std::min(wanted, available);
    const double capacity = prbs * link.bits_per_prb_per_slot;
    const double bits = prbs == wanted ? entry.remaining_bits : capacity;
    available -= prbs;

    if (!alloc.per_session.empty() && alloc.per_session.back().session == entry.session) {
      alloc.per_session.back().prbs += prbs;
      alloc.per_session.back().bits += bits;
    } else {
      alloc.per_session.push_back({entry.session, prbs, bits});
    }

    Session& s = sessions[entry.session];
    if (prbs == wanted) {
      entry.remaining_bits = 0.0;
      ++served;
    } else {
      entry.remaining_bits -= bits;
    }
    s.delivered_bits = std::min(s.payload_bits, s.delivered_bits + bits);
    // Completion is declared on the entry that carries the last payload bit.
    if (entry.remaining_bits == 0.0 && s.payload_bits - s.delivered_bits <= 1e-6 &&
        !s.completion_time) {
      s.delivered_bits = s.payload_bits;
      s.completion_time = slot_end_time;
    }
  }
  queue.entries_.erase(queue.entries_.begin(),
                       queue.entries_.begin() + static_cast<std::ptrdiff_t>(served));
  queue.released_ -= served;
  return alloc;
}

std::optional<double> session_throughput(const Session& session) {
  if (!session.completion_time) return std::nullopt;
  const double sojourn = *session.completion_time - session.arrival_time;
  if (!(sojourn > 0.0)) return std::nullopt;
  return session.payload_bits / sojourn * 1e-6;
}

}  // namespace nes
