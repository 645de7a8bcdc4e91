#include "nes/sleep_controller.hpp"

#include <algorithm>
#include <sstream>

#include "nes/scheduler.hpp"

namespace nes {

std::string_view to_string(RuCapability c) {
  return c == RuCapability::MicroOnly ? "mu" : "mu+DS";
}

void ActivityTimeline::mark(std::int64_t first_symbol, std::int64_t count, Flag flag) {
  const std::int64_t begin = std::max<std::int64_t>(first_symbol, 0);
  const std::int64_t end = std::min(first_symbol + count, size());
  for (std::int64_t i = begin; i < end; ++i) flags_[static_cast<std::size_t>(i)] |= flag;
}

ActivityTimeline ActivityTimeline::from_schedule(const TimeGrid& grid,
                                                 std::span<const SlotAllocation> allocations,
                                                 std::span<const SignalingEvent> signaling) {
  ActivityTimeline activity(grid);
  for (const auto& a : allocations) {
    if (a.data_prbs() > 0) {
      activity.mark(a.slot * TimeGrid::kSymbolsPerSlot, TimeGrid::kSymbolsPerSlot, kDlData);
    }
  }
  for (const auto& e : signaling) {
    activity.mark(e.start_symbol, e.symbols,
                  e.direction == LinkDirection::DlTransmit ? kDlSignaling : kUlReceive);
  }
  return activity;
}

StateTimeline classify_symbols(const ActivityTimeline& activity, RuCapability /*capability*/,
                               bool sleep_enabled, int min_idle_symbols_for_micro,
                               int rx_guard_symbols) {
  StateTimeline timeline;
  timeline.grid = activity.grid();
  const std::int64_t n = activity.size();
  auto receives = [&](std::int64_t s) {
    return s >= 0 && s < n && (activity.flags(s) & ActivityTimeline::kUlReceive);
  };
  std::int64_t i = 0;
  while (i < n) {
    const std::uint8_t f = activity.flags(i);
    if (f & (ActivityTimeline::kDlData | ActivityTimeline::kDlSignaling)) {
      timeline.append(PowerState::ActiveTx, 1);
      ++i;
      continue;
    }
    if (f & ActivityTimeline::kUlReceive) {
      timeline.append(PowerState::ActiveRx, 1);
      ++i;
      continue;
    }
    std::int64_t j = i;
    while (j < n && activity.idle(j)) ++j;
    std::int64_t head = 0;
    std::int64_t tail = 0;
    if (rx_guard_symbols > 0) {
      if (receives(i - 1)) head = std::min<std::int64_t>(rx_guard_symbols, j - i);
      if (receives(j)) tail = std::min<std::int64_t>(rx_guard_symbols, j - i - head);
    }
    const std::int64_t body = j - i - head - tail;
    const bool sleeps = sleep_enabled && body >= min_idle_symbols_for_micro;
    timeline.append(PowerState::IdleRx, head);
    timeline.append(sleeps ? PowerState::MicroSleep : PowerState::IdleTx, body);
    timeline.append(PowerState::IdleRx, tail);
    i = j;
  }
  return timeline;
}

std::vector<IdleGap> find_idle_gaps(const ActivityTimeline& activity) {
  std::vector<IdleGap> gaps;
  const std::int64_t n = activity.size();
  std::int64_t i = 0;
  while (i < n) {
    if (!activity.idle(i)) {
      ++i;
      continue;
    }
    std::int64_t j = i;
    while (j < n && activity.idle(j)) ++j;
    gaps.push_back({i, j - i});
    i = j;
  }
  return gaps;
}

StateTimeline apply_deep_sleep_oracle(const StateTimeline& timeline, std::span<const IdleGap> gaps,
                                      const RelativePowerModel& model, RuCapability capability) {
  if (capability == RuCapability::MicroOnly) return timeline;

  const std::int64_t threshold = timeline.grid.symbols_ceil(model.deep_sleep_qualifying_gap);
  std::vector<IdleGap> eligible;
  for (const auto& g : gaps) {
    if (g.length >= threshold) eligible.push_back(g);
  }
  if (eligible.empty()) return timeline;

  StateTimeline out;
  out.grid = timeline.grid;
  out.transitions = timeline.transitions;
  auto gap = eligible.begin();
  for (const auto& seg : timeline.segments) {
    std::int64_t pos = seg.start;
    const std::int64_t end = seg.start + seg.duration;
    while (pos < end) {
      while (gap != eligible.end() && gap->start + gap->length <= pos) ++gap;
      if (gap == eligible.end() || gap->start >= end) {
        out.append(seg.state, end - pos);
        pos = end;
      } else if (pos < gap->start) {
        out.append(seg.state, gap->start - pos);
        pos = gap->start;
      } else {
        const std::int64_t stop = std::min(end, gap->start + gap->length);
        out.append(PowerState::DeepSleep, stop - pos);
        pos = stop;
      }
    }
  }
  for (const auto& g : eligible) {
    out.transitions.push_back({g.start, RampDirection::Down});
    out.transitions.push_back({g.start + g.length, RampDirection::Up});
  }
  std::sort(out.transitions.begin(), out.transitions.end(),
            [](const TransitionEvent& a, const TransitionEvent& b) {
              return a.symbol != b.symbol ? a.symbol < b.symbol : a.direction > b.direction;
            });
  return out;
}

GapHistogram GapHistogram::of(std::span<const IdleGap> gaps, const TimeGrid& grid) {
  GapHistogram h;
  for (const auto& g : gaps) {
    const double ms = grid.seconds_from_symbols(g.length) * 1e3;
    std::size_t b = 0;
    while (b < kUpperMs.size() && ms >= kUpperMs[b] - 1e-9) ++b;
    ++h.counts[b];
  }
  return h;
}

std::string GapHistogram::bucket_label(std::size_t i) {
  std::ostringstream os;
  if (i < kUpperMs.size()) {
    os << "lt" << kUpperMs[i] << "ms";
  } else {
    os << "ge" << kUpperMs.back() << "ms";
  }
  return os.str();
}

}  // namespace nes
