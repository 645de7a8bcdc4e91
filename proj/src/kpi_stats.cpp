#include "nes/kpi_stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "nes/error.hpp"

namespace nes {

double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw EmptyInputError("percentile of an empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

SummaryStats summarize(std::span<const double> values) {
  if (values.empty()) throw EmptyInputError("cannot summarize an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  // Compensated sum over the sorted sample so the mean does not depend on
  // input order.
  double sum = 0.0;
  double carry = 0.0;
  for (double v : sorted) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }

  SummaryStats s;
  s.n = sorted.size();
  s.mean = sum / static_cast<double>(s.n);
  s.min = sorted.front();
  s.max = sorted.back();
  s.p25 = percentile_sorted(sorted, 0.25);
  s.median = percentile_sorted(sorted, 0.5);
  s.p75 = percentile_sorted(sorted, 0.75);
  // Guard the box ordering against round-off in the mean-free fields.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

double relative_saving(const SummaryStats& benchmark, const SummaryStats& baseline) {
  if (!(baseline.mean > 0.0)) throw ConfigError("baseline mean must be positive");
  return (baseline.mean - benchmark.mean) / baseline.mean;
}

}  // namespace nes
