#pragma once

#include <span>

namespace nes {

/// Box-plot statistics. Percentiles use inclusive linear interpolation
/// between order statistics: position p * (n - 1) in the sorted sample.
struct SummaryStats {
  double mean = 0.0;
  double p25 = 0.0;
  double median = 0.0;
  double p75 = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

inline constexpr const char* kPercentileMethod = "inclusive-linear";

/// EmptyInputError for an empty sample.
SummaryStats summarize(std::span<const double> values);

/// Inclusive linear-interpolation percentile of an already sorted sample.
double percentile_sorted(std::span<const double> sorted, double p);

/// Fractional reduction of the mean relative to the baseline.
/// ConfigError when the baseline mean is not positive.
double relative_saving(const SummaryStats& benchmark, const SummaryStats& baseline);

}  // namespace nes
