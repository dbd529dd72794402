#pragma once

#include <cstddef>
#include <vector>

namespace nwulab::bench {

/// Descriptive statistics over one sample set.
struct Summary {
  size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  size_t outliers = 0;  // beyond 1.5 IQR outside the quartiles

  bool operator==(const Summary&) const = default;
};

/// Linear-interpolation quantile (the R-7 rule spreadsheet software
/// uses). `sorted` must be ascending and non-empty; q in [0, 1].
double quantile(const std::vector<double>& sorted, double q);

Summary summarize(const std::vector<double>& samples);

}  // namespace nwulab::bench
