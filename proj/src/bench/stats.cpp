#include "nwulab/bench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nwulab::bench {

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile order out of [0, 1]");
  if (sorted.size() == 1) return sorted.front();
  double h = q * double(sorted.size() - 1);
  size_t lo = static_cast<size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  double frac = h - double(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

Summary summarize(const std::vector<double>& samples) {
  Summary s;
  s.count = samples.size();
  if (samples.empty()) return s;

  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());

  double sum = 0.0;
  for (double v : sorted) sum += v;
  s.mean = sum / double(sorted.size());

  if (sorted.size() > 1) {
    double sq = 0.0;
    for (double v : sorted) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / double(sorted.size() - 1));
  }

  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile(sorted, 0.25);
  s.median = quantile(sorted, 0.5);
  s.q3 = quantile(sorted, 0.75);

  double iqr = s.q3 - s.q1;
  double lo_fence = s.q1 - 1.5 * iqr;
  double hi_fence = s.q3 + 1.5 * iqr;
  for (double v : sorted) {
    if (v < lo_fence || v > hi_fence) ++s.outliers;
  }
  return s;
}

}  // namespace nwulab::bench
