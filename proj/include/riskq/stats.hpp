#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace riskq {

struct Summary {
  long count = 0;
  double mean = 0.0;
  double stddev = 0.0;   // unbiased (n-1)
  double stderr_ = 0.0;  // stddev / sqrt(n)
};

Summary summarize(std::span<const double> sample);

/// Two-sample Welch statistic. Both samples degenerate: 0 when the means
/// coincide exactly, a signed infinity otherwise.
double welch_t(std::span<const double> a, std::span<const double> b);

/// One-sample t against a known mean, same degenerate convention.
double one_sample_t(std::span<const double> a, double mu0);

/// Sorted (value, k/n) pairs.
std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> sample);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap interval for stddev(a) - stddev(b).
Interval bootstrap_std_diff_ci(std::span<const double> a, std::span<const double> b,
                               int resamples, double confidence, std::uint64_t seed);

}  // namespace riskq
