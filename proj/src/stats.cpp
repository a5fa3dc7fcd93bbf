#include "riskq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "riskq/common.hpp"
#include "riskq/rng.hpp"

namespace riskq {

Summary summarize(std::span<const double> sample) {
  Summary s;
  s.count = static_cast<long>(sample.size());
  if (s.count == 0) return s;
  double total = 0.0;
  for (double v : sample) total += v;
  s.mean = total / static_cast<double>(s.count);
  if (s.count < 2) return s;
  double ss = 0.0;
  for (double v : sample) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.count - 1));
  s.stderr_ = s.stddev / std::sqrt(static_cast<double>(s.count));
  return s;
}

double welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InputError("welch_t: need at least two points per sample");
  const Summary sa = summarize(a);
  const Summary sb = summarize(b);
  const double var = sa.stddev * sa.stddev / static_cast<double>(sa.count) +
                     sb.stddev * sb.stddev / static_cast<double>(sb.count);
  const double diff = sa.mean - sb.mean;
  if (var == 0.0)
    return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  return diff / std::sqrt(var);
}

double one_sample_t(std::span<const double> a, double mu0) {
  if (a.size() < 2) throw InputError("one_sample_t: need at least two points");
  const Summary s = summarize(a);
  const double diff = s.mean - mu0;
  if (s.stderr_ == 0.0)
    return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  return diff / s.stderr_;
}

std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> sample) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(sorted.size());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k)
    out.emplace_back(sorted[k], static_cast<double>(k + 1) / n);
  return out;
}

Interval bootstrap_std_diff_ci(std::span<const double> a, std::span<const double> b,
                               int resamples, double confidence, std::uint64_t seed) {
  if (a.size() < 2 || b.size() < 2) throw InputError("bootstrap: need at least two points");
  if (resamples < 10) throw InputError("bootstrap: too few resamples");
  if (confidence <= 0.0 || confidence >= 1.0) throw InputError("bootstrap: bad confidence");
  Rng rng(seed);
  std::vector<double> diffs(static_cast<std::size_t>(resamples));
  std::vector<double> buf_a(a.size()), buf_b(b.size());
  for (int r = 0; r < resamples; ++r) {
    for (auto& v : buf_a) v = a[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(a.size())))];
    for (auto& v : buf_b) v = b[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(b.size())))];
    diffs[static_cast<std::size_t>(r)] = summarize(buf_a).stddev - summarize(buf_b).stddev;
  }
  std::sort(diffs.begin(), diffs.end());
  const double tail = (1.0 - confidence) / 2.0;
  const auto pick = [&](double q) {
    const double pos = q * static_cast<double>(diffs.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= diffs.size()) return diffs.back();
    return diffs[i] * (1.0 - frac) + diffs[i + 1] * frac;
  };
  return {pick(tail), pick(1.0 - tail)};
}

}  // namespace riskq
