#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace sidelink::stats {

// Neumaier-compensated accumulator. Reductions are always done in index
// order so results do not depend on how trials were scheduled.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct Summary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double variance = std::numeric_limits<double>::quiet_NaN();  // population
  std::size_t count = 0;

  double stddev() const { return std::sqrt(variance); }
  // Standard error of the mean (uses the unbiased sample variance).
  double std_error() const {
    if (count < 2) return std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(count);
    return std::sqrt(variance * n / (n - 1.0) / n);
  }
};

// Mean and population variance over the finite entries of `xs`; NaN entries
// mark undefined samples and are skipped.
inline Summary summarize(std::span<const double> xs) {
  CompensatedSum sum;
  std::size_t n = 0;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    sum.add(x);
    ++n;
  }
  Summary s;
  s.count = n;
  if (n == 0) return s;
  s.mean = sum.value() / static_cast<double>(n);
  CompensatedSum sq;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    const double d = x - s.mean;
    sq.add(d * d);
  }
  s.variance = sq.value() / static_cast<double>(n);
  return s;
}

// One-sided 95% normal quantile.
inline constexpr double kZ95 = 1.6448536269514722;

// Lower confidence bound on mean(a) - mean(b) for independent samples
// (Welch standard error, normal quantile).
inline double welch_lower_bound(std::span<const double> a, std::span<const double> b,
                                double z = kZ95) {
  const Summary sa = summarize(a);
  const Summary sb = summarize(b);
  const double se = std::hypot(sa.std_error(), sb.std_error());
  return (sa.mean - sb.mean) - z * se;
}

// Lower confidence bound on mean(a - b) for samples paired by index.
// Pairs where either side is NaN are dropped.
inline double paired_lower_bound(std::span<const double> a, std::span<const double> b,
                                 double z = kZ95) {
  if (a.size() != b.size()) throw std::invalid_argument("paired samples differ in length");
  std::vector<double> d;
  d.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    d.push_back(a[i] - b[i]);
  }
  const Summary s = summarize(d);
  return s.mean - z * s.std_error();
}

}  // namespace sidelink::stats
