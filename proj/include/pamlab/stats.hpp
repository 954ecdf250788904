#pragma once

// Small statistics toolbox: running moments, standard errors, bootstrap
// confidence intervals, Kolmogorov-Smirnov distances, and a fixed-null
// normality test. Everything is deterministic given its seed.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pamlab/rng.hpp"

namespace pamlab {

class RunningMoments {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / n_;
    m2_ += d * (x - mean_);
    const double a = std::abs(x);
    max_abs_ = std::max(max_abs_, a);
  }
  long count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / (n_ - 1) : 0.0; }
  double se_mean() const { return n_ > 1 ? std::sqrt(variance() / n_) : 0.0; }
  double max_abs() const { return max_abs_; }

 private:
  long n_ = 0;
  double mean_ = 0, m2_ = 0, max_abs_ = 0;
};

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

inline double variance_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Standard error of the sample variance via the empirical fourth moment:
// Var(s^2) ~ (m4 - s^4)/n.
inline double se_of_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = mean_of(v);
  double m2 = 0, m4 = 0;
  for (double x : v) {
    const double d = (x - m) * (x - m);
    m2 += d;
    m4 += d * d;
  }
  m2 /= v.size();
  m4 /= v.size();
  return std::sqrt(std::max(0.0, m4 - m2 * m2) / v.size());
}

struct BootstrapCi {
  double low = 0, high = 0, point = 0;
  double width() const { return high - low; }
};

// Percentile bootstrap for a statistic of a sample.
template <typename Stat>
BootstrapCi bootstrap_ci(const std::vector<double>& data, Stat stat,
                         int resamples, std::uint64_t seed,
                         double level = 0.95) {
  if (data.empty()) throw std::invalid_argument("bootstrap_ci: empty sample");
  Rng rng(seed);
  std::vector<double> draws(resamples);
  std::vector<double> work(data.size());
  for (int b = 0; b < resamples; ++b) {
    for (auto& w : work)
      w = data[static_cast<size_t>(rng.uniform01() * data.size()) % data.size()];
    draws[b] = stat(work);
  }
  std::sort(draws.begin(), draws.end());
  const double a = (1.0 - level) / 2;
  auto pick = [&](double q) {
    const double pos = q * (resamples - 1);
    const int i = static_cast<int>(pos);
    const double w = pos - i;
    return i + 1 < resamples ? (1 - w) * draws[i] + w * draws[i + 1] : draws[i];
  };
  return {pick(a), pick(1 - a), stat(data)};
}

inline double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

struct KsResult {
  double statistic = 0;     // sup |F_hat - F|
  double scaled = 0;        // sqrt(n)-scaled (one-sample) or effective-n scaled
  bool reject_1pct = false; // against the asymptotic 1% critical value 1.6276
};

// One-sample KS against N(mu, sigma^2) with *known* parameters.
inline KsResult ks_normal_test(std::vector<double> x, double mu, double sigma) {
  if (x.size() < 8) throw std::invalid_argument("ks_normal_test: sample too small");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double F = std_normal_cdf((x[i] - mu) / sigma);
    d = std::max(d, std::max(F - i / n, (i + 1) / n - F));
  }
  KsResult r;
  r.statistic = d;
  r.scaled = d * std::sqrt(n);
  r.reject_1pct = r.scaled > 1.6276;  // asymptotic Kolmogorov quantile
  return r;
}

// Two-sample KS statistic sup |F1 - F2|.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  return d;
}

// Total variation distance between two probability vectors on the same index set.
inline double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0;
  for (size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace pamlab
