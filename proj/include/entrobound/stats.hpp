#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace entrobound {

/// Mean/variance/skewness/kurtosis accumulator with pairwise merging
/// (Chan et al. for M2, Pébay for M3 and M4).
class Moments {
 public:
  void add(double x) {
    const double n1 = static_cast<double>(n_);
    ++n_;
    const double n = static_cast<double>(n_);
    const double delta = x - mean_;
    const double dn = delta / n;
    const double dn2 = dn * dn;
    const double term = delta * dn * n1;
    mean_ += dn;
    m4_ += term * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * m2_ - 4.0 * dn * m3_;
    m3_ += term * dn * (n - 2.0) - 3.0 * dn * m2_;
    m2_ += term;
  }

  void merge(const Moments& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    const double d = o.mean_ - mean_;
    const double d2 = d * d;
    const double m2 = m2_ + o.m2_ + d2 * na * nb / n;
    const double m3 = m3_ + o.m3_ + d * d2 * na * nb * (na - nb) / (n * n) +
                      3.0 * d * (na * o.m2_ - nb * m2_) / n;
    const double m4 = m4_ + o.m4_ + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                      6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) +
                      4.0 * d * (na * o.m3_ - nb * m3_) / n;
    mean_ = (na * mean_ + nb * o.mean_) / n;
    m2_ = m2;
    m3_ = m3;
    m4_ = m4;
    n_ += o.n_;
  }

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance.
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  /// Standard error of the mean.
  double std_error() const { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }
  /// Sample excess kurtosis; 0 for fewer than four points or zero variance.
  double excess_kurtosis() const {
    if (n_ < 4 || m2_ <= 0.0) return 0.0;
    return static_cast<double>(n_) * m4_ / (m2_ * m2_) - 3.0;
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
};

/// Running means and co-moments of a K-vector, mergeable.
template <std::size_t K>
class CoMoments {
 public:
  void add(const std::array<double, K>& x) {
    ++n_;
    const double n = static_cast<double>(n_);
    std::array<double, K> d{};
    for (std::size_t i = 0; i < K; ++i) {
      d[i] = x[i] - mean_[i];
      mean_[i] += d[i] / n;
    }
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) c_[i][j] += d[i] * (x[j] - mean_[j]);
    }
  }

  void merge(const CoMoments& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    std::array<double, K> d{};
    for (std::size_t i = 0; i < K; ++i) d[i] = o.mean_[i] - mean_[i];
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) c_[i][j] += o.c_[i][j] + d[i] * d[j] * na * nb / n;
    }
    for (std::size_t i = 0; i < K; ++i) mean_[i] += d[i] * nb / n;
    n_ += o.n_;
  }

  std::uint64_t count() const { return n_; }
  double mean(std::size_t i) const { return mean_[i]; }
  double covariance(std::size_t i, std::size_t j) const {
    return n_ > 1 ? c_[i][j] / static_cast<double>(n_ - 1) : 0.0;
  }
  /// Standard error of sum_i w_i * mean_i (delta method for a linearized
  /// statistic with gradient w).
  double linear_std_error(const std::array<double, K>& w) const {
    if (n_ < 2) return 0.0;
    double v = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) v += w[i] * w[j] * covariance(i, j);
    }
    return std::sqrt(std::max(v, 0.0) / static_cast<double>(n_));
  }

 private:
  std::uint64_t n_ = 0;
  std::array<double, K> mean_{};
  std::array<std::array<double, K>, K> c_{};
};

/// A Monte Carlo estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

/// Entropy E[Y log Y] - E[Y] log E[Y] from co-moments of (Y log Y, Y), with
/// a delta-method standard error.
template <std::size_t K>
Estimate entropy_estimate(const CoMoments<K>& acc, std::size_t ylogy, std::size_t y) {
  const double m = acc.mean(y);
  if (!(m > 0.0)) return {};
  const double value = acc.mean(ylogy) - m * std::log(m);
  std::array<double, K> w{};
  w[ylogy] = 1.0;
  w[y] = -(std::log(m) + 1.0);
  return {value, acc.linear_std_error(w)};
}

/// y log y with the 0 log 0 = 0 convention.
inline double xlogx(double y) { return y > 0.0 ? y * std::log(y) : 0.0; }

}  // namespace entrobound
