#pragma once
// Streaming moment accumulation (Welford) with exact pairwise merge.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace mssk::stats {

class Running {
 public:
  void add(double x) {
    ++n_;
    double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const Running& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    double na = static_cast<double>(n_);
    double nb = static_cast<double>(o.n_);
    double d = o.mean_ - mean_;
    double nt = na + nb;
    mean_ += d * nb / nt;
    m2_ += o.m2_ + d * d * na * nb / nt;
    n_ += o.n_;
  }

  int64_t count() const { return n_; }
  double mean() const { return mean_; }

  double variance() const {  // sample variance, n-1 denominator
    if (n_ < 2) return 0.0;
    return m2_ / static_cast<double>(n_ - 1);
  }

  double stderr_mean() const {
    if (n_ < 2) return 0.0;
    return std::sqrt(variance() / static_cast<double>(n_));
  }

 private:
  int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Reduce a buffer of per-replica values in index order. Filling the buffer
// may happen on any number of threads; the reduction order is fixed, so the
// result does not depend on the thread count.
inline Running reduce_ordered(std::span<const double> xs) {
  Running r;
  for (double x : xs) r.add(x);
  return r;
}

// variance of the sample variance via fourth central moment, for putting an
// error bar on Var estimates
struct VarianceEstimate {
  double var = 0.0;
  double stderr_var = 0.0;
};

inline VarianceEstimate variance_with_error(std::span<const double> xs) {
  size_t n = xs.size();
  if (n < 4) throw std::invalid_argument("variance_with_error: need n >= 4");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    double d = x - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  double nn = static_cast<double>(n);
  VarianceEstimate out;
  out.var = m2 * nn / (nn - 1.0);
  out.stderr_var = std::sqrt(std::max(0.0, m4 - m2 * m2) / nn);
  return out;
}

}  // namespace mssk::stats
