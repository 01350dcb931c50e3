#pragma once
// Log-domain accumulation and small numeric utilities shared by the estimators.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>

namespace mssk::num {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log(sum exp(x_i)) with the usual max shift; -inf entries are skipped.
inline double log_sum_exp(std::span<const double> xs) {
  double m = neg_inf;
  for (double x : xs) m = std::max(m, x);
  if (m == neg_inf) return neg_inf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// Streaming log-sum-exp with a dynamic shift, so terms can arrive in any
// magnitude order without overflow.
class OnlineLse {
 public:
  void add(double x) {
    if (x == neg_inf) return;
    if (x <= shift_) {
      sum_ += std::exp(x - shift_);
    } else {
      sum_ = sum_ * std::exp(shift_ - x) + 1.0;
      shift_ = x;
    }
    ++count_;
  }

  // adds w * exp(x) for linear weight w > 0
  void add_weighted(double log_w, double x) { add(log_w + x); }

  double value() const {
    if (count_ == 0) return neg_inf;
    return shift_ + std::log(sum_);
  }

  int64_t count() const { return count_; }

 private:
  double shift_ = neg_inf;
  double sum_ = 0.0;
  int64_t count_ = 0;
};

// Gray-code sweep: state index i -> i+1 flips exactly bit gray_flip_bit(i).
// Visiting i = 0 .. 2^n - 2 touches every n-bit pattern exactly once when
// starting from the all-zeros pattern.
inline int gray_flip_bit(uint64_t i) { return std::countr_zero(i + 1); }

inline double sqr(double x) { return x * x; }

// log(2 cosh x), overflow-safe
inline double log2cosh(double x) {
  double a = std::fabs(x);
  return a + std::log1p(std::exp(-2.0 * a));
}

// shortest round-trip decimal representation, used by every serializer
inline std::string format_double(double x) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

}  // namespace mssk::num
