#pragma once
// Chebyshev-Lobatto interpolation with barycentric evaluation.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mssk::num {

class Cheb {
 public:
  // n+1 Lobatto points on [a,b]; values filled by the caller via fit()
  static std::vector<double> points(double a, double b, int n) {
    std::vector<double> x(n + 1);
    double mid = 0.5 * (a + b);
    double half = 0.5 * (b - a);
    for (int j = 0; j <= n; ++j) x[j] = mid + half * std::cos(M_PI * j / n);
    return x;
  }

  Cheb(double a, double b, std::vector<double> values)
      : a_(a), b_(b), v_(std::move(values)) {
    if (v_.size() < 2) throw std::invalid_argument("Cheb: need >= 2 points");
    n_ = static_cast<int>(v_.size()) - 1;
    x_ = points(a_, b_, n_);
  }

  template <class F>
  static Cheb fit(F&& f, double a, double b, int n) {
    auto x = points(a, b, n);
    std::vector<double> v(x.size());
    for (size_t j = 0; j < x.size(); ++j) v[j] = f(x[j]);
    return Cheb(a, b, std::move(v));
  }

  double eval(double x) const {
    // barycentric form; weights for Lobatto points are (-1)^j, halved at ends
    double num = 0.0, den = 0.0;
    for (int j = 0; j <= n_; ++j) {
      double d = x - x_[j];
      if (d == 0.0) return v_[j];
      double w = (j % 2 == 0) ? 1.0 : -1.0;
      if (j == 0 || j == n_) w *= 0.5;
      double t = w / d;
      num += t * v_[j];
      den += t;
    }
    return num / den;
  }

  double lo() const { return a_; }
  double hi() const { return b_; }

 private:
  double a_, b_;
  int n_;
  std::vector<double> x_;
  std::vector<double> v_;
};

}  // namespace mssk::num
