#pragma once
// Gauss-Hermite rules, rescaled for expectations against a standard normal.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace mssk::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// QL with implicit shifts on a symmetric tridiagonal matrix. d holds the
// diagonal and e the subdiagonal (e[0] unused on input); on return d holds the
// eigenvalues and q the first component of each eigenvector.
inline void tridiag_ql(std::vector<double>& d, std::vector<double>& e,
                       std::vector<double>& q) {
  const int n = static_cast<int>(d.size());
  for (int i = 1; i < n; ++i) e[static_cast<size_t>(i - 1)] = e[static_cast<size_t>(i)];
  e[static_cast<size_t>(n - 1)] = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    for (;;) {
      int m = l;
      for (; m < n - 1; ++m) {
        double dd = std::fabs(d[static_cast<size_t>(m)]) +
                    std::fabs(d[static_cast<size_t>(m + 1)]);
        if (std::fabs(e[static_cast<size_t>(m)]) <= eps * dd) break;
      }
      if (m == l) break;
      if (++iter > 64)
        throw std::runtime_error("tridiag_ql: eigenvalue iteration stalled");
      double g = (d[static_cast<size_t>(l + 1)] - d[static_cast<size_t>(l)]) /
                 (2.0 * e[static_cast<size_t>(l)]);
      double r = std::hypot(g, 1.0);
      g = d[static_cast<size_t>(m)] - d[static_cast<size_t>(l)] +
          e[static_cast<size_t>(l)] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool underflow = false;
      for (int i = m - 1; i >= l; --i) {
        double f = s * e[static_cast<size_t>(i)];
        double b = c * e[static_cast<size_t>(i)];
        r = std::hypot(f, g);
        e[static_cast<size_t>(i + 1)] = r;
        if (r == 0.0) {
          d[static_cast<size_t>(i + 1)] -= p;
          e[static_cast<size_t>(m)] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[static_cast<size_t>(i + 1)] - p;
        r = (d[static_cast<size_t>(i)] - g) * s + 2.0 * c * b;
        p = s * r;
        d[static_cast<size_t>(i + 1)] = g + p;
        g = c * r - b;
        double t = q[static_cast<size_t>(i + 1)];
        q[static_cast<size_t>(i + 1)] = s * q[static_cast<size_t>(i)] + c * t;
        q[static_cast<size_t>(i)] = c * q[static_cast<size_t>(i)] - s * t;
      }
      if (underflow) continue;
      d[static_cast<size_t>(l)] -= p;
      e[static_cast<size_t>(l)] = g;
      e[static_cast<size_t>(m)] = 0.0;
    }
  }
}

}  // namespace detail

// n-point Gauss-Hermite rule for \int e^{-x^2} f(x) dx, via the eigenvalues
// of the Jacobi matrix of the Hermite recurrence (Golub-Welsch). Nodes come
// back ascending and the +-x pairs are symmetrized exactly, so odd moments
// vanish identically.
inline Rule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be positive");
  std::vector<double> d(static_cast<size_t>(n), 0.0);
  std::vector<double> e(static_cast<size_t>(n), 0.0);
  std::vector<double> q(static_cast<size_t>(n), 0.0);
  q[0] = 1.0;
  for (int i = 1; i < n; ++i)
    e[static_cast<size_t>(i)] = std::sqrt(static_cast<double>(i) / 2.0);
  detail::tridiag_ql(d, e, q);

  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return d[static_cast<size_t>(a)] < d[static_cast<size_t>(b)];
  });

  const double mu0 = std::sqrt(std::acos(-1.0));
  Rule r;
  r.nodes.reserve(static_cast<size_t>(n));
  r.weights.reserve(static_cast<size_t>(n));
  for (int i : idx) {
    r.nodes.push_back(d[static_cast<size_t>(i)]);
    r.weights.push_back(mu0 * q[static_cast<size_t>(i)] * q[static_cast<size_t>(i)]);
  }
  for (int i = 0, j = n - 1; i < j; ++i, --j) {
    double x = 0.5 * (r.nodes[static_cast<size_t>(j)] - r.nodes[static_cast<size_t>(i)]);
    r.nodes[static_cast<size_t>(i)] = -x;
    r.nodes[static_cast<size_t>(j)] = x;
    double w = 0.5 * (r.weights[static_cast<size_t>(i)] + r.weights[static_cast<size_t>(j)]);
    r.weights[static_cast<size_t>(i)] = w;
    r.weights[static_cast<size_t>(j)] = w;
  }
  if (n % 2 == 1) r.nodes[static_cast<size_t>(n / 2)] = 0.0;
  return r;
}

// nodes/weights so that E f(Z) = sum_i w_i f(x_i) for Z ~ N(0,1);
// weights sum to 1 exactly after renormalization
inline Rule normal_rule(int n) {
  Rule gh = gauss_hermite(n);
  const double sqrt2 = std::sqrt(2.0);
  double wsum = 0.0;
  for (double w : gh.weights) wsum += w;
  Rule r;
  r.nodes.reserve(static_cast<size_t>(n));
  r.weights.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(sqrt2 * gh.nodes[static_cast<size_t>(i)]);
    r.weights.push_back(gh.weights[static_cast<size_t>(i)] / wsum);
  }
  return r;
}

}  // namespace mssk::quad
