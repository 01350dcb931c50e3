#pragma once
// Trial points x = (xi, gamma_tilde, q) and the discrete Parisi functional
//
//   P(x) = log Z_0 - (1/2) sum_{j=0}^{k-1} xi_j ((gt_{j+1} q_{j+1})^2 - (gt_j q_j)^2)
//
// where Z_k = 2 cosh( sum_j J_j sqrt(w_j - w_{j-1}) ), w_j = 2 gt_j^2 q_j, and
// Z_{j-1} = (E_j Z_j^{xi_{j-1}})^{1/xi_{j-1}} averages the level-j Gaussian.
//
// Three evaluation engines:
//   cheb:   the recursion state depends on J only through s_j = sum a_i J_i,
//           so each backward step is a 1-D update F_{j-1}(s) =
//           (1/xi) log E F_j(s + a_j J)^xi, done on a Chebyshev grid. All F_j
//           are even, so grids live on [0, L_j]. Deterministic, cost ~ k.
//   tensor: nested Gauss-Hermite over (J_1..J_k), the droop-in replacement
//           oracle for small k.
//   mc:     nested plug-in Monte Carlo, for cross-checks.
//
// The RPC representation E log sum nu 2cosh z - E log sum nu exp y uses an
// xi-cascade with Cov z = 2 gt^2 q and Cov y = (gt q)^2 at the ancestor level.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mssk/chebyshev.hpp"
#include "mssk/model.hpp"
#include "mssk/numeric.hpp"
#include "mssk/quadrature.hpp"
#include "mssk/recursion.hpp"

namespace mssk::parisi {

enum class TrialError {
  ok,
  duplicate_xi,
  non_monotone_q,
  endpoint_violation,
  xi_out_of_range,
};

struct invalid_trial : std::invalid_argument {
  TrialError code;
  invalid_trial(TrialError c, const char* what)
      : std::invalid_argument(what), code(c) {}
};

struct TrialPoint {
  int k = 0;
  std::vector<double> xi;           // xi_0 .. xi_{k-1}
  std::vector<double> q;            // q_0 .. q_k
  std::vector<double> gamma_tilde;  // gt_0 .. gt_k, derived from the model

  double xi_at(int j) const {
    if (j <= -1) return 0.0;
    if (j >= k) return 1.0;
    return xi[static_cast<size_t>(j)];
  }
};

// merge xi_free with zeta (so zeta is always contained in xi), attach q, and
// derive gamma_tilde: gt_j = gamma_l for the unique l with
// zeta_{l-1} < xi_j <= zeta_l
inline TrialPoint build_trial(const model::ModelParams& p,
                              std::span<const double> xi_free,
                              std::span<const double> q) {
  model::require_valid(p);
  for (double x : xi_free)
    if (!(x > 0.0) || !(x < 1.0))
      throw invalid_trial(TrialError::xi_out_of_range,
                          "free xi values must lie in (0,1)");

  TrialPoint t;
  t.k = p.r + static_cast<int>(xi_free.size());
  t.xi.reserve(static_cast<size_t>(t.k));
  t.xi.assign(p.zeta.begin(), p.zeta.end());
  t.xi.insert(t.xi.end(), xi_free.begin(), xi_free.end());
  std::sort(t.xi.begin(), t.xi.end());
  for (size_t j = 1; j < t.xi.size(); ++j)
    if (t.xi[j] == t.xi[j - 1])
      throw invalid_trial(TrialError::duplicate_xi,
                          "xi values must be pairwise distinct");

  if (q.size() != static_cast<size_t>(t.k) + 1)
    throw invalid_trial(TrialError::non_monotone_q,
                        "q must have k+1 entries");
  if (q.front() != 0.0 || q.back() != 1.0)
    throw invalid_trial(TrialError::endpoint_violation,
                        "q must start at 0 and end at 1");
  for (size_t j = 1; j < q.size(); ++j)
    if (!(q[j] >= q[j - 1]))
      throw invalid_trial(TrialError::non_monotone_q, "q must be nondecreasing");
  t.q.assign(q.begin(), q.end());

  t.gamma_tilde.resize(static_cast<size_t>(t.k) + 1);
  for (int j = 0; j <= t.k; ++j) {
    double x = t.xi_at(j);
    int l = 0;
    while (l < p.r && !(x <= p.zeta_at(l))) ++l;
    t.gamma_tilde[static_cast<size_t>(j)] = p.gamma_at(l);
  }
  return t;
}

inline void require_trial(const TrialPoint& t) {
  if (t.k < 1 || t.xi.size() != static_cast<size_t>(t.k) ||
      t.q.size() != static_cast<size_t>(t.k) + 1 ||
      t.gamma_tilde.size() != static_cast<size_t>(t.k) + 1)
    throw invalid_trial(TrialError::non_monotone_q, "malformed trial point");
  for (int j = 1; j <= t.k; ++j) {
    double w0 = num::sqr(t.gamma_tilde[static_cast<size_t>(j - 1)]) *
                t.q[static_cast<size_t>(j - 1)];
    double w1 =
        num::sqr(t.gamma_tilde[static_cast<size_t>(j)]) * t.q[static_cast<size_t>(j)];
    if (!(w1 >= w0))
      throw invalid_trial(TrialError::non_monotone_q,
                          "gamma_tilde^2 q must be nondecreasing");
  }
}

enum class ParisiMethod { cheb, tensor, mc };

struct ParisiValue {
  double value = 0.0;
  double log_z0 = 0.0;
  double correction = 0.0;
  ParisiMethod method = ParisiMethod::cheb;
  double stderr_mean = 0.0;  // 0 for deterministic methods
};

struct ParisiOptions {
  ParisiMethod method = ParisiMethod::cheb;
  // inner rule of the cheb engine; convergence is limited by the branch
  // points of (2cosh)^xi, error ~ exp(-pi/(a sqrt(2)) sqrt(2n)) for field
  // scale a, so 160 nodes keep gamma <= 2 below 1e-11
  int gh_nodes = 160;
  double grid_sigmas = 10.0;     // domain reach in units of the field sd
  double points_per_unit = 10.0; // Chebyshev density; 10 gives ~1e-12
  int tensor_nodes = 32;
  int mc_samples_per_level = 64;
  int64_t mc_replicas = 400;
  uint64_t seed = 1;

  // cheaper settings for inner optimization loops, ~1e-6 accuracy
  static ParisiOptions fast() {
    ParisiOptions o;
    o.gh_nodes = 36;
    o.grid_sigmas = 8.0;
    o.points_per_unit = 6.0;
    return o;
  }
};

inline double correction_term(const TrialPoint& t) {
  double acc = 0.0;
  for (int j = 0; j < t.k; ++j) {
    double a = t.gamma_tilde[static_cast<size_t>(j + 1)] * t.q[static_cast<size_t>(j + 1)];
    double b = t.gamma_tilde[static_cast<size_t>(j)] * t.q[static_cast<size_t>(j)];
    acc += t.xi[static_cast<size_t>(j)] * (a * a - b * b);
  }
  return 0.5 * acc;
}

namespace detail {

inline std::vector<double> field_increments(const TrialPoint& t) {
  std::vector<double> a(static_cast<size_t>(t.k));
  for (int j = 1; j <= t.k; ++j) {
    double w0 = 2.0 * num::sqr(t.gamma_tilde[static_cast<size_t>(j - 1)]) *
                t.q[static_cast<size_t>(j - 1)];
    double w1 =
        2.0 * num::sqr(t.gamma_tilde[static_cast<size_t>(j)]) * t.q[static_cast<size_t>(j)];
    a[static_cast<size_t>(j - 1)] = std::sqrt(std::max(0.0, w1 - w0));
  }
  return a;
}

// F evaluated with even symmetry and slope-1 linear continuation beyond the
// grid (log 2cosh and all its smoothings are asymptotically |s| + const)
inline double eval_even(const num::Cheb& f, double s) {
  double a = std::fabs(s);
  if (a <= f.hi()) return f.eval(a);
  return f.eval(f.hi()) + (a - f.hi());
}

inline double log_z0_cheb(const TrialPoint& t, const ParisiOptions& opt) {
  auto a = field_increments(t);
  quad::Rule rule = quad::normal_rule(opt.gh_nodes);

  // domain half-widths: L_j covers the field reachable after j increments
  std::vector<double> len(static_cast<size_t>(t.k) + 1, 0.0);
  for (int j = 1; j <= t.k; ++j)
    len[static_cast<size_t>(j)] =
        len[static_cast<size_t>(j - 1)] + opt.grid_sigmas * a[static_cast<size_t>(j - 1)];

  auto grid_points = [&](double length) {
    int n = static_cast<int>(std::ceil(opt.points_per_unit * length)) + 32;
    return std::min(n, 2200);
  };

  num::Cheb f = num::Cheb::fit([](double s) { return num::log2cosh(s); }, 0.0,
                               std::max(1.0, len[static_cast<size_t>(t.k)]),
                               grid_points(len[static_cast<size_t>(t.k)]));
  for (int j = t.k; j >= 1; --j) {
    double aj = a[static_cast<size_t>(j - 1)];
    double xj = t.xi[static_cast<size_t>(j - 1)];
    if (j == 1) {
      // final step only needs F_0(0)
      num::OnlineLse lse;
      for (size_t i = 0; i < rule.nodes.size(); ++i)
        lse.add(std::log(rule.weights[i]) + xj * eval_even(f, aj * rule.nodes[i]));
      return lse.value() / xj;
    }
    if (aj == 0.0) continue;  // zero-variance level: F unchanged
    double lo = 0.0, hi = std::max(1.0, len[static_cast<size_t>(j - 1)]);
    auto pts = num::Cheb::points(lo, hi, grid_points(hi));
    std::vector<double> vals(pts.size());
    for (size_t pi = 0; pi < pts.size(); ++pi) {
      num::OnlineLse lse;
      for (size_t i = 0; i < rule.nodes.size(); ++i)
        lse.add(std::log(rule.weights[i]) +
                xj * eval_even(f, pts[pi] + aj * rule.nodes[i]));
      vals[pi] = lse.value() / xj;
    }
    f = num::Cheb(lo, hi, std::move(vals));
  }
  return eval_even(f, 0.0);  // k = 0 cannot happen; defensive
}

}  // namespace detail

inline rpc::CovarianceProfile z_profile(const TrialPoint& t) {
  rpc::CovarianceProfile pr;
  pr.v.resize(static_cast<size_t>(t.k) + 1);
  for (int j = 0; j <= t.k; ++j)
    pr.v[static_cast<size_t>(j)] =
        2.0 * num::sqr(t.gamma_tilde[static_cast<size_t>(j)]) * t.q[static_cast<size_t>(j)];
  return pr;
}

inline rpc::CovarianceProfile y_profile(const TrialPoint& t) {
  rpc::CovarianceProfile pr;
  pr.v.resize(static_cast<size_t>(t.k) + 1);
  for (int j = 0; j <= t.k; ++j)
    pr.v[static_cast<size_t>(j)] = num::sqr(
        t.gamma_tilde[static_cast<size_t>(j)] * t.q[static_cast<size_t>(j)]);
  return pr;
}

inline ParisiValue parisi_recursion(const TrialPoint& t,
                                    const ParisiOptions& opt = {}) {
  require_trial(t);
  ParisiValue out;
  out.method = opt.method;
  out.correction = correction_term(t);

  if (opt.method == ParisiMethod::cheb) {
    out.log_z0 = detail::log_z0_cheb(t, opt);
  } else {
    rpc::CovarianceProfile pr = z_profile(t);
    rpc::RecursionOptions ropt;
    ropt.method = opt.method == ParisiMethod::tensor
                      ? rpc::RecursionMethod::quadrature
                      : rpc::RecursionMethod::montecarlo;
    ropt.quad_nodes = opt.tensor_nodes;
    ropt.mc_samples_per_level = opt.mc_samples_per_level;
    ropt.mc_replicas = opt.mc_replicas;
    ropt.seed = opt.seed;
    auto rv = rpc::recursion_value(
        t.xi,
        [](std::span<const double> g) {
          double s = 0.0;
          for (double x : g) s += x;
          return num::log2cosh(s);
        },
        pr, ropt);
    out.log_z0 = rv.value;
    out.stderr_mean = rv.stderr_mean;
  }
  out.value = out.log_z0 - out.correction;
  return out;
}

struct ParisiRpcOptions {
  rpc::CascadeConfig cascade;
  int64_t replicas = 2000;
  uint64_t seed = 1;
};

// one xi-cascade per replica, independent z and y fields on it, value from
// the per-replica difference of the two log terms
inline ParisiValue parisi_rpc(const TrialPoint& t,
                              const ParisiRpcOptions& opt = {}) {
  require_trial(t);
  rpc::CovarianceProfile zp = z_profile(t);
  rpc::CovarianceProfile yp = y_profile(t);

  rng::Key base = rng::Key(opt.seed).child("parisi-rpc");
  std::vector<double> diffs(static_cast<size_t>(opt.replicas));
  stats::Running zterm, yterm;
  std::vector<double> incr(static_cast<size_t>(t.k) + 1);
  for (int64_t r = 0; r < opt.replicas; ++r) {
    rng::Key rk = base.child(static_cast<uint64_t>(r));
    rpc::CascadeSample cas = rpc::sample_cascade(t.xi, t.k, opt.cascade, rk);
    rpc::TreeGaussianField zf(zp, t.k, cas.child_count(), rk.child("z"));
    rpc::TreeGaussianField yf(yp, t.k, cas.child_count(), rk.child("y"));
    num::OnlineLse lz, ly;
    for (int64_t leaf = 0; leaf < cas.leaf_count(); ++leaf) {
      double log_nu = std::log(cas.leaf_nu[static_cast<size_t>(leaf)]);
      zf.path_increments(leaf, incr);
      double z = 0.0;
      for (double x : incr) z += x;
      lz.add(log_nu + num::log2cosh(z));
      yf.path_increments(leaf, incr);
      double y = 0.0;
      for (double x : incr) y += x;
      ly.add(log_nu + y);
    }
    diffs[static_cast<size_t>(r)] = lz.value() - ly.value();
    zterm.add(lz.value());
    yterm.add(ly.value());
  }
  stats::Running acc = stats::reduce_ordered(diffs);
  ParisiValue out;
  out.method = ParisiMethod::mc;
  out.value = acc.mean();
  out.stderr_mean = acc.stderr_mean();
  out.log_z0 = zterm.mean();
  out.correction = yterm.mean();
  return out;
}

}  // namespace mssk::parisi
