#pragma once
// The cascade averaging recursion
//
//   X_r     = terminal(G_0, ..., G_r)
//   X_{l-1} = (1/zeta_{l-1}) log E_{G_l} exp(zeta_{l-1} X_l)
//   value   = E_{G_0} X_0
//
// with independent increments G_l ~ N(0, v_l - v_{l-1}), v_{-1} := 0, and its
// cascade representation value = E log sum_a nu_a exp X_r(path of a). The
// fractional moments are evaluated in the log domain throughout.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mssk/cascade.hpp"
#include "mssk/model.hpp"
#include "mssk/numeric.hpp"
#include "mssk/quadrature.hpp"
#include "mssk/stats.hpp"
#include "mssk/tree_field.hpp"

namespace mssk::rpc {

struct divergent_terminal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct unsupported_terminal : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class RecursionMethod { automatic, quadrature, montecarlo };

struct RecursionOptions {
  RecursionMethod method = RecursionMethod::automatic;
  int quad_nodes = 32;           // per level
  int64_t quad_budget = 10'000'000;  // switch to MC above this many evals
  int mc_samples_per_level = 64;
  int64_t mc_replicas = 400;
  uint64_t seed = 1;
  // quadrature needs a terminal that is smooth in the increments
  bool terminal_smooth = true;
};

struct RecursionValue {
  double value = 0.0;
  double stderr_mean = 0.0;  // 0 for quadrature
  int64_t replicas = 0;      // 0 for quadrature
  bool used_quadrature = true;
};

namespace detail {

inline void check_zeta(std::span<const double> zeta) {
  double prev = 0.0;
  for (double z : zeta) {
    if (!(z > prev) || !(z < 1.0))
      throw invalid_zeta("recursion: zeta must be strictly increasing in (0,1)");
    prev = z;
  }
}

template <class F>
double quad_level(int l, std::span<const double> zeta,
                  const CovarianceProfile& profile, const quad::Rule& rule,
                  std::vector<double>& incr, F&& terminal) {
  int depth = profile.depth();
  if (l == depth) return terminal(std::span<const double>(incr));
  double sd = profile.increment_sd(l + 1);
  double z = zeta[static_cast<size_t>(l)];
  if (sd == 0.0) {
    incr[static_cast<size_t>(l + 1)] = 0.0;
    return quad_level(l + 1, zeta, profile, rule, incr, terminal);
  }
  num::OnlineLse lse;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    incr[static_cast<size_t>(l + 1)] = sd * rule.nodes[i];
    double x = quad_level(l + 1, zeta, profile, rule, incr, terminal);
    lse.add(std::log(rule.weights[i]) + z * x);
  }
  return lse.value() / z;
}

template <class F>
double mc_level(int l, std::span<const double> zeta,
                const CovarianceProfile& profile, int m,
                std::vector<double>& incr, rng::Stream& st, F&& terminal) {
  int depth = profile.depth();
  if (l == depth) return terminal(std::span<const double>(incr));
  double sd = profile.increment_sd(l + 1);
  double z = zeta[static_cast<size_t>(l)];
  if (sd == 0.0) {
    incr[static_cast<size_t>(l + 1)] = 0.0;
    return mc_level(l + 1, zeta, profile, m, incr, st, terminal);
  }
  num::OnlineLse lse;
  for (int i = 0; i < m; ++i) {
    incr[static_cast<size_t>(l + 1)] = sd * st.normal();
    lse.add(z * mc_level(l + 1, zeta, profile, m, incr, st, terminal));
  }
  return (lse.value() - std::log(static_cast<double>(m))) / z;
}

}  // namespace detail

template <class F>
RecursionValue recursion_value(std::span<const double> zeta, F&& terminal,
                               const CovarianceProfile& profile,
                               const RecursionOptions& opt = {}) {
  profile.validate();
  int depth = profile.depth();
  if (zeta.size() != static_cast<size_t>(depth))
    throw invalid_zeta("recursion: zeta length must equal profile depth");
  detail::check_zeta(zeta);

  int active_levels = profile.increment_sd(0) > 0.0 ? 1 : 0;
  for (int l = 1; l <= depth; ++l)
    if (profile.increment_sd(l) > 0.0) ++active_levels;
  double evals = 1.0;
  for (int i = 0; i < active_levels; ++i) evals *= opt.quad_nodes;

  bool use_quad = opt.method == RecursionMethod::quadrature ||
                  (opt.method == RecursionMethod::automatic &&
                   evals <= static_cast<double>(opt.quad_budget));
  RecursionValue out;
  if (use_quad) {
    if (!opt.terminal_smooth)
      throw unsupported_terminal("quadrature requires a smooth terminal");
    quad::Rule rule = quad::normal_rule(opt.quad_nodes);
    std::vector<double> incr(static_cast<size_t>(depth) + 1, 0.0);
    double sd0 = profile.increment_sd(0);
    double v = 0.0;
    if (sd0 == 0.0) {
      incr[0] = 0.0;
      v = detail::quad_level(0, zeta, profile, rule, incr, terminal);
    } else {
      for (size_t i = 0; i < rule.nodes.size(); ++i) {
        incr[0] = sd0 * rule.nodes[i];
        v += rule.weights[i] *
             detail::quad_level(0, zeta, profile, rule, incr, terminal);
      }
    }
    if (!std::isfinite(v))
      throw divergent_terminal("recursion: quadrature value not finite");
    out.value = v;
    out.used_quadrature = true;
    return out;
  }

  rng::Key key = rng::Key(opt.seed).child("recursion-mc");
  std::vector<double> vals(static_cast<size_t>(opt.mc_replicas));
  for (int64_t r = 0; r < opt.mc_replicas; ++r) {
    rng::Stream st = key.child(static_cast<uint64_t>(r)).stream();
    std::vector<double> incr(static_cast<size_t>(depth) + 1, 0.0);
    incr[0] = profile.increment_sd(0) * (profile.increment_sd(0) > 0.0 ? st.normal() : 0.0);
    vals[static_cast<size_t>(r)] = detail::mc_level(
        0, zeta, profile, opt.mc_samples_per_level, incr, st, terminal);
  }
  stats::Running acc = stats::reduce_ordered(vals);
  if (!std::isfinite(acc.mean()))
    throw divergent_terminal("recursion: Monte Carlo value not finite");
  out.value = acc.mean();
  out.stderr_mean = acc.stderr_mean();
  out.replicas = opt.mc_replicas;
  out.used_quadrature = false;
  return out;
}

struct RepresentationOptions {
  CascadeConfig cascade;
  int64_t replicas = 2000;
  uint64_t seed = 1;
};

// E log sum_a nu_a exp(terminal at leaf a), one cascade + one field per replica
template <class F>
model::PressureEstimate rpc_representation_estimate(
    std::span<const double> zeta, F&& terminal, const CovarianceProfile& profile,
    const RepresentationOptions& opt = {}) {
  profile.validate();
  int depth = profile.depth();
  if (zeta.size() != static_cast<size_t>(depth))
    throw invalid_zeta("representation: zeta length must equal profile depth");
  detail::check_zeta(zeta);

  rng::Key base = rng::Key(opt.seed).child("rpc-representation");
  std::vector<double> vals(static_cast<size_t>(opt.replicas));
  std::vector<double> incr(static_cast<size_t>(depth) + 1);
  for (int64_t r = 0; r < opt.replicas; ++r) {
    rng::Key rk = base.child(static_cast<uint64_t>(r));
    CascadeSample cas = sample_cascade(zeta, depth, opt.cascade, rk);
    TreeGaussianField field(profile, depth, cas.child_count(), rk);
    num::OnlineLse lse;
    for (int64_t leaf = 0; leaf < cas.leaf_count(); ++leaf) {
      field.path_increments(leaf, incr);
      lse.add(std::log(cas.leaf_nu[static_cast<size_t>(leaf)]) +
              terminal(std::span<const double>(incr)));
    }
    vals[static_cast<size_t>(r)] = lse.value();
  }
  stats::Running acc = stats::reduce_ordered(vals);
  model::PressureEstimate est;
  est.mean = acc.mean();
  est.stderr_mean = acc.stderr_mean();
  est.replicas = opt.replicas;
  est.seed = opt.seed;
  return est;
}

// drop every level with v_l = v_{l-1} together with its zeta_{l-1}; the
// recursion value is invariant because the dropped increment is a point mass
// at the origin
inline std::pair<CovarianceProfile, std::vector<double>>
collapse_degenerate_levels(const CovarianceProfile& profile,
                           std::span<const double> zeta) {
  profile.validate();
  if (zeta.size() != static_cast<size_t>(profile.depth()))
    throw invalid_zeta("collapse: zeta length must equal profile depth");
  CovarianceProfile out;
  std::vector<double> zout;
  out.v.push_back(profile.v[0]);
  for (size_t l = 1; l < profile.v.size(); ++l) {
    if (profile.v[l] == out.v.back()) continue;
    out.v.push_back(profile.v[l]);
    zout.push_back(zeta[l - 1]);
  }
  if (out.v.size() < 2) {
    // fully degenerate profile: keep one zero-variance level so the result
    // is still a valid (profile, zeta) pair
    out.v.push_back(profile.v[0]);
    zout.push_back(zeta[0]);
  }
  return {std::move(out), std::move(zout)};
}

struct TerminalSpec {
  std::string name;
  std::function<double(std::span<const double>)> f;
};

struct ConcentrationRow {
  std::string name;
  double var = 0.0;
  double stderr_var = 0.0;
  bool within_bound = false;
};

struct ConcentrationReport {
  std::vector<ConcentrationRow> rows;
  double c_hat = 0.0;        // Var(log sum_n w_n) at depth 1
  double c_stderr = 0.0;
  bool all_within = false;
};

// Var(phi_r) against the depth-1 bound 4 c(zeta_0), phi_r = log sum nu e^{X_r}
inline ConcentrationReport concentration_variance(
    std::span<const double> zeta, const std::vector<TerminalSpec>& terminals,
    const CovarianceProfile& profile, const RepresentationOptions& opt = {}) {
  profile.validate();
  int depth = profile.depth();
  detail::check_zeta(zeta);

  // c(zeta_0) from independent depth-1 realizations: variance of the log of
  // the total (unnormalized) atom mass, tail shares included
  rng::Key ckey = rng::Key(opt.seed).child("concentration-c");
  std::vector<double> log_mass(static_cast<size_t>(opt.replicas));
  std::vector<double> children(
      static_cast<size_t>(opt.cascade.width + opt.cascade.tail_shares));
  for (int64_t r = 0; r < opt.replicas; ++r) {
    rng::Stream st = ckey.child(static_cast<uint64_t>(r)).stream();
    detail::sample_node_children(zeta[0], opt.cascade.width,
                                 opt.cascade.tail_shares, st, children);
    log_mass[static_cast<size_t>(r)] = num::log_sum_exp(children);
  }
  auto c_est = stats::variance_with_error(log_mass);

  ConcentrationReport rep;
  rep.c_hat = c_est.var;
  rep.c_stderr = c_est.stderr_var;
  rep.all_within = true;

  for (size_t t = 0; t < terminals.size(); ++t) {
    RepresentationOptions ropt = opt;
    ropt.seed = rng::Key(opt.seed).child("concentration-phi").child(t).raw();
    rng::Key base = rng::Key(ropt.seed).child("rpc-representation");
    std::vector<double> phis(static_cast<size_t>(opt.replicas));
    std::vector<double> incr(static_cast<size_t>(depth) + 1);
    for (int64_t r = 0; r < opt.replicas; ++r) {
      rng::Key rk = base.child(static_cast<uint64_t>(r));
      CascadeSample cas = sample_cascade(zeta, depth, opt.cascade, rk);
      TreeGaussianField field(profile, depth, cas.child_count(), rk);
      num::OnlineLse lse;
      for (int64_t leaf = 0; leaf < cas.leaf_count(); ++leaf) {
        field.path_increments(leaf, incr);
        lse.add(std::log(cas.leaf_nu[static_cast<size_t>(leaf)]) +
                terminals[t].f(std::span<const double>(incr)));
      }
      phis[static_cast<size_t>(r)] = lse.value();
    }
    auto v_est = stats::variance_with_error(phis);
    ConcentrationRow row;
    row.name = terminals[t].name;
    row.var = v_est.var;
    row.stderr_var = v_est.stderr_var;
    double slack =
        3.0 * std::sqrt(v_est.stderr_var * v_est.stderr_var +
                        16.0 * c_est.stderr_var * c_est.stderr_var);
    row.within_bound = row.var <= 4.0 * rep.c_hat + slack;
    rep.all_within = rep.all_within && row.within_bound;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace mssk::rpc
