#pragma once
// Finite-N estimators built on exact spin enumeration:
//   pressure_direct     (1/N) E log sum_{sigma,alpha} nu_a e^{H_N}
//   pressure_recursive  the same pressure through the level-by-level
//                       fractional-moment recursion
//   gibbs_overlap_distribution   quenched (ancestor level, overlap) pairs
//   gibbs_level_law     exact per-replica ancestor-level law
//
// Spin sweeps use Gray-code order: one spin flips per step, and every
// per-node quadratic form h = sum_ij G_ij s_i s_j updates in O(N).

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mssk/cascade.hpp"
#include "mssk/model.hpp"
#include "mssk/numeric.hpp"
#include "mssk/parallel.hpp"
#include "mssk/rng.hpp"
#include "mssk/stats.hpp"

namespace mssk::sim {

struct SimOptions {
  rpc::CascadeConfig cascade;
  int64_t replicas = 200;
  uint64_t seed = 1;
  int threads = 0;  // 0 = pick a default pool size
};

// one disorder realization: the cascade plus, for every tree node at levels
// 1..r, an N x N array of iid standard Gaussians. The effective coupling at
// a leaf is the path sum weighted by sqrt(gamma_l^2 - gamma_{l-1}^2).
struct DisorderRealization {
  rpc::CascadeSample cascade;
  std::vector<std::vector<double>> level_g;  // [l-1][node * N * N + i * N + j]
  int n = 0;
};

namespace detail {

inline std::vector<double> sample_matrices(int64_t nodes, int n, rng::Key key) {
  std::vector<double> out(static_cast<size_t>(nodes) * n * n);
  for (int64_t node = 0; node < nodes; ++node) {
    rng::Stream st = key.child(static_cast<uint64_t>(node)).stream();
    double* m = out.data() + node * n * n;
    for (int i = 0; i < n * n; ++i) m[i] = st.normal();
  }
  return out;
}

}  // namespace detail

inline DisorderRealization sample_disorder(const model::ModelParams& p, int n,
                                           const rpc::CascadeConfig& cfg,
                                           rng::Key key) {
  model::require_valid(p);
  DisorderRealization d;
  d.n = n;
  d.cascade = rpc::sample_cascade(p.zeta, p.r, cfg, key);
  int64_t nodes = 1;
  for (int l = 1; l <= p.r; ++l) {
    nodes *= d.cascade.child_count();
    d.level_g.push_back(detail::sample_matrices(
        nodes, n, key.child("coupling").child(static_cast<uint64_t>(l))));
  }
  return d;
}

namespace detail {

// symmetrized, scaled matrices S = scale * (G + G^T) ready for Gray updates;
// h = sum_ij scale * G_ij s_i s_j = (1/2) <S, s s^T>
struct SweepLevel {
  std::vector<double> s;  // [node * N * N + i * N + j]
  std::vector<double> h;  // current quadratic forms, one per node
  int64_t nodes = 0;
};

inline SweepLevel make_sweep_level(const std::vector<double>& g, int64_t nodes,
                                   int n, double scale) {
  SweepLevel lv;
  lv.nodes = nodes;
  lv.s.resize(static_cast<size_t>(nodes) * n * n);
  lv.h.assign(static_cast<size_t>(nodes), 0.0);
  for (int64_t node = 0; node < nodes; ++node) {
    const double* gm = g.data() + node * n * n;
    double* sm = lv.s.data() + node * n * n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        sm[i * n + j] = scale * (gm[i * n + j] + gm[j * n + i]);
        acc += gm[i * n + j];
      }
    lv.h[static_cast<size_t>(node)] = scale * acc;  // all spins +1
  }
  return lv;
}

// flip spin b: h -= 2 s_b * (row_b . s - S_bb s_b), for every node
inline void flip_update(SweepLevel& lv, int n, const double* spins, int b) {
  double sb = spins[b];
  for (int64_t node = 0; node < lv.nodes; ++node) {
    const double* row = lv.s.data() + node * n * n + static_cast<int64_t>(b) * n;
    double dot = 0.0;
    for (int j = 0; j < n; ++j) dot += row[j] * spins[j];
    lv.h[static_cast<size_t>(node)] -= 2.0 * sb * (dot - row[b] * sb);
  }
}

// per-leaf path sums of the level h values, refreshed every sweep step
inline void path_sums(const std::vector<SweepLevel>& levels, int child_count,
                      std::vector<std::vector<double>>& bufs) {
  for (size_t l = 0; l < levels.size(); ++l) {
    const auto& h = levels[l].h;
    auto& out = bufs[l];
    if (l == 0) {
      for (size_t i = 0; i < h.size(); ++i) out[i] = h[i];
    } else {
      const auto& prev = bufs[l - 1];
      for (size_t parent = 0; parent < prev.size(); ++parent) {
        double base = prev[parent];
        const double* hp = h.data() + parent * static_cast<size_t>(child_count);
        double* op = out.data() + parent * static_cast<size_t>(child_count);
        for (int c = 0; c < child_count; ++c) op[c] = base + hp[c];
      }
    }
  }
}

inline std::vector<double> leaf_log_nu(const rpc::CascadeSample& cas) {
  std::vector<double> out(cas.leaf_nu.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(cas.leaf_nu[i]);
  return out;
}

inline double delta_gamma(const model::ModelParams& p, int l) {
  return std::sqrt(num::sqr(p.gamma_at(l)) - num::sqr(p.gamma_at(l - 1)));
}

}  // namespace detail

// exact enumeration over spins and truncated leaves, one disorder per replica
inline model::PressureEstimate pressure_direct(const model::ModelParams& p,
                                               int n, const SimOptions& opt) {
  model::require_valid(p);
  model::require_enumerable(n);
  rng::Key base = rng::Key(opt.seed).child("pressure-direct");
  std::vector<double> vals(static_cast<size_t>(opt.replicas));

  par::for_each_replica(opt.replicas, opt.threads, [&](int64_t rep) {
    DisorderRealization dis =
        sample_disorder(p, n, opt.cascade, base.child(static_cast<uint64_t>(rep)));
    const int c = dis.cascade.child_count();
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));

    std::vector<detail::SweepLevel> levels;
    std::vector<std::vector<double>> bufs;
    int64_t nodes = 1;
    for (int l = 1; l <= p.r; ++l) {
      nodes *= c;
      levels.push_back(detail::make_sweep_level(
          dis.level_g[static_cast<size_t>(l - 1)], nodes, n,
          detail::delta_gamma(p, l) * inv_sqrt_n));
      bufs.emplace_back(static_cast<size_t>(nodes));
    }
    std::vector<double> log_nu = detail::leaf_log_nu(dis.cascade);
    std::vector<double> spins(static_cast<size_t>(n), 1.0);

    num::OnlineLse lse;
    const uint64_t states = uint64_t{1} << n;
    for (uint64_t step = 0;; ++step) {
      detail::path_sums(levels, c, bufs);
      const auto& leaf_field = bufs.back();
      for (size_t leaf = 0; leaf < leaf_field.size(); ++leaf)
        lse.add(log_nu[leaf] + leaf_field[leaf]);
      if (step + 1 == states) break;
      int b = num::gray_flip_bit(step);
      for (auto& lv : levels) detail::flip_update(lv, n, spins.data(), b);
      spins[static_cast<size_t>(b)] = -spins[static_cast<size_t>(b)];
    }
    vals[static_cast<size_t>(rep)] = lse.value() / static_cast<double>(n);
  });

  stats::Running acc = stats::reduce_ordered(vals);
  return {acc.mean(), acc.stderr_mean(), opt.replicas, opt.seed};
}

struct RecursiveOptions {
  int samples_per_level = 64;
  int64_t replicas = 100;
  uint64_t seed = 1;
  int threads = 0;
};

namespace detail {

// h array over all 2^n spin states for one freshly sampled coupling matrix
inline std::vector<double> h_table(int n, double scale, rng::Stream& st) {
  const int64_t states = int64_t{1} << n;
  std::vector<double> g(static_cast<size_t>(n) * n);
  for (auto& x : g) x = st.normal();
  std::vector<double> s(static_cast<size_t>(n) * n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      s[static_cast<size_t>(i * n + j)] =
          scale * (g[static_cast<size_t>(i * n + j)] + g[static_cast<size_t>(j * n + i)]);
      acc += g[static_cast<size_t>(i * n + j)];
    }
  std::vector<double> h(static_cast<size_t>(states));
  std::vector<double> spins(static_cast<size_t>(n), 1.0);
  double cur = scale * acc;
  uint64_t mask = 0;
  h[0] = cur;
  for (int64_t step = 0; step + 1 < states; ++step) {
    int b = num::gray_flip_bit(static_cast<uint64_t>(step));
    double sb = spins[static_cast<size_t>(b)];
    const double* row = s.data() + static_cast<size_t>(b) * n;
    double dot = 0.0;
    for (int j = 0; j < n; ++j) dot += row[j] * spins[static_cast<size_t>(j)];
    cur -= 2.0 * sb * (dot - row[b] * sb);
    spins[static_cast<size_t>(b)] = -sb;
    mask ^= uint64_t{1} << b;
    h[mask] = cur;
  }
  return h;
}

inline double recursive_log_z(const model::ModelParams& p, int n, int level,
                              int m, rng::Key key,
                              std::vector<const std::vector<double>*>& stack) {
  if (level > p.r) {
    const int64_t states = int64_t{1} << n;
    num::OnlineLse lse;
    for (int64_t s = 0; s < states; ++s) {
      double x = 0.0;
      for (const auto* h : stack) x += (*h)[static_cast<size_t>(s)];
      lse.add(x);
    }
    return lse.value();
  }
  double zeta = p.zeta_at(level - 1);
  double scale = delta_gamma(p, level) / std::sqrt(static_cast<double>(n));
  num::OnlineLse lse;
  for (int i = 0; i < m; ++i) {
    rng::Key sk = key.child(static_cast<uint64_t>(i));
    rng::Stream st = sk.child("matrix").stream();
    std::vector<double> h = h_table(n, scale, st);
    stack.push_back(&h);
    double log_z = recursive_log_z(p, n, level + 1, m, sk, stack);
    stack.pop_back();
    lse.add(zeta * log_z);
  }
  return (lse.value() - std::log(static_cast<double>(m))) / zeta;
}

}  // namespace detail

// nested plug-in Monte Carlo over the level fields. The inner averages enter
// through fractional moments, so the estimate carries an O(1/m) plug-in bias
// in the per-level sample count m on top of the reported replica stderr.
inline model::PressureEstimate pressure_recursive(const model::ModelParams& p,
                                                  int n,
                                                  const RecursiveOptions& opt) {
  model::require_valid(p);
  model::require_enumerable(n);
  if (opt.samples_per_level < 2)
    throw std::invalid_argument("pressure_recursive: need >= 2 samples per level");
  rng::Key base = rng::Key(opt.seed).child("pressure-recursive");
  std::vector<double> vals(static_cast<size_t>(opt.replicas));
  par::for_each_replica(opt.replicas, opt.threads, [&](int64_t rep) {
    std::vector<const std::vector<double>*> stack;
    double log_z0 = detail::recursive_log_z(
        p, n, 1, opt.samples_per_level, base.child(static_cast<uint64_t>(rep)), stack);
    vals[static_cast<size_t>(rep)] = log_z0 / static_cast<double>(n);
  });
  stats::Running acc = stats::reduce_ordered(vals);
  return {acc.mean(), acc.stderr_mean(), opt.replicas, opt.seed};
}

// ---------------------------------------------------------------------------
// joint Gibbs table over (spin state, leaf), for pair/tuple sampling

inline constexpr int64_t kMaxGibbsEntries = 40'000'000;

struct GibbsTable {
  int n = 0;
  int64_t leaves = 0;
  std::vector<double> logits;  // [mask * leaves + leaf]
  double log_z = 0.0;
  std::vector<double> cdf;     // normalized, for inverse-transform draws

  struct Draw {
    uint64_t mask;
    int64_t leaf;
  };

  Draw sample(rng::Stream& st) const {
    int64_t idx = rpc::sample_from_cdf(cdf, st.u01());
    return {static_cast<uint64_t>(idx / leaves), idx % leaves};
  }

  // marginal Gibbs mass per leaf
  std::vector<double> leaf_masses() const {
    std::vector<double> m(static_cast<size_t>(leaves), 0.0);
    const int64_t states = int64_t{1} << n;
    for (int64_t s = 0; s < states; ++s)
      for (int64_t leaf = 0; leaf < leaves; ++leaf)
        m[static_cast<size_t>(leaf)] +=
            std::exp(logits[static_cast<size_t>(s * leaves + leaf)] - log_z);
    return m;
  }
};

inline GibbsTable build_gibbs_table(const model::ModelParams& p,
                                    const DisorderRealization& dis) {
  const int n = dis.n;
  const int c = dis.cascade.child_count();
  const int64_t leaves = dis.cascade.leaf_count();
  const int64_t states = int64_t{1} << n;
  if (states * leaves > kMaxGibbsEntries)
    throw model::n_too_large("joint Gibbs table too large; reduce N or width");

  GibbsTable t;
  t.n = n;
  t.leaves = leaves;
  t.logits.resize(static_cast<size_t>(states * leaves));

  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<detail::SweepLevel> levels;
  std::vector<std::vector<double>> bufs;
  int64_t nodes = 1;
  for (int l = 1; l <= p.r; ++l) {
    nodes *= c;
    levels.push_back(detail::make_sweep_level(
        dis.level_g[static_cast<size_t>(l - 1)], nodes, n,
        detail::delta_gamma(p, l) * inv_sqrt_n));
    bufs.emplace_back(static_cast<size_t>(nodes));
  }
  std::vector<double> log_nu = detail::leaf_log_nu(dis.cascade);
  std::vector<double> spins(static_cast<size_t>(n), 1.0);

  uint64_t mask = 0;
  num::OnlineLse lse;
  for (uint64_t step = 0;; ++step) {
    detail::path_sums(levels, c, bufs);
    const auto& leaf_field = bufs.back();
    double* row = t.logits.data() + static_cast<int64_t>(mask) * leaves;
    for (int64_t leaf = 0; leaf < leaves; ++leaf) {
      row[leaf] = log_nu[static_cast<size_t>(leaf)] + leaf_field[static_cast<size_t>(leaf)];
      lse.add(row[leaf]);
    }
    if (step + 1 == static_cast<uint64_t>(states)) break;
    int b = num::gray_flip_bit(step);
    for (auto& lv : levels) detail::flip_update(lv, n, spins.data(), b);
    spins[static_cast<size_t>(b)] = -spins[static_cast<size_t>(b)];
    mask ^= uint64_t{1} << b;
  }
  t.log_z = lse.value();

  t.cdf.resize(t.logits.size());
  double acc = 0.0;
  for (size_t i = 0; i < t.logits.size(); ++i) {
    acc += std::exp(t.logits[i] - t.log_z);
    t.cdf[i] = acc;
  }
  t.cdf.back() = 1.0;
  return t;
}

inline double spin_overlap_from_masks(uint64_t m1, uint64_t m2, int n) {
  int diff = std::popcount(m1 ^ m2);
  return static_cast<double>(n - 2 * diff) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// quenched (ancestor level, overlap) statistics

struct OverlapHistograms {
  std::vector<double> level_freq;          // r+1 entries
  std::vector<double> level_freq_stderr;
  std::vector<double> overlap_mass;        // n+1 bins at q = (2k - n)/n
  std::vector<double> overlap_mass_stderr;
  int64_t pair_draws = 0;
  int64_t replicas = 0;
  uint64_t seed = 0;
};

inline OverlapHistograms gibbs_overlap_distribution(const model::ModelParams& p,
                                                    int n, const SimOptions& opt,
                                                    int64_t pairs_per_replica) {
  model::require_valid(p);
  model::require_enumerable(n, 20);
  if (pairs_per_replica < 1)
    throw std::invalid_argument("pairs_per_replica must be positive");
  rng::Key base = rng::Key(opt.seed).child("overlap-dist");

  const size_t level_bins = static_cast<size_t>(p.r) + 1;
  const size_t q_bins = static_cast<size_t>(n) + 1;
  std::vector<double> level_rep(static_cast<size_t>(opt.replicas) * level_bins);
  std::vector<double> q_rep(static_cast<size_t>(opt.replicas) * q_bins);

  par::for_each_replica(opt.replicas, opt.threads, [&](int64_t rep) {
    rng::Key rk = base.child(static_cast<uint64_t>(rep));
    DisorderRealization dis = sample_disorder(p, n, opt.cascade, rk);
    GibbsTable table = build_gibbs_table(p, dis);
    rng::Stream st = rk.child("pairs").stream();
    double* lf = level_rep.data() + static_cast<size_t>(rep) * level_bins;
    double* qf = q_rep.data() + static_cast<size_t>(rep) * q_bins;
    for (int64_t d = 0; d < pairs_per_replica; ++d) {
      auto d1 = table.sample(st);
      auto d2 = table.sample(st);
      int level = dis.cascade.ancestor_of(d1.leaf, d2.leaf);
      int agree = n - std::popcount(d1.mask ^ d2.mask);
      lf[level] += 1.0;
      qf[agree] += 1.0;  // overlap value (2*agree - n)/n
    }
    for (size_t i = 0; i < level_bins; ++i) lf[i] /= static_cast<double>(pairs_per_replica);
    for (size_t i = 0; i < q_bins; ++i) qf[i] /= static_cast<double>(pairs_per_replica);
  });

  OverlapHistograms out;
  out.pair_draws = opt.replicas * pairs_per_replica;
  out.replicas = opt.replicas;
  out.seed = opt.seed;
  out.level_freq.resize(level_bins);
  out.level_freq_stderr.resize(level_bins);
  out.overlap_mass.resize(q_bins);
  out.overlap_mass_stderr.resize(q_bins);
  for (size_t b = 0; b < level_bins; ++b) {
    stats::Running acc;
    for (int64_t rep = 0; rep < opt.replicas; ++rep)
      acc.add(level_rep[static_cast<size_t>(rep) * level_bins + b]);
    out.level_freq[b] = acc.mean();
    out.level_freq_stderr[b] = acc.stderr_mean();
  }
  for (size_t b = 0; b < q_bins; ++b) {
    stats::Running acc;
    for (int64_t rep = 0; rep < opt.replicas; ++rep)
      acc.add(q_rep[static_cast<size_t>(rep) * q_bins + b]);
    out.overlap_mass[b] = acc.mean();
    out.overlap_mass_stderr[b] = acc.stderr_mean();
  }
  return out;
}

// exact per-replica ancestor-level law of the Gibbs measure (no pair draws),
// averaged over disorder replicas
inline std::pair<std::vector<double>, std::vector<double>> gibbs_level_law(
    const model::ModelParams& p, int n, const SimOptions& opt) {
  model::require_valid(p);
  model::require_enumerable(n, 20);
  rng::Key base = rng::Key(opt.seed).child("overlap-dist-exact");
  const size_t bins = static_cast<size_t>(p.r) + 1;
  std::vector<double> law_rep(static_cast<size_t>(opt.replicas) * bins);
  par::for_each_replica(opt.replicas, opt.threads, [&](int64_t rep) {
    rng::Key rk = base.child(static_cast<uint64_t>(rep));
    DisorderRealization dis = sample_disorder(p, n, opt.cascade, rk);
    GibbsTable table = build_gibbs_table(p, dis);
    std::vector<double> masses = table.leaf_masses();
    std::vector<double> law =
        rpc::pair_level_law(masses, p.r, dis.cascade.child_count());
    for (size_t b = 0; b < bins; ++b)
      law_rep[static_cast<size_t>(rep) * bins + b] = law[b];
  });
  std::vector<double> mean(bins), se(bins);
  for (size_t b = 0; b < bins; ++b) {
    stats::Running acc;
    for (int64_t rep = 0; rep < opt.replicas; ++rep)
      acc.add(law_rep[static_cast<size_t>(rep) * bins + b]);
    mean[b] = acc.mean();
    se[b] = acc.stderr_mean();
  }
  return {mean, se};
}

// ---------------------------------------------------------------------------
// test support: one replica of (H(s1,a1), H(s2,a2)) for fixed arguments,
// sampling only the tree nodes the two paths touch

inline std::pair<double, double> hamiltonian_pair(
    const model::ModelParams& p, int n, std::span<const int32_t> a1,
    std::span<const int8_t> s1, std::span<const int32_t> a2,
    std::span<const int8_t> s2, int child_count, rng::Key key) {
  model::require_valid(p);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  double h1 = 0.0, h2 = 0.0;
  int64_t node1 = 0, node2 = 0;
  std::vector<double> g(static_cast<size_t>(n) * n);
  for (int l = 1; l <= p.r; ++l) {
    node1 = node1 * child_count + a1[static_cast<size_t>(l - 1)];
    node2 = node2 * child_count + a2[static_cast<size_t>(l - 1)];
    double dg = detail::delta_gamma(p, l);
    for (int which = 0; which < 2; ++which) {
      int64_t node = which == 0 ? node1 : node2;
      if (which == 1 && node2 == node1) continue;
      rng::Stream st = key.child("coupling")
                           .child(static_cast<uint64_t>(l))
                           .child(static_cast<uint64_t>(node))
                           .stream();
      for (auto& x : g) x = st.normal();
      for (int pass = 0; pass < 2; ++pass) {
        if ((pass == 0 ? node1 : node2) != node) continue;
        const auto& s = pass == 0 ? s1 : s2;
        double quad = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            quad += g[static_cast<size_t>(i * n + j)] * s[static_cast<size_t>(i)] *
                    s[static_cast<size_t>(j)];
        (pass == 0 ? h1 : h2) += dg * inv_sqrt_n * quad;
      }
    }
  }
  return {h1, h2};
}

}  // namespace mssk::sim
