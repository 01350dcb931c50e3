#pragma once
// Truncated Ruelle probability cascade sampling.
//
// Each node keeps the M largest atoms of its Poisson process, realized as
// Gamma_n^(-1/zeta) with Gamma_n partial sums of unit exponentials. The
// process mass below the smallest retained atom u_M has conditional
// expectation t = zeta * u_M^(1-zeta) / (1-zeta); pure truncation loses it,
// which biases weight statistics by O(M^(1-1/zeta)). We therefore append J
// tail shares per node, each carrying t/J and rooting an independently
// sampled subtree. J = 0 recovers plain truncation.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mssk/model.hpp"
#include "mssk/numeric.hpp"
#include "mssk/rng.hpp"

namespace mssk::rpc {

struct CascadeConfig {
  int width = 32;       // M, exact atoms retained per node
  int tail_shares = 8;  // J, pseudo children carrying the expected tail mass
};

struct invalid_zeta : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct width_too_small : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CascadeSample {
  int depth = 0;
  int width = 0;
  int tail_shares = 0;

  // node_log_u[l] holds, for every node at level l (0 = root), the log atom
  // values of its children, flattened as node_id * child_count + child.
  // Children 0..width-1 are the retained atoms in descending order; children
  // width.. are the equal tail shares.
  std::vector<std::vector<double>> node_log_u;

  std::vector<double> leaf_log_w;  // raw log path products
  std::vector<double> leaf_nu;     // normalized, sums to 1
  double leftover_mass_bound = 0.0;

  int child_count() const { return width + tail_shares; }

  int64_t leaf_count() const { return static_cast<int64_t>(leaf_nu.size()); }

  model::LeafIndex leaf_path(int64_t id) const {
    model::LeafIndex path(depth);
    int64_t c = child_count();
    for (int l = depth - 1; l >= 0; --l) {
      path[static_cast<size_t>(l)] = static_cast<int32_t>(id % c);
      id /= c;
    }
    return path;
  }

  int ancestor_of(int64_t id1, int64_t id2) const {
    if (id1 == id2) return depth;
    int64_t c = child_count();
    int64_t div = 1;
    for (int l = 1; l < depth; ++l) div *= c;
    int level = 0;
    while (div > 0 && id1 / div == id2 / div) {
      ++level;
      id1 %= div;
      id2 %= div;
      div /= c;
    }
    return level;
  }

  // does the path of this leaf pass through any tail share
  bool touches_tail(int64_t id) const {
    int64_t c = child_count();
    for (int l = 0; l < depth; ++l) {
      if (id % c >= width) return true;
      id /= c;
    }
    return false;
  }
};

namespace detail {

// children of one node: M atoms descending, then J equal tail shares.
// Returns log atom values; out must have size M + J.
inline void sample_node_children(double zeta, int m, int j, rng::Stream& st,
                                 std::span<double> out) {
  double gamma_sum = 0.0;
  double inv_zeta = 1.0 / zeta;
  for (int n = 0; n < m; ++n) {
    gamma_sum += st.exponential();
    out[static_cast<size_t>(n)] = -inv_zeta * std::log(gamma_sum);
  }
  if (j > 0) {
    double log_u_m = out[static_cast<size_t>(m - 1)];
    double log_t = std::log(zeta / (1.0 - zeta)) + (1.0 - zeta) * log_u_m;
    double share = log_t - std::log(static_cast<double>(j));
    for (int n = 0; n < j; ++n) out[static_cast<size_t>(m + n)] = share;
  }
}

}  // namespace detail

inline CascadeSample sample_cascade(std::span<const double> zeta, int depth,
                                    const CascadeConfig& cfg, rng::Key key) {
  if (depth < 1 || zeta.size() != static_cast<size_t>(depth))
    throw invalid_zeta("sample_cascade: zeta length must equal depth");
  double prev = 0.0;
  for (double z : zeta) {
    if (!(z > prev) || !(z < 1.0))
      throw invalid_zeta("sample_cascade: zeta must be strictly increasing in (0,1)");
    prev = z;
  }
  if (cfg.width < 2) throw width_too_small("sample_cascade: width must be >= 2");
  if (cfg.tail_shares < 0)
    throw std::invalid_argument("sample_cascade: tail_shares must be >= 0");

  CascadeSample s;
  s.depth = depth;
  s.width = cfg.width;
  s.tail_shares = cfg.tail_shares;
  const int c = s.child_count();

  int64_t nodes = 1;
  for (int l = 0; l < depth; ++l) {
    if (nodes > (int64_t{1} << 40) / c)
      throw std::invalid_argument("sample_cascade: tree too large");
    s.node_log_u.emplace_back(static_cast<size_t>(nodes * c));
    auto& level = s.node_log_u.back();
    rng::Key level_key = key.child("cascade").child(static_cast<uint64_t>(l));
    for (int64_t n = 0; n < nodes; ++n) {
      rng::Stream st = level_key.child(static_cast<uint64_t>(n)).stream();
      detail::sample_node_children(
          zeta[static_cast<size_t>(l)], cfg.width, cfg.tail_shares, st,
          std::span<double>(level.data() + n * c, static_cast<size_t>(c)));
    }
    nodes *= c;
  }

  // path products, then global normalization over leaves
  std::vector<double> acc{0.0};
  for (int l = 0; l < depth; ++l) {
    const auto& level = s.node_log_u[static_cast<size_t>(l)];
    std::vector<double> next(acc.size() * static_cast<size_t>(c));
    for (size_t n = 0; n < acc.size(); ++n)
      for (int ch = 0; ch < c; ++ch)
        next[n * static_cast<size_t>(c) + static_cast<size_t>(ch)] =
            acc[n] + level[n * static_cast<size_t>(c) + static_cast<size_t>(ch)];
    acc = std::move(next);
  }
  s.leaf_log_w = std::move(acc);
  double lse = num::log_sum_exp(s.leaf_log_w);
  s.leaf_nu.resize(s.leaf_log_w.size());
  for (size_t i = 0; i < s.leaf_nu.size(); ++i)
    s.leaf_nu[i] = std::exp(s.leaf_log_w[i] - lse);

  if (cfg.tail_shares > 0) {
    double tail_mass = 0.0;
    for (int64_t i = 0; i < s.leaf_count(); ++i)
      if (s.touches_tail(i)) tail_mass += s.leaf_nu[static_cast<size_t>(i)];
    s.leftover_mass_bound = tail_mass;
  } else {
    // estimate the unretained fraction from the per-node tail masses,
    // propagated along the per-node normalized flow
    double lost = 0.0;
    std::vector<double> flow{1.0};
    for (int l = 0; l < depth; ++l) {
      const auto& level = s.node_log_u[static_cast<size_t>(l)];
      double z = zeta[static_cast<size_t>(l)];
      int64_t node_count = static_cast<int64_t>(flow.size());
      std::vector<double> next(static_cast<size_t>(node_count * c));
      for (int64_t n = 0; n < node_count; ++n) {
        std::span<const double> ch(level.data() + n * c, static_cast<size_t>(c));
        double log_s = num::log_sum_exp(ch);
        double log_u_m = ch[static_cast<size_t>(cfg.width - 1)];
        double log_t = std::log(z / (1.0 - z)) + (1.0 - z) * log_u_m;
        double frac = 1.0 / (1.0 + std::exp(log_s - log_t));
        lost += flow[static_cast<size_t>(n)] * frac;
        for (int chi = 0; chi < c; ++chi)
          next[static_cast<size_t>(n * c + chi)] =
              flow[static_cast<size_t>(n)] * (1.0 - frac) *
              std::exp(ch[static_cast<size_t>(chi)] - log_s);
      }
      flow = std::move(next);
    }
    s.leftover_mass_bound = lost;
  }
  return s;
}

// P(ancestor level = l) for a pair drawn from normalized leaf masses,
// computed exactly from subtree sums: P(level >= l) = sum over level-l nodes
// of mass^2.
inline std::vector<double> pair_level_law(std::span<const double> leaf_mass,
                                          int depth, int child_count) {
  std::vector<double> mass(leaf_mass.begin(), leaf_mass.end());
  std::vector<double> p_ge(static_cast<size_t>(depth) + 1);
  p_ge[static_cast<size_t>(depth)] = 0.0;
  for (double m : mass) p_ge[static_cast<size_t>(depth)] += m * m;
  for (int l = depth - 1; l >= 0; --l) {
    std::vector<double> up(mass.size() / static_cast<size_t>(child_count), 0.0);
    for (size_t n = 0; n < up.size(); ++n)
      for (int ch = 0; ch < child_count; ++ch)
        up[n] += mass[n * static_cast<size_t>(child_count) + static_cast<size_t>(ch)];
    mass = std::move(up);
    p_ge[static_cast<size_t>(l)] = 0.0;
    for (double m : mass) p_ge[static_cast<size_t>(l)] += m * m;
  }
  std::vector<double> law(static_cast<size_t>(depth) + 1);
  for (int l = 0; l <= depth; ++l) {
    double hi = (l + 1 <= depth) ? p_ge[static_cast<size_t>(l + 1)] : 0.0;
    law[static_cast<size_t>(l)] = p_ge[static_cast<size_t>(l)] - hi;
  }
  law[0] = 1.0 - p_ge[1];  // P(level >= 0) = 1 exactly
  return law;
}

inline std::vector<double> pair_level_law(const CascadeSample& s) {
  return pair_level_law(s.leaf_nu, s.depth, s.child_count());
}

// CDF over leaves for inverse-transform pair draws
inline std::vector<double> leaf_cdf(const CascadeSample& s) {
  std::vector<double> cdf(s.leaf_nu.size());
  double acc = 0.0;
  for (size_t i = 0; i < cdf.size(); ++i) {
    acc += s.leaf_nu[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;
  return cdf;
}

inline int64_t sample_from_cdf(std::span<const double> cdf, double u) {
  auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<int64_t>(it - cdf.begin());
}

}  // namespace mssk::rpc
