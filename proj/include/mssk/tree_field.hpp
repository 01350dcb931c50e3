#pragma once
// Centered Gaussian fields on the leaves of an index tree, with covariance
// v_{a ^ b} given by a nondecreasing profile (v_0, ..., v_depth). Realized by
// per-node independent standard Gaussians scaled by sqrt(v_l - v_{l-1}); the
// v_0 component is a single root draw shared by every leaf.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mssk/rng.hpp"

namespace mssk::rpc {

struct non_monotone_profile : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CovarianceProfile {
  std::vector<double> v;  // v_0 .. v_depth

  int depth() const { return static_cast<int>(v.size()) - 1; }

  void validate() const {
    if (v.size() < 2)
      throw non_monotone_profile("profile needs at least (v_0, v_1)");
    if (!(v[0] >= 0.0)) throw non_monotone_profile("profile must have v_0 >= 0");
    for (size_t i = 1; i < v.size(); ++i)
      if (!(v[i] >= v[i - 1]))
        throw non_monotone_profile("profile must be nondecreasing");
  }

  double increment_sd(int l) const {  // l in [0, depth], level 0 is the root part
    double lo = (l == 0) ? 0.0 : v[static_cast<size_t>(l - 1)];
    return std::sqrt(v[static_cast<size_t>(l)] - lo);
  }
};

class TreeGaussianField {
 public:
  // child_count^l nodes at level l; draws keyed by (level, node id)
  TreeGaussianField(CovarianceProfile profile, int depth, int child_count,
                    rng::Key key)
      : profile_(std::move(profile)), depth_(depth), child_count_(child_count) {
    profile_.validate();
    if (profile_.depth() != depth)
      throw non_monotone_profile("profile depth does not match tree depth");
    root_draw_ = key.child("field").child(uint64_t{0}).stream().normal();
    int64_t nodes = 1;
    node_draws_.resize(static_cast<size_t>(depth));
    for (int l = 1; l <= depth; ++l) {
      nodes *= child_count;
      auto& level = node_draws_[static_cast<size_t>(l - 1)];
      level.resize(static_cast<size_t>(nodes));
      rng::Key level_key = key.child("field").child(static_cast<uint64_t>(l));
      // one stream per contiguous block keeps derivation cost sub-dominant
      for (int64_t n = 0; n < nodes; n += kBlock) {
        rng::Stream st = level_key.child(static_cast<uint64_t>(n)).stream();
        int64_t hi = std::min(nodes, n + kBlock);
        for (int64_t i = n; i < hi; ++i)
          level[static_cast<size_t>(i)] = st.normal();
      }
    }
  }

  int depth() const { return depth_; }
  const CovarianceProfile& profile() const { return profile_; }

  // increments g_0..g_depth along the path of a leaf; buf size = depth+1
  void path_increments(int64_t leaf, std::span<double> buf) const {
    buf[0] = root_draw_ * profile_.increment_sd(0);
    int64_t div = 1;
    for (int l = 1; l < depth_; ++l) div *= child_count_;
    int64_t id = leaf;
    int64_t prefix = 0;
    for (int l = 1; l <= depth_; ++l) {
      prefix = prefix * child_count_ + id / div;
      id %= div;
      buf[static_cast<size_t>(l)] =
          node_draws_[static_cast<size_t>(l - 1)][static_cast<size_t>(prefix)] *
          profile_.increment_sd(l);
      div /= child_count_;
    }
  }

  double leaf_value(int64_t leaf) const {
    std::vector<double> buf(static_cast<size_t>(depth_) + 1);
    path_increments(leaf, buf);
    double s = 0.0;
    for (double x : buf) s += x;
    return s;
  }

 private:
  static constexpr int64_t kBlock = 64;
  CovarianceProfile profile_;
  int depth_;
  int child_count_;
  double root_draw_;
  std::vector<std::vector<double>> node_draws_;
};

}  // namespace mssk::rpc
