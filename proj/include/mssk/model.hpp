#pragma once
// Model parameters, configurations, overlaps, and the covariance kernel of
// the multiscale SK Hamiltonian.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace mssk::model {

// leaf address in the index tree: one child index per level
using LeafIndex = std::vector<int32_t>;

// spins in {-1,+1}
using SpinConfig = std::vector<int8_t>;

enum class ParamError {
  ok,
  non_monotone_zeta,
  non_monotone_gamma,
  depth_mismatch,
};

struct invalid_params : std::invalid_argument {
  ParamError code;
  invalid_params(ParamError c, const char* what)
      : std::invalid_argument(what), code(c) {}
};

struct length_mismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// beta = (zeta, gamma) with depth r. Stored: zeta_0..zeta_{r-1} and
// gamma_1..gamma_r. The boundary values zeta_{-1}=0, zeta_r=1, gamma_0=0 are
// materialized by the accessors and can never be stored inconsistently.
struct ModelParams {
  int r = 0;
  std::vector<double> zeta;   // size r
  std::vector<double> gamma;  // size r, entries gamma_1..gamma_r

  // l in [-1, r]
  double zeta_at(int l) const {
    if (l <= -1) return 0.0;
    if (l >= r) return 1.0;
    return zeta[static_cast<size_t>(l)];
  }

  // l in [0, r]
  double gamma_at(int l) const {
    if (l <= 0) return 0.0;
    return gamma[static_cast<size_t>(l - 1)];
  }
};

inline ParamError validate_params(const ModelParams& p) {
  if (p.r < 1 || p.zeta.size() != static_cast<size_t>(p.r) ||
      p.gamma.size() != static_cast<size_t>(p.r))
    return ParamError::depth_mismatch;
  double prev = 0.0;
  for (double z : p.zeta) {
    if (!(z > prev)) return ParamError::non_monotone_zeta;
    prev = z;
  }
  if (!(prev < 1.0)) return ParamError::non_monotone_zeta;
  prev = 0.0;
  for (double g : p.gamma) {
    if (!(g > prev)) return ParamError::non_monotone_gamma;
    prev = g;
  }
  return ParamError::ok;
}

inline void require_valid(const ModelParams& p) {
  switch (validate_params(p)) {
    case ParamError::ok:
      return;
    case ParamError::non_monotone_zeta:
      throw invalid_params(ParamError::non_monotone_zeta,
                           "zeta must satisfy 0 < zeta_0 < ... < zeta_{r-1} < 1");
    case ParamError::non_monotone_gamma:
      throw invalid_params(ParamError::non_monotone_gamma,
                           "gamma must satisfy 0 < gamma_1 < ... < gamma_r");
    case ParamError::depth_mismatch:
      throw invalid_params(ParamError::depth_mismatch,
                           "zeta and gamma must both have length r >= 1");
  }
}

// depth of the deepest common node; equal leaves map to r
inline int ancestor_level(std::span<const int32_t> a, std::span<const int32_t> b) {
  if (a.size() != b.size())
    throw length_mismatch("ancestor_level: paths of different depth");
  size_t l = 0;
  while (l < a.size() && a[l] == b[l]) ++l;
  return static_cast<int>(l);
}

inline double overlap(std::span<const int8_t> s1, std::span<const int8_t> s2) {
  if (s1.size() != s2.size() || s1.empty())
    throw length_mismatch("overlap: configurations of different size");
  int64_t acc = 0;
  for (size_t i = 0; i < s1.size(); ++i)
    acc += static_cast<int>(s1[i]) * static_cast<int>(s2[i]);
  return static_cast<double>(acc) / static_cast<double>(s1.size());
}

// c(sigma1,alpha1; sigma2,alpha2) = gamma_{alpha1 ^ alpha2} * q(sigma1,sigma2)
inline double scaled_covariance(const ModelParams& p, std::span<const int32_t> a,
                                std::span<const int32_t> b,
                                std::span<const int8_t> s1,
                                std::span<const int8_t> s2) {
  require_valid(p);
  if (a.size() != static_cast<size_t>(p.r))
    throw length_mismatch("scaled_covariance: path depth != r");
  return p.gamma_at(ancestor_level(a, b)) * overlap(s1, s2);
}

// exact spin enumeration bound used across the estimators
inline constexpr int kMaxEnumSpins = 24;

struct n_too_large : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline void require_enumerable(int n, int cap = kMaxEnumSpins) {
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  if (n > cap)
    throw n_too_large("N exceeds the exact-enumeration cap");
}

// contract for every Monte Carlo estimate
struct PressureEstimate {
  double mean = 0.0;
  double stderr_mean = 0.0;
  int64_t replicas = 0;
  uint64_t seed = 0;
};

}  // namespace mssk::model
