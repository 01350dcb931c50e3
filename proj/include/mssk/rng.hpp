#pragma once
// Counter-based random streams (Philox4x64-10).
//
// Every stochastic component derives its own stream from a chain of
// (seed, tag, index, ...) words, so replicas and tree nodes can be sampled
// in any order, on any number of threads, with bit-identical results.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace mssk::rng {

inline constexpr uint64_t kSplitmixGamma = UINT64_C(0x9E3779B97F4A7C15);

inline uint64_t splitmix64(uint64_t x) {
  x += kSplitmixGamma;
  x = (x ^ (x >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
  x = (x ^ (x >> 27)) * UINT64_C(0x94D049BB133111EB);
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = UINT64_C(0xcbf29ce484222325);
  for (unsigned char c : s) {
    h ^= c;
    h *= UINT64_C(0x100000001b3);
  }
  return h;
}

// One 10-round Philox4x64 block. Constants from the Random123 family;
// output matches numpy.random.Philox block-for-block (numpy increments its
// counter before producing the first block, this function does not).
inline void philox4x64_block(const uint64_t ctr[4], const uint64_t key[2],
                             uint64_t out[4]) {
  constexpr uint64_t M0 = UINT64_C(0xD2E7470EE14C6C93);
  constexpr uint64_t M1 = UINT64_C(0xCA5A826395121157);
  constexpr uint64_t W0 = UINT64_C(0x9E3779B97F4A7C15);
  constexpr uint64_t W1 = UINT64_C(0xBB67AE8584CAA73B);
  uint64_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
  uint64_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    __uint128_t p0 = static_cast<__uint128_t>(M0) * c0;
    __uint128_t p1 = static_cast<__uint128_t>(M1) * c2;
    uint64_t hi0 = static_cast<uint64_t>(p0 >> 64);
    uint64_t lo0 = static_cast<uint64_t>(p0);
    uint64_t hi1 = static_cast<uint64_t>(p1 >> 64);
    uint64_t lo1 = static_cast<uint64_t>(p1);
    uint64_t n0 = hi1 ^ c1 ^ k0;
    uint64_t n1 = lo1;
    uint64_t n2 = hi0 ^ c3 ^ k1;
    uint64_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += W0;
    k1 += W1;
  }
  out[0] = c0;
  out[1] = c1;
  out[2] = c2;
  out[3] = c3;
}

class Stream {
 public:
  Stream(uint64_t key0, uint64_t key1, uint64_t ctr2 = 0, uint64_t ctr3 = 0)
      : key_{key0, key1}, ctr_{0, 0, ctr2, ctr3} {}

  uint64_t u64() {
    if (idx_ == 4) refill();
    return buf_[idx_++];
  }

  // uniform in (0, 1]: 53-bit mantissa, never 0 so logs are safe
  double u01() {
    return (static_cast<double>(u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double r = std::sqrt(-2.0 * std::log(u01()));
    double t = 6.283185307179586477 * u01();
    cached_ = r * std::sin(t);
    have_cached_ = true;
    return r * std::cos(t);
  }

  double exponential() { return -std::log(u01()); }

 private:
  void refill() {
    philox4x64_block(ctr_, key_, buf_);
    if (++ctr_[0] == 0) ++ctr_[1];
    idx_ = 0;
  }

  uint64_t key_[2];
  uint64_t ctr_[4];
  uint64_t buf_[4];
  int idx_ = 4;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// Chained derivation handle. Key(seed).child("tag").child(i).stream() gives
// a stream independent (to hash quality) of every other derivation chain.
class Key {
 public:
  explicit Key(uint64_t seed) : h_(splitmix64(seed ^ UINT64_C(0x6d73736b2e726e67))) {}

  Key child(uint64_t w) const {
    Key k(*this);
    k.h_ = splitmix64(k.h_ ^ splitmix64(w));
    return k;
  }

  Key child(std::string_view tag) const { return child(fnv1a64(tag)); }

  Stream stream() const {
    uint64_t k0 = splitmix64(h_ ^ UINT64_C(1));
    uint64_t k1 = splitmix64(h_ ^ UINT64_C(2));
    uint64_t c2 = splitmix64(h_ ^ UINT64_C(3));
    uint64_t c3 = splitmix64(h_ ^ UINT64_C(4));
    return Stream(k0, k1, c2, c3);
  }

  uint64_t raw() const { return h_; }

 private:
  uint64_t h_;
};

}  // namespace mssk::rng
