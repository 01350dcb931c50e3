#pragma once
// Ghirlanda-Guerra delta diagnostic under the unperturbed quenched Gibbs
// measure:
//   Delta(f,n,w,p) = | <f R_{1,n+1}^p> - (1/n) <f> <R_{1,2}^p>
//                                      - (1/n) sum_{l=2..n} <f R_{1,l}^p> |
// with the mixed overlap R(w) = w_0 gamma_{and} + w_1 q_N. Test functions come
// from a fixed library of bounded functions of the n x n overlap array.
//
// Every Gibbs average is estimated from (n+1)-tuples of independent draws and
// symmetrized over all (n+1)! relabelings of the tuple. Symmetrization makes
// the f == 1 cancellation exact per tuple instead of only in expectation, so
// that case checks out at roundoff level. The stderr of Delta is a jackknife
// over disorder replicas (Delta is a nonlinear function of the term means).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mssk/model.hpp"
#include "mssk/parallel.hpp"
#include "mssk/rng.hpp"
#include "mssk/simulate.hpp"
#include "mssk/stats.hpp"

namespace mssk::gg {

inline std::invalid_argument unknown_test_function(std::string_view name) {
  return std::invalid_argument("gg_delta: unknown test function '" +
                               std::string(name) + "'");
}

// bounded functions of the overlap array; rw holds R(w)_{ab}, cv holds
// gamma_{and} q_{ab}, both m x m row-major, idx the replica relabeling
struct TestFunction {
  std::string name;
  int min_n = 2;
  double (*eval)(const double* rw, const double* cv, int m, const int* idx);
};

inline const std::vector<TestFunction>& test_function_library() {
  static const std::vector<TestFunction> lib = {
      {"one", 2, [](const double*, const double*, int, const int*) { return 1.0; }},
      {"q12", 2,
       [](const double* rw, const double*, int m, const int* idx) {
         return rw[idx[0] * m + idx[1]];
       }},
      {"q12_sq", 2,
       [](const double* rw, const double*, int m, const int* idx) {
         return num::sqr(rw[idx[0] * m + idx[1]]);
       }},
      {"c12", 2,
       [](const double*, const double* cv, int m, const int* idx) {
         return cv[idx[0] * m + idx[1]];
       }},
      {"q12q13", 3,
       [](const double* rw, const double*, int m, const int* idx) {
         return rw[idx[0] * m + idx[1]] * rw[idx[0] * m + idx[2]];
       }},
      {"soft_step", 2,
       [](const double* rw, const double*, int m, const int* idx) {
         return 1.0 / (1.0 + std::exp(-8.0 * (rw[idx[0] * m + idx[1]] - 0.5)));
       }},
  };
  return lib;
}

inline const TestFunction& find_test_function(std::string_view name) {
  for (const auto& f : test_function_library())
    if (f.name == name) return f;
  throw unknown_test_function(name);
}

struct GgOptions {
  rpc::CascadeConfig cascade;
  int64_t replicas = 200;
  int64_t tuples_per_replica = 400;
  uint64_t seed = 1;
  int threads = 0;
};

struct GgResult {
  double delta = 0.0;
  double delta_stderr = 0.0;  // jackknife over disorder replicas
  double coupled = 0.0;       // <f R_{1,n+1}^p>
  double f_mean = 0.0;        // <f>
  double moment = 0.0;        // <R_{1,2}^p>
  double lower_sum = 0.0;     // sum_{l=2..n} <f R_{1,l}^p>
  std::string f_name;
  int n = 0;
  int p = 0;
  double w0 = 0.0, w1 = 0.0;
  int64_t replicas = 0;
  int64_t tuples_per_replica = 0;
  uint64_t seed = 0;
};

namespace detail {

inline double ipow(double x, int p) {
  double out = 1.0;
  for (int i = 0; i < p; ++i) out *= x;
  return out;
}

inline std::vector<std::vector<int>> all_permutations(int m) {
  std::vector<int> idx(static_cast<size_t>(m));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(idx);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

}  // namespace detail

inline GgResult gg_delta(const model::ModelParams& params, int n_spins,
                         std::string_view f_name, int n, double w0, double w1,
                         int p, const GgOptions& opt) {
  model::require_valid(params);
  model::require_enumerable(n_spins, 16);
  const TestFunction& f = find_test_function(f_name);
  if (n < f.min_n)
    throw std::invalid_argument("gg_delta: test function '" + f.name +
                                "' needs n >= " + std::to_string(f.min_n));
  if (n < 2 || n > 5)
    throw std::invalid_argument("gg_delta: n must lie in [2, 5]");
  if (p < 0) throw std::invalid_argument("gg_delta: power must be nonnegative");

  const int m = n + 1;
  const auto perms = detail::all_permutations(m);
  const double inv_perms = 1.0 / static_cast<double>(perms.size());
  rng::Key base = rng::Key(opt.seed).child("gg-delta");

  const size_t reps = static_cast<size_t>(opt.replicas);
  std::vector<double> u_rep(reps), x_rep(reps), y_rep(reps), s_rep(reps);

  par::for_each_replica(opt.replicas, opt.threads, [&](int64_t rep) {
    rng::Key rk = base.child(static_cast<uint64_t>(rep));
    sim::DisorderRealization dis = sim::sample_disorder(params, n_spins, opt.cascade, rk);
    sim::GibbsTable table = sim::build_gibbs_table(params, dis);
    rng::Stream st = rk.child("tuples").stream();

    std::vector<sim::GibbsTable::Draw> tup(static_cast<size_t>(m));
    std::vector<double> rw(static_cast<size_t>(m) * m), cv(rw.size());
    double u = 0.0, x = 0.0, y = 0.0, s = 0.0;
    for (int64_t t = 0; t < opt.tuples_per_replica; ++t) {
      for (auto& d : tup) d = table.sample(st);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          double ganc = params.gamma_at(
              dis.cascade.ancestor_of(tup[static_cast<size_t>(a)].leaf,
                                      tup[static_cast<size_t>(b)].leaf));
          double q = sim::spin_overlap_from_masks(tup[static_cast<size_t>(a)].mask,
                                                  tup[static_cast<size_t>(b)].mask, n_spins);
          rw[static_cast<size_t>(a * m + b)] = w0 * ganc + w1 * q;
          cv[static_cast<size_t>(a * m + b)] = ganc * q;
        }
      double tu = 0.0, tx = 0.0, ty = 0.0, ts = 0.0;
      for (const auto& perm : perms) {
        const int* idx = perm.data();
        double fv = f.eval(rw.data(), cv.data(), m, idx);
        tu += fv * detail::ipow(rw[static_cast<size_t>(idx[0] * m + idx[n])], p);
        tx += fv;
        ty += detail::ipow(rw[static_cast<size_t>(idx[0] * m + idx[1])], p);
        double lower = 0.0;
        for (int l = 1; l < n; ++l)
          lower += detail::ipow(rw[static_cast<size_t>(idx[0] * m + idx[l])], p);
        ts += fv * lower;
      }
      u += tu * inv_perms;
      x += tx * inv_perms;
      y += ty * inv_perms;
      s += ts * inv_perms;
    }
    const double inv_t = 1.0 / static_cast<double>(opt.tuples_per_replica);
    u_rep[static_cast<size_t>(rep)] = u * inv_t;
    x_rep[static_cast<size_t>(rep)] = x * inv_t;
    y_rep[static_cast<size_t>(rep)] = y * inv_t;
    s_rep[static_cast<size_t>(rep)] = s * inv_t;
  });

  auto mean_of = [&](const std::vector<double>& v) {
    return stats::reduce_ordered(v).mean();
  };
  const double big_u = mean_of(u_rep), big_x = mean_of(x_rep);
  const double big_y = mean_of(y_rep), big_s = mean_of(s_rep);
  auto delta_of = [n](double uu, double xx, double yy, double ss) {
    return std::fabs(uu - xx * yy / n - ss / n);
  };

  GgResult out;
  out.delta = delta_of(big_u, big_x, big_y, big_s);
  out.coupled = big_u;
  out.f_mean = big_x;
  out.moment = big_y;
  out.lower_sum = big_s;
  out.f_name = f.name;
  out.n = n;
  out.p = p;
  out.w0 = w0;
  out.w1 = w1;
  out.replicas = opt.replicas;
  out.tuples_per_replica = opt.tuples_per_replica;
  out.seed = opt.seed;

  if (opt.replicas >= 2) {
    const double r = static_cast<double>(opt.replicas);
    std::vector<double> loo(reps);
    for (size_t i = 0; i < reps; ++i) {
      double ui = (r * big_u - u_rep[i]) / (r - 1.0);
      double xi = (r * big_x - x_rep[i]) / (r - 1.0);
      double yi = (r * big_y - y_rep[i]) / (r - 1.0);
      double si = (r * big_s - s_rep[i]) / (r - 1.0);
      loo[i] = delta_of(ui, xi, yi, si);
    }
    double lm = mean_of(loo);
    double ss = 0.0;
    for (double v : loo) ss += num::sqr(v - lm);
    out.delta_stderr = std::sqrt((r - 1.0) / r * ss);
  }
  return out;
}

}  // namespace mssk::gg
