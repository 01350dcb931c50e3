#pragma once
// Minimization of the discrete Parisi functional over the trial space.
//
// The search space for a given depth k is unconstrained R^d mapped onto valid
// trial points by construction, never by rejection:
//   - free xi values live in the open gaps between consecutive zeta values
//     (zeta itself is always part of xi). Slots are dealt to the gaps round
//     robin from the deepest gap down; the gap below zeta_0 is skipped because
//     gamma_tilde vanishes there and such levels cannot move the functional.
//     Within a gap, stick-breaking sigmoids keep the points ordered and
//     strictly interior.
//   - q increments over the k segments come from a softmax with the last
//     logit pinned to zero, so q_0 = 0 <= ... <= q_k = 1 always holds.
// gamma_tilde is nondecreasing in j and q increasing, so the w-monotonicity
// constraint of the trial space holds automatically.
//
// Depths are visited in schedule order; each depth is seeded with the default
// point, the embedded best trial of the previous depth (new xi slots at the
// widest sub-gaps, new q points splitting the largest increments), and random
// starts. Search runs on the fast Chebyshev preset; the winner of each depth
// is re-evaluated with the accurate preset for reporting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mssk/model.hpp"
#include "mssk/parallel.hpp"
#include "mssk/parisi.hpp"
#include "mssk/rng.hpp"

namespace mssk::opt {

inline std::invalid_argument infeasible_start(const std::string& what) {
  return std::invalid_argument("minimize_parisi: infeasible start: " + what);
}

inline std::invalid_argument mismatched_params(const std::string& what) {
  return std::invalid_argument("bound_report: mismatched params: " + what);
}

struct OptimizationConfig {
  std::vector<int> k_schedule;  // empty: use r, r+1, r+2, r+4
  int restarts = 8;
  int64_t max_evals = 2000;  // per restart
  double tolerance = 1e-6;
  uint64_t seed = 1;
  int threads = 0;
};

struct TraceEntry {
  int k = 0;
  int restart = 0;
  int64_t evals = 0;
  double value = 0.0;  // fast-engine value at this restart's end
};

struct KSummary {
  int k = 0;
  double fast_value = 0.0;
  double value = 0.0;  // accurate recompute of the depth winner
};

struct OptimizationResult {
  parisi::TrialPoint best_trial;
  double best_value = 0.0;  // accurate recompute at report time
  int64_t eval_count = 0;
  bool budget_exhausted = false;
  std::vector<TraceEntry> trace;
  std::vector<KSummary> per_k;
};

// ---------------------------------------------------------------------------
// generic Nelder-Mead simplex descent

struct NelderMeadOptions {
  int64_t max_evals = 2000;
  double tolerance = 1e-9;  // stop when the simplex value spread drops below
  double step = 0.8;        // initial simplex edge
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int64_t evals = 0;
  bool converged = false;
};

template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0,
                             const NelderMeadOptions& opt) {
  const size_t d = x0.size();
  NelderMeadResult out;
  if (d == 0) {
    out.x = std::move(x0);
    out.value = f(out.x);
    out.evals = 1;
    out.converged = true;
    return out;
  }

  std::vector<std::vector<double>> xs(d + 1, x0);
  std::vector<double> vals(d + 1);
  int64_t evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  for (size_t i = 1; i <= d; ++i) xs[i][i - 1] += opt.step;
  for (size_t i = 0; i <= d; ++i) vals[i] = eval(xs[i]);

  std::vector<size_t> order(d + 1);
  std::vector<double> centroid(d), cand(d);
  bool converged = false;
  while (evals < opt.max_evals) {
    for (size_t i = 0; i <= d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return vals[a] < vals[b]; });
    if (vals[order[d]] - vals[order[0]] < opt.tolerance) {
      converged = true;
      break;
    }
    size_t lo = order[0], hi = order[d], second = order[d - 1];
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (size_t i = 0; i <= d; ++i) {
      if (i == hi) continue;
      for (size_t j = 0; j < d; ++j) centroid[j] += xs[i][j];
    }
    for (size_t j = 0; j < d; ++j) centroid[j] /= static_cast<double>(d);

    auto blend = [&](double coef) {
      for (size_t j = 0; j < d; ++j)
        cand[j] = centroid[j] + coef * (xs[hi][j] - centroid[j]);
    };
    blend(-1.0);  // reflect
    double vr = eval(cand);
    if (vr < vals[lo]) {
      std::vector<double> refl = cand;
      blend(-2.0);  // expand
      double ve = eval(cand);
      if (ve < vr) {
        xs[hi] = cand;
        vals[hi] = ve;
      } else {
        xs[hi] = std::move(refl);
        vals[hi] = vr;
      }
      continue;
    }
    if (vr < vals[second]) {
      xs[hi] = cand;
      vals[hi] = vr;
      continue;
    }
    if (vr < vals[hi]) {
      blend(-0.5);  // outside contraction
      double vc = eval(cand);
      if (vc <= vr) {
        xs[hi] = cand;
        vals[hi] = vc;
        continue;
      }
    } else {
      blend(0.5);  // inside contraction
      double vc = eval(cand);
      if (vc < vals[hi]) {
        xs[hi] = cand;
        vals[hi] = vc;
        continue;
      }
    }
    for (size_t i = 0; i <= d; ++i) {  // shrink toward the best vertex
      if (i == lo) continue;
      for (size_t j = 0; j < d; ++j)
        xs[i][j] = xs[lo][j] + 0.5 * (xs[i][j] - xs[lo][j]);
      vals[i] = eval(xs[i]);
    }
  }

  size_t best = 0;
  for (size_t i = 1; i <= d; ++i)
    if (vals[i] < vals[best]) best = i;
  out.x = xs[best];
  out.value = vals[best];
  out.evals = evals;
  out.converged = converged;
  return out;
}

// ---------------------------------------------------------------------------
// parameterization

namespace detail {

inline double sigmoid(double t) {
  t = std::clamp(t, -30.0, 30.0);
  return 1.0 / (1.0 + std::exp(-t));
}

inline double logit(double s) {
  s = std::clamp(s, 1e-13, 1.0 - 1e-13);
  return std::log(s / (1.0 - s));
}

struct SearchSpace {
  const model::ModelParams* params = nullptr;
  int k = 0;
  std::vector<int> gap_count;  // per gap g = 0..r; gap 0 stays empty

  SearchSpace(const model::ModelParams& p, int depth) : params(&p), k(depth) {
    if (k < p.r) throw infeasible_start("depth k below the model depth r");
    gap_count.assign(static_cast<size_t>(p.r) + 1, 0);
    int g = p.r;
    for (int slot = 0; slot < k - p.r; ++slot) {
      ++gap_count[static_cast<size_t>(g)];
      --g;
      if (g < 1) g = p.r;
    }
  }

  int dim() const { return (k - params->r) + (k - 1); }

  parisi::TrialPoint decode(std::span<const double> th) const {
    const auto& p = *params;
    std::vector<double> xi_free;
    xi_free.reserve(static_cast<size_t>(k - p.r));
    size_t pos = 0;
    for (int g = 1; g <= p.r; ++g) {
      double lo = p.zeta_at(g - 1), hi = p.zeta_at(g);
      double t = 0.0;
      for (int i = 0; i < gap_count[static_cast<size_t>(g)]; ++i) {
        t += (1.0 - t) * sigmoid(th[pos++]);
        xi_free.push_back(lo + (hi - lo) * t);
      }
    }
    std::vector<double> w(static_cast<size_t>(k));
    double mx = 0.0;
    for (int i = 0; i + 1 < k; ++i) {
      w[static_cast<size_t>(i)] = std::clamp(th[pos++], -30.0, 30.0);
      mx = std::max(mx, w[static_cast<size_t>(i)]);
    }
    w[static_cast<size_t>(k - 1)] = 0.0;
    double denom = 0.0;
    for (double v : w) denom += std::exp(v - mx);
    std::vector<double> q(static_cast<size_t>(k) + 1, 0.0);
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
      acc += std::exp(w[static_cast<size_t>(i)] - mx) / denom;
      q[static_cast<size_t>(i) + 1] = std::min(acc, 1.0);
    }
    q.back() = 1.0;
    return parisi::build_trial(p, xi_free, q);
  }

  // inverse map for warm starts; t must have the gap occupancy this space
  // expects, which refine_trial guarantees
  std::vector<double> encode(const parisi::TrialPoint& t) const {
    const auto& p = *params;
    std::vector<double> free = t.xi;
    for (double z : p.zeta) {
      auto it = std::find(free.begin(), free.end(), z);
      if (it == free.end())
        throw infeasible_start("trial does not contain the zeta set");
      free.erase(it);
    }
    std::vector<double> th(static_cast<size_t>(dim()));
    size_t pos = 0;
    size_t at = 0;
    for (int g = 1; g <= p.r; ++g) {
      double lo = p.zeta_at(g - 1), hi = p.zeta_at(g);
      int c = gap_count[static_cast<size_t>(g)];
      double prev = 0.0;
      for (int i = 0; i < c; ++i) {
        if (at >= free.size() || !(free[at] > lo) || !(free[at] < hi))
          throw infeasible_start("trial gap occupancy does not match depth");
        double ti = (free[at++] - lo) / (hi - lo);
        th[pos++] = logit((ti - prev) / (1.0 - prev));
        prev = ti;
      }
    }
    if (at != free.size())
      throw infeasible_start("trial gap occupancy does not match depth");
    double last = std::log(std::max(t.q[static_cast<size_t>(t.k)] -
                                        t.q[static_cast<size_t>(t.k) - 1],
                                    1e-13));
    for (int i = 1; i < t.k; ++i) {
      double d = std::max(t.q[static_cast<size_t>(i)] - t.q[static_cast<size_t>(i) - 1],
                          1e-13);
      th[pos++] = std::clamp(std::log(d) - last, -30.0, 30.0);
    }
    return th;
  }
};

// embed a depth-k trial into a deeper space: new xi slots bisect the widest
// sub-intervals of their gaps, new q points bisect the largest increments
inline parisi::TrialPoint refine_trial(const model::ModelParams& p,
                                       const parisi::TrialPoint& prev,
                                       const SearchSpace& space) {
  std::vector<double> free = prev.xi;
  for (double z : p.zeta) {
    auto it = std::find(free.begin(), free.end(), z);
    if (it != free.end()) free.erase(it);
  }
  std::vector<std::vector<double>> per_gap(static_cast<size_t>(p.r) + 1);
  for (double x : free) {
    int l = 0;
    while (l < p.r && !(x <= p.zeta_at(l))) ++l;
    per_gap[static_cast<size_t>(l)].push_back(x);
  }
  for (int g = 1; g <= p.r; ++g) {
    auto& pts = per_gap[static_cast<size_t>(g)];
    std::sort(pts.begin(), pts.end());
    while (static_cast<int>(pts.size()) > space.gap_count[static_cast<size_t>(g)])
      pts.pop_back();
    while (static_cast<int>(pts.size()) < space.gap_count[static_cast<size_t>(g)]) {
      double lo = p.zeta_at(g - 1), hi = p.zeta_at(g);
      double best_lo = lo, best_hi = pts.empty() ? hi : pts.front();
      for (size_t i = 0; i + 1 < pts.size(); ++i)
        if (pts[i + 1] - pts[i] > best_hi - best_lo) {
          best_lo = pts[i];
          best_hi = pts[i + 1];
        }
      if (!pts.empty() && hi - pts.back() > best_hi - best_lo) {
        best_lo = pts.back();
        best_hi = hi;
      }
      pts.insert(std::lower_bound(pts.begin(), pts.end(),
                                  0.5 * (best_lo + best_hi)),
                 0.5 * (best_lo + best_hi));
    }
  }
  std::vector<double> xi_free;
  for (int g = 1; g <= p.r; ++g)
    xi_free.insert(xi_free.end(), per_gap[static_cast<size_t>(g)].begin(),
                   per_gap[static_cast<size_t>(g)].end());

  std::vector<double> q = prev.q;
  while (static_cast<int>(q.size()) < space.k + 1) {
    size_t widest = 1;
    for (size_t i = 2; i < q.size(); ++i)
      if (q[i] - q[i - 1] > q[widest] - q[widest - 1]) widest = i;
    q.insert(q.begin() + static_cast<ptrdiff_t>(widest),
             0.5 * (q[widest - 1] + q[widest]));
  }
  return parisi::build_trial(p, xi_free, q);
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline OptimizationResult minimize_parisi(const model::ModelParams& p,
                                          const OptimizationConfig& cfg_in) {
  model::require_valid(p);
  OptimizationConfig cfg = cfg_in;
  if (cfg.k_schedule.empty())
    cfg.k_schedule = {p.r, p.r + 1, p.r + 2, p.r + 4};
  for (int k : cfg.k_schedule)
    if (k < p.r) throw infeasible_start("k_schedule entry below r");
  if (!(cfg.tolerance > 0.0))
    throw std::invalid_argument("minimize_parisi: tolerance must be positive");
  if (cfg.restarts < 1)
    throw std::invalid_argument("minimize_parisi: need at least one restart");

  const parisi::ParisiOptions fast = parisi::ParisiOptions::fast();
  const parisi::ParisiOptions accurate{};
  rng::Key base = rng::Key(cfg.seed).child("minimize-parisi");

  OptimizationResult out;
  parisi::TrialPoint prev_best;
  bool have_prev = false;
  double global_best = std::numeric_limits<double>::infinity();

  for (int k : cfg.k_schedule) {
    detail::SearchSpace space(p, k);
    const int d = space.dim();

    std::vector<std::vector<double>> starts;
    starts.emplace_back(static_cast<size_t>(d), 0.0);
    if (have_prev && prev_best.k <= k)
      starts.push_back(space.encode(detail::refine_trial(p, prev_best, space)));
    rng::Stream st = base.child("starts").child(static_cast<uint64_t>(k)).stream();
    while (static_cast<int>(starts.size()) < cfg.restarts) {
      std::vector<double> x(static_cast<size_t>(d));
      for (auto& v : x) v = 4.0 * st.u01() - 2.0;
      starts.push_back(std::move(x));
    }

    std::vector<NelderMeadResult> res(starts.size());
    par::for_each_replica(static_cast<int64_t>(starts.size()), cfg.threads,
                          [&](int64_t i) {
                            NelderMeadOptions nm;
                            nm.max_evals = cfg.max_evals;
                            nm.tolerance = cfg.tolerance;
                            auto objective = [&](const std::vector<double>& x) {
                              return parisi::parisi_recursion(space.decode(x), fast)
                                  .value;
                            };
                            res[static_cast<size_t>(i)] = nelder_mead(
                                objective, starts[static_cast<size_t>(i)], nm);
                          });

    size_t winner = 0;
    for (size_t i = 0; i < res.size(); ++i) {
      out.eval_count += res[i].evals;
      out.budget_exhausted = out.budget_exhausted || !res[i].converged;
      out.trace.push_back({k, static_cast<int>(i), res[i].evals, res[i].value});
      if (res[i].value < res[winner].value) winner = i;
    }
    parisi::TrialPoint trial = space.decode(res[winner].x);
    double acc_value = parisi::parisi_recursion(trial, accurate).value;
    out.eval_count += 1;
    out.per_k.push_back({k, res[winner].value, acc_value});
    prev_best = trial;
    have_prev = true;
    if (acc_value < global_best) {
      global_best = acc_value;
      out.best_trial = std::move(trial);
      out.best_value = acc_value;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// finite-N bound table: p_N <= inf P must hold for every N

struct GapRow {
  int n = 0;
  double pressure = 0.0;
  double pressure_stderr = 0.0;
  double bound = 0.0;
  double gap = 0.0;  // bound - pressure
  bool holds = false;
};

struct BoundReport {
  std::vector<GapRow> rows;
  bool all_hold = true;
  bool gap_shrinks = false;  // trend only, two-sided slack
};

inline BoundReport bound_report(const model::ModelParams& p,
                                std::span<const int> n_list,
                                const OptimizationResult& opt,
                                std::span<const model::PressureEstimate> est) {
  model::require_valid(p);
  if (n_list.size() != est.size())
    throw mismatched_params("N list and estimate list differ in length");
  for (double z : p.zeta)
    if (std::find(opt.best_trial.xi.begin(), opt.best_trial.xi.end(), z) ==
        opt.best_trial.xi.end())
      throw mismatched_params("best trial was built for different zeta");

  BoundReport rep;
  for (size_t i = 0; i < n_list.size(); ++i) {
    GapRow row;
    row.n = n_list[i];
    row.pressure = est[i].mean;
    row.pressure_stderr = est[i].stderr_mean;
    row.bound = opt.best_value;
    row.gap = row.bound - row.pressure;
    row.holds = row.gap >= -3.0 * est[i].stderr_mean;
    rep.all_hold = rep.all_hold && row.holds;
    rep.rows.push_back(row);
  }
  if (rep.rows.size() >= 2) {
    const auto& a = rep.rows.front();
    const auto& b = rep.rows.back();
    rep.gap_shrinks =
        b.gap <= a.gap + 3.0 * (a.pressure_stderr + b.pressure_stderr);
  }
  return rep;
}

}  // namespace mssk::opt
