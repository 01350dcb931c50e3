// mssk command-line front end.
//
// usage: mssk SUBCOMMAND [--config PATH] [--seed U64] [--replicas N]
//             [--out DIR] [--threads N]
//
// Subcommands: pressure, parisi-eval, optimize, verify-bound, rpc-sample,
// overlap-dist, cavity, gg-check, selftest. Every run writes CSV/JSON
// artifacts named by the hash of the effective config (file + overrides);
// artifacts are write-once per hash. Exit codes: 0 success, 1 assertion or
// runtime failure, 2 config error.

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <boost/program_options.hpp>

#include "mssk/mssk.hpp"

namespace po = boost::program_options;
using mssk::cfg::Config;

namespace {

struct check_failure : std::runtime_error {
  explicit check_failure(const std::string& what) : std::runtime_error(what) {}
};

std::string fmt(double v) { return mssk::num::format_double(v); }

// ---------------------------------------------------------------------------
// shared config plumbing

mssk::rpc::CascadeConfig cascade_config(const Config& c) {
  mssk::rpc::CascadeConfig cc;
  cc.width = c.get_int("cascade.width", cc.width);
  cc.tail_shares = c.get_int("cascade.tail_shares", cc.tail_shares);
  return cc;
}

int threads_of(const Config& c) { return c.get_int("threads", 0); }
uint64_t seed_of(const Config& c) { return c.get_u64("seed", 1); }

mssk::sim::SimOptions sim_options(const Config& c, int64_t default_replicas) {
  mssk::sim::SimOptions o;
  o.cascade = cascade_config(c);
  o.replicas = c.get_i64("replicas", default_replicas);
  o.seed = seed_of(c);
  o.threads = threads_of(c);
  return o;
}

std::string artifact_path(const std::string& out_dir, const std::string& cmd,
                          const Config& c, const char* ext) {
  return out_dir + "/" + cmd + "-" + c.hash_hex() + ext;
}

void emit(const std::string& path, const std::string& content) {
  mssk::io::write_once(path, content);
  std::cout << "wrote " << path << "\n";
}

mssk::parisi::ParisiOptions parisi_options(const Config& c) {
  mssk::parisi::ParisiOptions o;
  std::string method = c.get_string("parisi.method", "cheb");
  if (method == "cheb") {
    o.method = mssk::parisi::ParisiMethod::cheb;
  } else if (method == "tensor") {
    o.method = mssk::parisi::ParisiMethod::tensor;
  } else if (method == "mc") {
    o.method = mssk::parisi::ParisiMethod::mc;
  } else {
    throw mssk::cfg::config_error("config: parisi.method must be cheb, tensor or mc");
  }
  o.gh_nodes = c.get_int("parisi.gh_nodes", o.gh_nodes);
  o.grid_sigmas = c.get_double("parisi.grid_sigmas", o.grid_sigmas);
  o.points_per_unit = c.get_double("parisi.points_per_unit", o.points_per_unit);
  o.tensor_nodes = c.get_int("parisi.tensor_nodes", o.tensor_nodes);
  o.mc_samples_per_level = c.get_int("parisi.mc_samples_per_level", o.mc_samples_per_level);
  o.mc_replicas = c.get_int("parisi.mc_replicas", o.mc_replicas);
  o.seed = seed_of(c);
  return o;
}

mssk::parisi::TrialPoint trial_from_config(const mssk::model::ModelParams& p,
                                           const Config& c) {
  std::vector<double> xi_free;
  if (c.has("trial.xi_free")) xi_free = c.get_double_list("trial.xi_free");
  std::vector<double> q;
  if (c.has("trial.q")) {
    q = c.get_double_list("trial.q");
  } else {
    size_t k = static_cast<size_t>(p.r) + xi_free.size();
    for (size_t j = 0; j <= k; ++j)
      q.push_back(static_cast<double>(j) / static_cast<double>(k));
  }
  try {
    return mssk::parisi::build_trial(p, xi_free, q);
  } catch (const mssk::parisi::invalid_trial& e) {
    throw mssk::cfg::config_error(std::string("config: invalid trial: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_pressure(const Config& c, const std::string& out_dir) {
  auto p = mssk::cfg::model_params(c);
  std::vector<int> ns = c.has("pressure.n_list")
                            ? c.get_int_list("pressure.n_list")
                            : std::vector<int>{c.get_int("pressure.n", 4)};
  std::string route = c.get_string("pressure.route", "both");
  if (route != "direct" && route != "recursive" && route != "both")
    throw mssk::cfg::config_error("config: pressure.route must be direct, recursive or both");

  std::vector<std::vector<std::string>> rows;
  mssk::io::JsonWriter js;
  js.field("config_hash", c.hash_hex()).field("seed", seed_of(c));
  for (int n : ns) {
    if (route != "recursive") {
      auto est = mssk::sim::pressure_direct(p, n, sim_options(c, 200));
      rows.push_back({c.hash_hex(), std::to_string(n), "direct", fmt(est.mean),
                      fmt(est.stderr_mean), std::to_string(est.replicas),
                      std::to_string(est.seed)});
      js.field("direct_n" + std::to_string(n), est.mean);
      js.field("direct_n" + std::to_string(n) + "_stderr", est.stderr_mean);
    }
    if (route != "direct") {
      mssk::sim::RecursiveOptions ro;
      ro.samples_per_level = c.get_int("pressure.samples_per_level", 64);
      ro.replicas = c.get_i64("replicas", 100);
      ro.seed = seed_of(c);
      ro.threads = threads_of(c);
      auto est = mssk::sim::pressure_recursive(p, n, ro);
      rows.push_back({c.hash_hex(), std::to_string(n), "recursive", fmt(est.mean),
                      fmt(est.stderr_mean), std::to_string(est.replicas),
                      std::to_string(est.seed)});
      js.field("recursive_n" + std::to_string(n), est.mean);
      js.field("recursive_n" + std::to_string(n) + "_stderr", est.stderr_mean);
    }
  }
  emit(artifact_path(out_dir, "pressure", c, ".csv"),
       mssk::io::csv_table({"config_hash", "n", "route", "estimate", "stderr",
                            "replicas", "seed"},
                           rows));
  std::string summary = js.finish();
  emit(artifact_path(out_dir, "pressure", c, ".json"), summary);
  std::cout << summary;
  return 0;
}

int cmd_parisi_eval(const Config& c, const std::string& out_dir) {
  auto p = mssk::cfg::model_params(c);
  auto t = trial_from_config(p, c);
  auto v = mssk::parisi::parisi_recursion(t, parisi_options(c));

  mssk::io::JsonWriter js;
  js.field("config_hash", c.hash_hex())
      .field("k", t.k)
      .field("value", v.value)
      .field("log_z0", v.log_z0)
      .field("correction", v.correction)
      .field("stderr", v.stderr_mean)
      .field("method", c.get_string("parisi.method", "cheb"));
  js.field_array("xi", t.xi).field_array("q", t.q).field_array("gamma_tilde", t.gamma_tilde);
  std::string summary = js.finish();
  emit(artifact_path(out_dir, "parisi-eval", c, ".json"), summary);
  std::cout << summary;
  return 0;
}

mssk::opt::OptimizationConfig optimize_config(const Config& c) {
  mssk::opt::OptimizationConfig oc;
  if (c.has("optimize.k_schedule")) oc.k_schedule = c.get_int_list("optimize.k_schedule");
  oc.restarts = c.get_int("optimize.restarts", oc.restarts);
  oc.max_evals = c.get_i64("optimize.max_evals", oc.max_evals);
  oc.tolerance = c.get_double("optimize.tolerance", oc.tolerance);
  oc.seed = seed_of(c);
  oc.threads = threads_of(c);
  return oc;
}

int cmd_optimize(const Config& c, const std::string& out_dir) {
  auto p = mssk::cfg::model_params(c);
  auto res = mssk::opt::minimize_parisi(p, optimize_config(c));

  std::vector<std::vector<std::string>> rows;
  for (const auto& e : res.trace)
    rows.push_back({std::to_string(e.k), std::to_string(e.restart),
                    std::to_string(e.evals), fmt(e.value)});
  emit(artifact_path(out_dir, "optimize", c, ".csv"),
       mssk::io::csv_table({"k", "restart", "evals", "value"}, rows));

  mssk::io::JsonWriter js;
  js.field("config_hash", c.hash_hex())
      .field("best_value", res.best_value)
      .field("best_k", res.best_trial.k)
      .field("eval_count", res.eval_count)
      .field("budget_exhausted", res.budget_exhausted);
  js.field_array("best_xi", res.best_trial.xi).field_array("best_q", res.best_trial.q);
  std::vector<double> per_k;
  for (const auto& s : res.per_k) per_k.push_back(s.value);
  js.field_array("per_k_value", per_k);
  std::string summary = js.finish();
  emit(artifact_path(out_dir, "optimize", c, ".json"), summary);
  std::cout << summary;
  return 0;
}

int cmd_verify_bound(const Config& c, const std::string& out_dir) {
  auto p = mssk::cfg::model_params(c);
  std::vector<int> ns = c.has("verify.n_list") ? c.get_int_list("verify.n_list")
                                               : std::vector<int>{1, 2, 4, 8};
  auto res = mssk::opt::minimize_parisi(p, optimize_config(c));
  std::vector<mssk::model::PressureEstimate> est;
  for (int n : ns) est.push_back(mssk::sim::pressure_direct(p, n, sim_options(c, 200)));
  auto rep = mssk::opt::bound_report(p, ns, res, est);

  std::vector<std::vector<std::string>> rows;
  for (const auto& row : rep.rows)
    rows.push_back({c.hash_hex(), std::to_string(row.n), fmt(row.pressure),
                    fmt(row.pressure_stderr), fmt(row.bound), fmt(row.gap),
                    row.holds ? "1" : "0"});
  emit(artifact_path(out_dir, "verify-bound", c, ".csv"),
       mssk::io::csv_table(
           {"config_hash", "n", "pressure", "stderr", "bound", "gap", "holds"},
           rows));

  mssk::io::JsonWriter js;
  js.field("config_hash", c.hash_hex())
      .field("bound", res.best_value)
      .field("all_hold", rep.all_hold)
      .field("gap_shrinks", rep.gap_shrinks);
  std::string summary = js.finish();
  emit(artifact_path(out_dir, "verify-bound", c, ".json"), summary);
  std::cout << summary;
  if (!rep.all_hold) {
    std::cerr << "FAIL: finite-size pressure exceeds the variational bound\n";
    return 1;
  }
  return 0;
}

int cmd_rpc_sample(const Config& c, const std::string& out_dir) {
  auto p = mssk::cfg::model_params(c);
  auto cc = cascade_config(c);
  int64_t replicas = c.get_i64("replicas", 400);
  uint64_t seed = seed_of(c);

  mssk::rng::Key base = mssk::rng::Key(seed).child("rpc-sample");
  std::vector<mssk::stats::Running> law(static_cast<size_t>(p.r) + 1);
  mssk::stats::Running leftover;
  for (int64_t rep = 0; rep < replicas; ++rep) {
    auto cas = mssk::rpc::sample_cascade(p.zeta, p.r, cc, base.child(static_cast<uint64_t>(rep)));
    auto lv = mssk::rpc::pair_level_law(cas);
    for (size_t l = 0; l < lv.size(); ++l) law[l].add(lv[l]);
    leftover.add(cas.leftover_mass_bound);
  }

  std::vector<std::vector<std::string>> rows;
  for (size_t l = 0; l < law.size(); ++l) {
    double target = p.zeta_at(static_cast<int>(l)) - p.zeta_at(static_cast<int>(l) - 1);
    rows.push_back({std::to_string(l), fmt(law[l].mean()), fmt(law[l].stderr_mean()),
                    fmt(target)});
  }
  emit(artifact_path(out_dir, "rpc-sample", c, ".csv"),
       mssk::io::csv_table({"level", "pair_mass", "stderr", "target"}, rows));

  mssk::io::JsonWriter js;
  js.field("config_hash", c.hash_hex())
      .field("replicas", replicas)
      .field("seed", seed)
      .field("leaves", static_cast<int64_t>(std::llround(
                           std::pow(cc.width + cc.tail_shares, p.r))))
      .field("mean_leftover_mass_bound", leftover.mean());
  std::string summary = js.finish();
  emit(artifact_path(out_dir, "rpc-sample", c, ".json"), summary);
  std::cout << summary;
  return 0;
}

int cmd_overlap_dist(const Config& c, const std::string& out_dir) {
  auto p = mssk::cfg::model_params(c);
  int n = c.get_int("overlap.n", 8);
  int64_t pairs = c.get_i64("overlap.pairs", 256);
  auto hist = mssk::sim::gibbs_overlap_distribution(p, n, sim_options(c, 200), pairs);

  std::vector<std::vector<std::string>> rows;
  for (size_t l = 0; l < hist.level_freq.size(); ++l) {
    double target = p.zeta_at(static_cast<int>(l)) - p.zeta_at(static_cast<int>(l) - 1);
    rows.push_back({"level", std::to_string(l), fmt(hist.level_freq[l]),
                    fmt(hist.level_freq_stderr[l]), fmt(target)});
  }
  for (size_t b = 0; b < hist.overlap_mass.size(); ++b) {
    double q = (2.0 * static_cast<double>(b) - n) / n;
    rows.push_back({"overlap", fmt(q), fmt(hist.overlap_mass[b]),
                    fmt(hist.overlap_mass_stderr[b]), ""});
  }
  emit(artifact_path(out_dir, "overlap-dist", c, ".csv"),
       mssk::io::csv_table({"kind", "bin", "mass", "stderr", "target"}, rows));

  mssk::io::JsonWriter js;
  js.field("config_hash", c.hash_hex())
      .field("n", n)
      .field("pair_draws", hist.pair_draws)
      .field("replicas", hist.replicas)
      .field("seed", hist.seed);
  std::string summary = js.finish();
  emit(artifact_path(out_dir, "overlap-dist", c, ".json"), summary);
  std::cout << summary;
  return 0;
}

int cmd_cavity(const Config& c, const std::string& out_dir) {
  auto p = mssk::cfg::model_params(c);
  int n = c.get_int("cavity.n", 4);
  bool defect = c.get_int("cavity.defect", 0) != 0;
  auto opt = sim_options(c, 400);

  mssk::io::JsonWriter js;
  js.field("config_hash", c.hash_hex()).field("n", n);
  std::vector<std::vector<std::string>> rows;
  if (defect) {
    auto d = mssk::sim::cavity_defect(p, n, opt);
    js.field("a_n", d.a_n)
        .field("a_n_stderr", d.a_n_stderr)
        .field("increment", d.increment)
        .field("increment_stderr", d.increment_stderr)
        .field("defect", d.defect)
        .field("defect_stderr", d.defect_stderr)
        .field("replicas", d.replicas)
        .field("seed", d.seed);
    rows.push_back({c.hash_hex(), std::to_string(n), "defect", fmt(d.defect),
                    fmt(d.defect_stderr), std::to_string(d.replicas),
                    std::to_string(d.seed)});
  } else {
    auto a = mssk::sim::cavity_functional(p, n, opt);
    js.field("a_n", a.value.mean)
        .field("a_n_stderr", a.value.stderr_mean)
        .field("cosh_term", a.cosh_term)
        .field("exp_term", a.exp_term)
        .field("min_replica", a.min_replica)
        .field("max_replica", a.max_replica)
        .field("replicas", a.value.replicas)
        .field("seed", a.value.seed);
    rows.push_back({c.hash_hex(), std::to_string(n), "a_n", fmt(a.value.mean),
                    fmt(a.value.stderr_mean), std::to_string(a.value.replicas),
                    std::to_string(a.value.seed)});
  }
  emit(artifact_path(out_dir, "cavity", c, ".csv"),
       mssk::io::csv_table(
           {"config_hash", "n", "kind", "estimate", "stderr", "replicas", "seed"},
           rows));
  std::string summary = js.finish();
  emit(artifact_path(out_dir, "cavity", c, ".json"), summary);
  std::cout << summary;
  return 0;
}

int cmd_gg_check(const Config& c, const std::string& out_dir) {
  auto p = mssk::cfg::model_params(c);
  mssk::gg::GgOptions opt;
  opt.cascade = cascade_config(c);
  opt.replicas = c.get_i64("replicas", 200);
  opt.tuples_per_replica = c.get_i64("gg.tuples", 400);
  opt.seed = seed_of(c);
  opt.threads = threads_of(c);

  std::vector<int> ns = c.has("gg.n_list") ? c.get_int_list("gg.n_list")
                                           : std::vector<int>{c.get_int("gg.n", 8)};
  std::string f = c.get_string("gg.f", "q12");
  int tuple_n = c.get_int("gg.tuple_n", 2);
  double w0 = c.get_double("gg.w0", 0.0);
  double w1 = c.get_double("gg.w1", 1.0);
  int power = c.get_int("gg.p", 1);

  std::vector<std::vector<std::string>> rows;
  mssk::io::JsonWriter js;
  js.field("config_hash", c.hash_hex())
      .field("f", f)
      .field("tuple_n", tuple_n)
      .field("w0", w0)
      .field("w1", w1)
      .field("p", power);
  for (int n : ns) {
    auto g = mssk::gg::gg_delta(p, n, f, tuple_n, w0, w1, power, opt);
    rows.push_back({c.hash_hex(), std::to_string(n), f, fmt(g.delta),
                    fmt(g.delta_stderr), std::to_string(g.replicas),
                    std::to_string(g.seed)});
    js.field("delta_n" + std::to_string(n), g.delta);
    js.field("delta_n" + std::to_string(n) + "_stderr", g.delta_stderr);
  }
  emit(artifact_path(out_dir, "gg-check", c, ".csv"),
       mssk::io::csv_table(
           {"config_hash", "n", "f", "delta", "stderr", "replicas", "seed"},
           rows));
  std::string summary = js.finish();
  emit(artifact_path(out_dir, "gg-check", c, ".json"), summary);
  std::cout << summary;
  return 0;
}

// ---------------------------------------------------------------------------
// selftest: the quick closed-form and invariance checks

int cmd_selftest(const Config&, const std::string&) {
  using namespace mssk;
  int failures = 0;
  auto check = [&failures](bool ok, const std::string& name,
                           const std::string& detail = "") {
    if (ok) {
      std::cout << "ok: " << name << "\n";
    } else {
      ++failures;
      std::cout << "FAIL: " << name << (detail.empty() ? "" : ": " + detail)
                << "\n";
    }
  };

  model::ModelParams unit{1, {0.6}, {1.0}};
  model::ModelParams flat{1, {0.6}, {1e-8}};
  model::ModelParams two{2, {0.3, 0.7}, {0.5, 1.0}};

  {
    model::ModelParams bad{2, {0.7, 0.3}, {0.5, 1.0}};
    check(model::validate_params(bad) == model::ParamError::non_monotone_zeta,
          "model params reject non-monotone zeta");
    std::vector<int32_t> a{1, 2, 3}, b{1, 2, 5};
    check(model::ancestor_level(a, b) == 2, "ancestor level of shared prefix");
    check(model::ancestor_level(a, a) == 3, "ancestor level of equal paths");
  }
  {
    double target = std::log(2.0) + 0.6 * 0.5;  // N=1 closed form
    auto est = sim::pressure_direct(unit, 1, {{}, 3000, 11, 0});
    check(std::fabs(est.mean - target) <= 3.0 * est.stderr_mean + 1e-3,
          "pressure_direct N=1 closed form",
          fmt(est.mean) + " vs " + fmt(target));
    sim::RecursiveOptions ro;
    ro.replicas = 300;
    ro.samples_per_level = 64;
    ro.seed = 12;
    auto rec = sim::pressure_recursive(unit, 1, ro);
    check(std::fabs(rec.mean - target) <= 3.0 * rec.stderr_mean + 2e-2,
          "pressure_recursive N=1 closed form",
          fmt(rec.mean) + " vs " + fmt(target));
  }
  {
    auto t = parisi::build_trial(unit, {}, std::vector<double>{0.0, 1.0});
    auto v = parisi::parisi_recursion(t);
    check(std::fabs(v.value - (v.log_z0 - v.correction)) < 1e-12,
          "parisi value equals log_z0 minus correction");
    auto tf = parisi::build_trial(flat, {}, std::vector<double>{0.0, 1.0});
    auto vf = parisi::parisi_recursion(tf);
    check(std::fabs(vf.value - std::log(2.0)) < 1e-6,
          "parisi functional at zero coupling is log 2");
    parisi::ParisiOptions tens;
    tens.method = parisi::ParisiMethod::tensor;
    model::ModelParams g03{1, {0.6}, {0.3}};
    auto t03 = parisi::build_trial(g03, {}, std::vector<double>{0.0, 1.0});
    double a = parisi::parisi_recursion(t03).value;
    double b = parisi::parisi_recursion(t03, tens).value;
    check(std::fabs(a - b) < 1e-6, "parisi cheb agrees with tensor oracle",
          fmt(a) + " vs " + fmt(b));
  }
  {
    rpc::CascadeConfig cc;
    cc.width = 48;
    rng::Key key(7);
    mssk::stats::Running l0, l1, l2;
    for (int rep = 0; rep < 300; ++rep) {
      auto cas = rpc::sample_cascade(two.zeta, two.r, cc, key.child(static_cast<uint64_t>(rep)));
      auto lv = rpc::pair_level_law(cas);
      l0.add(lv[0]);
      l1.add(lv[1]);
      l2.add(lv[2]);
    }
    bool ok = std::fabs(l0.mean() - 0.3) <= 3.0 * l0.stderr_mean() + 5e-3 &&
              std::fabs(l1.mean() - 0.4) <= 3.0 * l1.stderr_mean() + 5e-3 &&
              std::fabs(l2.mean() - 0.3) <= 3.0 * l2.stderr_mean() + 5e-3;
    check(ok, "cascade pair ancestor law matches zeta increments",
          fmt(l0.mean()) + "," + fmt(l1.mean()) + "," + fmt(l2.mean()));
  }
  {
    gg::GgOptions opt;
    opt.cascade.width = 12;
    opt.cascade.tail_shares = 4;
    opt.replicas = 20;
    opt.tuples_per_replica = 50;
    opt.seed = 5;
    auto g = gg::gg_delta(two, 4, "one", 2, 0.5, 0.5, 2, opt);
    check(g.delta < 1e-12, "gg delta vanishes identically for f == 1",
          fmt(g.delta));
  }
  {
    auto a = sim::cavity_functional(flat, 3, {{}, 200, 3, 0});
    check(std::fabs(a.value.mean - std::log(2.0)) <
              3.0 * a.value.stderr_mean + 1e-6,
          "cavity functional at zero coupling is log 2", fmt(a.value.mean));
  }
  {
    model::ModelParams g03{1, {0.6}, {0.3}};
    opt::OptimizationConfig oc;
    oc.k_schedule = {1};
    oc.restarts = 1;
    oc.seed = 3;
    auto res = opt::minimize_parisi(g03, oc);
    auto t = parisi::build_trial(g03, {}, std::vector<double>{0.0, 1.0});
    double oracle = parisi::parisi_recursion(t).value;
    check(std::fabs(res.best_value - oracle) < 1e-9,
          "k=1 minimization hits the closed-form trial value");
  }
  {
    Config c1 = Config::parse("b = 2\na = 1\n");
    Config c2 = Config::parse("a = 1\n# note\nb = 2\n");
    check(c1.hash() == c2.hash() && c1.canonical() == c2.canonical(),
          "config hash is order- and comment-insensitive");
  }

  std::cout << (failures == 0 ? "selftest PASS\n" : "selftest FAIL\n");
  return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------

void usage(std::ostream& os) {
  os << "usage: mssk SUBCOMMAND [options]\n"
        "subcommands:\n"
        "  pressure      finite-N quenched pressure (direct and/or recursive)\n"
        "  parisi-eval   evaluate the Parisi functional at a trial point\n"
        "  optimize      minimize the Parisi functional over trial points\n"
        "  verify-bound  optimize, estimate p_N, and check p_N <= bound\n"
        "  rpc-sample    sample cascades, report ancestor-level law\n"
        "  overlap-dist  quenched (level, overlap) histograms\n"
        "  cavity        cavity functional A_N (cavity.defect=1 for the\n"
        "                telescoping defect)\n"
        "  gg-check      Ghirlanda-Guerra delta diagnostic\n"
        "  selftest      run the built-in closed-form checks\n"
        "options:\n"
        "  --config PATH   key = value config file\n"
        "  --seed U64      override config seed\n"
        "  --replicas N    override config replicas\n"
        "  --out DIR       artifact directory (default: out)\n"
        "  --threads N     worker pool size (default: auto)\n";
}

}  // namespace

int main(int argc, char** argv) {
  std::string command;
  Config config;
  std::string out_dir = "out";
  try {
    po::options_description desc("options");
    desc.add_options()("help,h", "show usage")(
        "config", po::value<std::string>(), "config file")(
        "seed", po::value<std::string>(), "seed override")(
        "replicas", po::value<std::string>(), "replica override")(
        "out", po::value<std::string>(), "output directory")(
        "threads", po::value<std::string>(), "worker pool size")(
        "command", po::value<std::string>(), "subcommand");
    po::positional_options_description pos;
    pos.add("command", 1);
    po::variables_map vm;
    po::store(po::command_line_parser(argc, argv).options(desc).positional(pos).run(),
              vm);
    po::notify(vm);

    if (vm.count("help") || !vm.count("command")) {
      usage(std::cout);
      return vm.count("help") ? 0 : 2;
    }
    command = vm["command"].as<std::string>();
    if (vm.count("config")) config = Config::load(vm["config"].as<std::string>());
    if (vm.count("seed")) config.set("seed", vm["seed"].as<std::string>());
    if (vm.count("replicas"))
      config.set("replicas", vm["replicas"].as<std::string>());
    if (vm.count("threads")) config.set("threads", vm["threads"].as<std::string>());
    if (vm.count("out")) out_dir = vm["out"].as<std::string>();

    if (command == "pressure") return cmd_pressure(config, out_dir);
    if (command == "parisi-eval") return cmd_parisi_eval(config, out_dir);
    if (command == "optimize") return cmd_optimize(config, out_dir);
    if (command == "verify-bound") return cmd_verify_bound(config, out_dir);
    if (command == "rpc-sample") return cmd_rpc_sample(config, out_dir);
    if (command == "overlap-dist") return cmd_overlap_dist(config, out_dir);
    if (command == "cavity") return cmd_cavity(config, out_dir);
    if (command == "gg-check") return cmd_gg_check(config, out_dir);
    if (command == "selftest") return cmd_selftest(config, out_dir);
    std::cerr << "unknown subcommand '" << command << "'\n";
    usage(std::cerr);
    return 2;
  } catch (const mssk::cfg::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const po::error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    usage(std::cerr);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const check_failure& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
