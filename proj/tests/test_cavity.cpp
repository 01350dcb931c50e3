#include <catch2/catch.hpp>

#include <cmath>

#include "mssk/cavity.hpp"
#include "mssk/stats.hpp"

using namespace mssk;

namespace {

model::ModelParams one_level(double zeta0 = 0.5, double gamma1 = 1.0) {
  model::ModelParams p;
  p.r = 1;
  p.zeta = {zeta0};
  p.gamma = {gamma1};
  return p;
}

}  // namespace

TEST_CASE("cavity functional collapses to log 2 at vanishing coupling") {
  model::ModelParams p = one_level(0.5, 1e-8);
  sim::SimOptions opt;
  opt.cascade = {12, 4};
  opt.replicas = 30;
  opt.seed = 2;
  auto est = sim::cavity_functional(p, 3, opt);
  CHECK(est.value.mean == Approx(std::log(2.0)).margin(1e-6));
  CHECK(est.cosh_term == Approx(std::log(2.0)).margin(1e-6));
  CHECK(est.exp_term == Approx(0.0).margin(1e-6));
}

TEST_CASE("cavity estimate carries consistent replica extremes and terms") {
  model::ModelParams p = one_level();
  sim::SimOptions opt;
  opt.cascade = {12, 4};
  opt.replicas = 200;
  opt.seed = 11;
  auto est = sim::cavity_functional(p, 4, opt);
  CHECK(est.min_replica <= est.value.mean);
  CHECK(est.value.mean <= est.max_replica);
  CHECK(est.value.mean == Approx(est.cosh_term - est.exp_term).margin(1e-9));
  CHECK(est.value.replicas == 200);
  CHECK(est.value.seed == 11);
  CHECK(est.value.stderr_mean > 0.0);
}

TEST_CASE("cavity estimates are deterministic and thread-invariant") {
  model::ModelParams p = one_level();
  sim::SimOptions opt;
  opt.cascade = {8, 2};
  opt.replicas = 40;
  opt.seed = 5;
  opt.threads = 1;
  auto a = sim::cavity_functional(p, 3, opt);
  opt.threads = 4;
  auto b = sim::cavity_functional(p, 3, opt);
  CHECK(a.value.mean == b.value.mean);
  CHECK(a.value.stderr_mean == b.value.stderr_mean);

  opt.seed = 6;
  auto c = sim::cavity_functional(p, 3, opt);
  CHECK(a.value.mean != c.value.mean);
}

TEST_CASE("cavity guards the enumeration cap") {
  model::ModelParams p = one_level();
  sim::SimOptions opt;
  opt.cascade = {8, 2};
  opt.replicas = 2;
  CHECK_THROWS_AS(sim::cavity_functional(p, 21, opt), model::n_too_large);
  CHECK_THROWS_AS(sim::cavity_defect(p, 21, opt), model::n_too_large);
}

TEST_CASE("cavity partition terms agree with direct enumeration in law") {
  // the replica's log Z_N and log Z_{N+1} use the cavity's own disorder
  // layout; their disorder averages must match the independent direct route
  model::ModelParams p;
  p.r = 2;
  p.zeta = {0.3, 0.7};
  p.gamma = {0.5, 1.0};
  sim::SimOptions opt;
  opt.cascade = {12, 4};
  opt.replicas = 1200;
  opt.seed = 7;

  stats::Running zn, znp1;
  rng::Key base = rng::Key(7).child("law-check");
  for (int64_t rep = 0; rep < opt.replicas; ++rep) {
    auto t = sim::detail::cavity_replica(p, 3, opt.cascade,
                                         base.child(static_cast<uint64_t>(rep)));
    zn.add(t.log_zn / 3.0);
    znp1.add(t.log_znp1 / 4.0);
  }
  auto d3 = sim::pressure_direct(p, 3, opt);
  auto d4 = sim::pressure_direct(p, 4, opt);

  double s3 = std::sqrt(zn.stderr_mean() * zn.stderr_mean() +
                        d3.stderr_mean * d3.stderr_mean);
  double s4 = std::sqrt(znp1.stderr_mean() * znp1.stderr_mean() +
                        d4.stderr_mean * d4.stderr_mean);
  CHECK(std::fabs(zn.mean() - d3.mean) < 3.0 * s3 + 5e-3);
  CHECK(std::fabs(znp1.mean() - d4.mean) < 3.0 * s4 + 5e-3);
}

TEST_CASE("telescoping defect sits inside the 1/N band") {
  model::ModelParams p = one_level();
  sim::SimOptions opt;
  opt.cascade = {16, 4};
  opt.replicas = 4000;
  opt.seed = 13;
  auto cd = sim::cavity_defect(p, 4, opt);
  // constant calibrated on this parameter set: N * defect levels off near
  // -0.2, so 0.35 gives comfortable headroom without masking regressions
  CHECK(std::fabs(cd.defect) < 3.0 * cd.defect_stderr + 0.35 / 4.0);
  CHECK(cd.replicas == 4000);
  CHECK(cd.defect_stderr > 0.0);
  // pairing on one disorder must not inflate the variance of the difference
  CHECK(cd.defect_stderr * cd.defect_stderr <
        cd.a_n_stderr * cd.a_n_stderr +
            cd.increment_stderr * cd.increment_stderr);
}

TEST_CASE("telescoping defect shrinks as N grows") {
  model::ModelParams p = one_level();
  sim::SimOptions opt;
  opt.cascade = {16, 4};
  opt.seed = 17;
  opt.replicas = 8000;
  auto small_n = sim::cavity_defect(p, 2, opt);
  opt.replicas = 3000;
  auto large_n = sim::cavity_defect(p, 8, opt);
  CHECK(std::fabs(large_n.defect) < std::fabs(small_n.defect));
}
