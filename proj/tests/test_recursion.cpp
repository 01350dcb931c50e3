#include <catch2/catch.hpp>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "mssk/recursion.hpp"

using namespace mssk;

namespace {

double sum_of(std::span<const double> incr) {
  double s = 0.0;
  for (double x : incr) s += x;
  return s;
}

double log2cosh_sum(std::span<const double> incr) {
  double s = sum_of(incr);
  double a = std::fabs(s);
  return a + std::log1p(std::exp(-2.0 * a));
}

// trapezoid rule on a gaussian-decay integrand; spectrally accurate, shares
// nothing with the library quadrature
double fractional_moment_1d(double zeta, double var) {
  double sd = std::sqrt(var);
  double h = 0.005, lim = 12.0;
  double acc = 0.0;
  for (double x = -lim; x <= lim; x += h) {
    double g = x * sd;
    double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0));
    double a = std::fabs(g);
    double l2c = a + std::log1p(std::exp(-2.0 * a));
    acc += h * phi * std::exp(zeta * l2c);
  }
  return std::log(acc) / zeta;
}

}  // namespace

TEST_CASE("constant terminal passes through the recursion unchanged") {
  std::vector<double> zeta{0.3, 0.7};
  rpc::CovarianceProfile p{{0.1, 0.5, 1.0}};
  auto terminal = [](std::span<const double>) { return 1.7; };
  auto v = rpc::recursion_value(zeta, terminal, p);
  CHECK(v.used_quadrature);
  CHECK(v.value == Approx(1.7).epsilon(1e-13));
  CHECK(v.stderr_mean == 0.0);

  // the cascade average of a constant is the constant, for every realization
  rpc::RepresentationOptions ropt;
  ropt.replicas = 3;
  ropt.cascade = {8, 2};
  auto est = rpc::rpc_representation_estimate(zeta, terminal, p, ropt);
  CHECK(est.mean == Approx(1.7).epsilon(1e-12));
}

TEST_CASE("linear terminal has the closed-form value") {
  // X_{l-1} = X_l smoothed: E exp(z(a+G)) = exp(za + z^2 dv/2), so each level
  // contributes zeta_{l-1} (v_l - v_{l-1}) / 2 and the root average drops out
  std::vector<double> zeta{0.3, 0.7};
  rpc::CovarianceProfile p{{0.2, 0.5, 1.3}};
  auto v = rpc::recursion_value(zeta, sum_of, p);
  double expect = 0.3 * (0.5 - 0.2) / 2.0 + 0.7 * (1.3 - 0.5) / 2.0;
  CHECK(v.value == Approx(expect).epsilon(1e-12));

  rpc::RecursionOptions mc;
  mc.method = rpc::RecursionMethod::montecarlo;
  mc.mc_replicas = 300;
  mc.mc_samples_per_level = 48;
  mc.seed = 3;
  auto vm = rpc::recursion_value(zeta, sum_of, p, mc);
  CHECK_FALSE(vm.used_quadrature);
  CHECK(vm.replicas == 300);
  CHECK(std::fabs(vm.value - expect) < 3.0 * vm.stderr_mean + 2e-3);
}

TEST_CASE("depth-one fractional moment matches an independent integral") {
  std::vector<double> zeta{0.45};
  rpc::CovarianceProfile p{{0.0, 1.44}};
  rpc::RecursionOptions opt;
  opt.quad_nodes = 64;
  auto v = rpc::recursion_value(zeta, log2cosh_sum, p, opt);
  double oracle = fractional_moment_1d(0.45, 1.44);
  CHECK(v.value == Approx(oracle).epsilon(1e-9));
}

TEST_CASE("quadrature and monte carlo agree on a smooth terminal") {
  std::vector<double> zeta{0.3, 0.7};
  rpc::CovarianceProfile p{{0.0, 0.6, 1.2}};
  auto vq = rpc::recursion_value(zeta, log2cosh_sum, p);

  rpc::RecursionOptions mc;
  mc.method = rpc::RecursionMethod::montecarlo;
  mc.mc_replicas = 400;
  mc.mc_samples_per_level = 64;
  mc.seed = 11;
  auto vm = rpc::recursion_value(zeta, log2cosh_sum, p, mc);
  // plug-in fractional moments carry an O(1/m) bias on top of the noise
  CHECK(std::fabs(vm.value - vq.value) < 3.0 * vm.stderr_mean + 5e-3);
}

TEST_CASE("cascade representation reproduces the recursion value") {
  std::vector<double> zeta{0.3, 0.7};
  rpc::CovarianceProfile p{{0.0, 0.6, 1.2}};
  auto vq = rpc::recursion_value(zeta, log2cosh_sum, p);

  rpc::RepresentationOptions ropt;
  ropt.cascade = {48, 8};
  ropt.replicas = 600;
  ropt.seed = 5;
  auto est = rpc::rpc_representation_estimate(zeta, log2cosh_sum, p, ropt);
  CHECK(std::fabs(est.mean - vq.value) < 3.0 * est.stderr_mean + 5e-3);
}

TEST_CASE("degenerate levels collapse without changing the value") {
  std::vector<double> zeta{0.2, 0.5, 0.8};
  rpc::CovarianceProfile p{{0.0, 0.6, 0.6, 1.2}};
  auto [cp, cz] = rpc::collapse_degenerate_levels(p, zeta);
  CHECK(cp.v == std::vector<double>{0.0, 0.6, 1.2});
  CHECK(cz == std::vector<double>{0.2, 0.8});

  auto v_full = rpc::recursion_value(zeta, log2cosh_sum, p);
  auto v_collapsed = rpc::recursion_value(cz, log2cosh_sum, cp);
  CHECK(v_full.value == Approx(v_collapsed.value).margin(1e-12));

  // fully flat profile keeps one placeholder level
  rpc::CovarianceProfile flat{{0.3, 0.3, 0.3}};
  auto [fp, fz] = rpc::collapse_degenerate_levels(flat, std::vector<double>{0.2, 0.5});
  CHECK(fp.v == std::vector<double>{0.3, 0.3});
  CHECK(fz == std::vector<double>{0.2});
}

TEST_CASE("recursion validates inputs and surfaces failure modes") {
  rpc::CovarianceProfile p{{0.0, 1.0}};
  std::vector<double> bad_len{0.3, 0.7};
  CHECK_THROWS_AS(rpc::recursion_value(bad_len, sum_of, p), rpc::invalid_zeta);
  std::vector<double> bad_range{1.5};
  CHECK_THROWS_AS(rpc::recursion_value(bad_range, sum_of, p), rpc::invalid_zeta);

  rpc::RecursionOptions rough;
  rough.method = rpc::RecursionMethod::quadrature;
  rough.terminal_smooth = false;
  std::vector<double> zeta{0.5};
  CHECK_THROWS_AS(rpc::recursion_value(zeta, sum_of, p, rough),
                  rpc::unsupported_terminal);

  auto poison = [](std::span<const double>) {
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(rpc::recursion_value(zeta, poison, p),
                  rpc::divergent_terminal);
}

TEST_CASE("automatic method falls back to monte carlo over the budget") {
  std::vector<double> zeta{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  rpc::CovarianceProfile p{{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6}};
  rpc::RecursionOptions opt;
  opt.quad_nodes = 32;
  opt.quad_budget = 1000;  // 32^6 evals would be needed
  opt.mc_replicas = 16;
  opt.mc_samples_per_level = 8;
  auto v = rpc::recursion_value(zeta, sum_of, p, opt);
  CHECK_FALSE(v.used_quadrature);
  CHECK(v.replicas == 16);
}

TEST_CASE("representation concentrates within the depth-one variance bound") {
  std::vector<double> zeta{0.4};
  rpc::CovarianceProfile p{{0.0, 1.0}};
  rpc::RepresentationOptions opt;
  opt.cascade = {24, 4};
  opt.replicas = 400;
  opt.seed = 9;
  std::vector<rpc::TerminalSpec> terminals;
  terminals.push_back({"constant", [](std::span<const double>) { return 0.7; }});
  terminals.push_back({"log2cosh", [](std::span<const double> x) {
                         return log2cosh_sum(x);
                       }});
  auto rep = rpc::concentration_variance(zeta, terminals, p, opt);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.c_hat > 0.0);
  CHECK(rep.rows[0].var == Approx(0.0).margin(1e-20));
  CHECK(rep.rows[0].within_bound);
  CHECK(rep.rows[1].within_bound);
  CHECK(rep.all_within);
}
