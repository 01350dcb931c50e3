#include <catch2/catch.hpp>

#include <cmath>
#include <span>
#include <vector>

#include "mssk/parisi.hpp"

using namespace mssk;
using parisi::TrialError;

namespace {

model::ModelParams one_level(double zeta0 = 0.5, double gamma1 = 1.0) {
  model::ModelParams p;
  p.r = 1;
  p.zeta = {zeta0};
  p.gamma = {gamma1};
  return p;
}

// (1/zeta) log E (2cosh(sqrt(2) gamma J))^zeta - zeta gamma^2 / 2 by
// trapezoid integration, independent of the library quadrature
double k1_closed_form(double zeta0, double gamma1) {
  double h = 0.004, lim = 12.0;
  double acc = 0.0;
  for (double x = -lim; x <= lim; x += h) {
    double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0));
    double s = std::fabs(std::sqrt(2.0) * gamma1 * x);
    double l2c = s + std::log1p(std::exp(-2.0 * s));
    acc += h * phi * std::exp(zeta0 * l2c);
  }
  return std::log(acc) / zeta0 - zeta0 * gamma1 * gamma1 / 2.0;
}

double sum_of(std::span<const double> incr) {
  double s = 0.0;
  for (double x : incr) s += x;
  return s;
}

}  // namespace

TEST_CASE("build_trial merges zeta into xi and derives gamma_tilde") {
  model::ModelParams p = one_level(0.5, 1.3);
  std::vector<double> xi_free{0.25, 0.75};
  std::vector<double> q{0.0, 0.2, 0.6, 1.0};
  auto t = parisi::build_trial(p, xi_free, q);

  REQUIRE(t.k == 3);
  CHECK(t.xi == std::vector<double>{0.25, 0.5, 0.75});
  CHECK(t.q == q);
  // gt_j = gamma_l on the interval (zeta_{l-1}, zeta_l]
  CHECK(t.gamma_tilde == std::vector<double>{0.0, 0.0, 1.3, 1.3});
  CHECK(t.xi_at(-1) == 0.0);
  CHECK(t.xi_at(3) == 1.0);
  REQUIRE_NOTHROW(parisi::require_trial(t));
}

TEST_CASE("build_trial rejects malformed inputs with typed codes") {
  model::ModelParams p = one_level();
  std::vector<double> q3{0.0, 0.5, 1.0};

  auto code_of = [&](std::span<const double> xi_free, std::span<const double> q) {
    try {
      parisi::build_trial(p, xi_free, q);
      return TrialError::ok;
    } catch (const parisi::invalid_trial& e) {
      return e.code;
    }
  };

  CHECK(code_of(std::vector<double>{1.2}, q3) == TrialError::xi_out_of_range);
  CHECK(code_of(std::vector<double>{0.0}, q3) == TrialError::xi_out_of_range);
  // xi_free colliding with zeta
  CHECK(code_of(std::vector<double>{0.5}, q3) == TrialError::duplicate_xi);
  CHECK(code_of(std::vector<double>{0.3, 0.3}, std::vector<double>{0.0, 0.1, 0.2, 1.0}) ==
        TrialError::duplicate_xi);
  // q problems: wrong size, bad endpoints, decreasing interior
  CHECK(code_of(std::vector<double>{0.7}, std::vector<double>{0.0, 1.0}) ==
        TrialError::non_monotone_q);
  CHECK(code_of(std::vector<double>{0.7}, std::vector<double>{0.1, 0.5, 1.0}) ==
        TrialError::endpoint_violation);
  CHECK(code_of(std::vector<double>{0.7}, std::vector<double>{0.0, 0.5, 0.9}) ==
        TrialError::endpoint_violation);
  CHECK(code_of(std::vector<double>{0.7}, std::vector<double>{0.0, 0.8, 0.3, 1.0}) ==
        TrialError::non_monotone_q);
}

TEST_CASE("covariance profiles expose 2 gt^2 q and (gt q)^2") {
  auto t = parisi::build_trial(one_level(0.5, 2.0), std::vector<double>{0.75},
                               std::vector<double>{0.0, 0.25, 1.0});
  // gt = (0, 2, 2), q = (0, 0.25, 1)
  auto zp = parisi::z_profile(t);
  auto yp = parisi::y_profile(t);
  CHECK(zp.v == std::vector<double>{0.0, 2.0 * 4.0 * 0.25, 8.0});
  CHECK(yp.v == std::vector<double>{0.0, 0.25, 4.0});
  CHECK(parisi::correction_term(t) ==
        Approx(0.5 * (0.5 * 0.25 + 0.75 * (4.0 - 0.25))));
}

TEST_CASE("k=1 value matches the independent closed-form integral") {
  for (auto [z0, g1] : {std::pair{0.5, 1.0}, {0.3, 0.8}, {0.7, 1.5}}) {
    auto t = parisi::build_trial(one_level(z0, g1), {}, std::vector<double>{0.0, 1.0});
    REQUIRE(t.k == 1);
    auto v = parisi::parisi_recursion(t);
    CHECK(v.value == Approx(k1_closed_form(z0, g1)).epsilon(1e-9));
    CHECK(v.value == Approx(v.log_z0 - v.correction).margin(1e-14));
    CHECK(v.stderr_mean == 0.0);
  }
}

TEST_CASE("vanishing coupling collapses the functional to log 2") {
  auto t = parisi::build_trial(one_level(0.5, 1e-9), {}, std::vector<double>{0.0, 1.0});
  auto v = parisi::parisi_recursion(t);
  CHECK(v.value == Approx(std::log(2.0)).margin(1e-12));
}

TEST_CASE("refining with a zero q increment leaves the value unchanged") {
  model::ModelParams p = one_level(0.5, 1.0);
  auto base = parisi::build_trial(p, std::vector<double>{0.75},
                                  std::vector<double>{0.0, 0.4, 1.0});
  auto refined = parisi::build_trial(p, std::vector<double>{0.6, 0.75},
                                     std::vector<double>{0.0, 0.4, 0.4, 1.0});
  CHECK(parisi::correction_term(refined) ==
        Approx(parisi::correction_term(base)).margin(1e-14));
  auto vb = parisi::parisi_recursion(base);
  auto vr = parisi::parisi_recursion(refined);
  CHECK(vr.value == Approx(vb.value).margin(1e-12));
}

TEST_CASE("chebyshev, tensor quadrature, and monte carlo engines agree") {
  auto t = parisi::build_trial(one_level(0.5, 1.0), std::vector<double>{0.7},
                               std::vector<double>{0.0, 0.5, 1.0});

  auto vc = parisi::parisi_recursion(t);

  parisi::ParisiOptions topt;
  topt.method = parisi::ParisiMethod::tensor;
  topt.tensor_nodes = 48;
  auto vt = parisi::parisi_recursion(t, topt);
  CHECK(vt.value == Approx(vc.value).margin(1e-8));

  parisi::ParisiOptions mopt;
  mopt.method = parisi::ParisiMethod::mc;
  mopt.mc_replicas = 400;
  mopt.mc_samples_per_level = 64;
  mopt.seed = 7;
  auto vm = parisi::parisi_recursion(t, mopt);
  CHECK(vm.stderr_mean > 0.0);
  CHECK(std::fabs(vm.value - vc.value) < 3.0 * vm.stderr_mean + 5e-3);
}

TEST_CASE("fast preset stays within its advertised accuracy") {
  auto t = parisi::build_trial(one_level(0.4, 1.2), std::vector<double>{0.6, 0.8},
                               std::vector<double>{0.0, 0.3, 0.7, 1.0});
  auto slow = parisi::parisi_recursion(t);
  auto fast = parisi::parisi_recursion(t, parisi::ParisiOptions::fast());
  CHECK(fast.value == Approx(slow.value).margin(1e-5));
}

TEST_CASE("cascade representation reproduces both parisi terms") {
  auto t = parisi::build_trial(one_level(0.5, 1.0), std::vector<double>{0.7},
                               std::vector<double>{0.0, 0.5, 1.0});
  auto vc = parisi::parisi_recursion(t);

  // the y term alone is a linear-terminal cascade average with profile
  // (gt q)^2, whose recursion value is exactly the correction term
  rpc::RepresentationOptions ropt;
  ropt.cascade = {48, 8};
  ropt.replicas = 600;
  ropt.seed = 13;
  auto y_est = rpc::rpc_representation_estimate(t.xi, sum_of, parisi::y_profile(t), ropt);
  CHECK(std::fabs(y_est.mean - parisi::correction_term(t)) <
        3.0 * y_est.stderr_mean + 5e-3);

  parisi::ParisiRpcOptions popt;
  popt.cascade = {48, 8};
  popt.replicas = 600;
  popt.seed = 13;
  auto vr = parisi::parisi_rpc(t, popt);
  CHECK(vr.stderr_mean > 0.0);
  CHECK(std::fabs(vr.value - vc.value) < 3.0 * vr.stderr_mean + 5e-3);
}

TEST_CASE("require_trial rejects a non-monotone effective overlap") {
  parisi::TrialPoint t;
  t.k = 2;
  t.xi = {0.3, 0.7};
  t.q = {0.0, 0.9, 1.0};
  t.gamma_tilde = {0.0, 2.0, 1.0};  // gt^2 q drops from 3.24 to 1.0
  CHECK_THROWS_AS(parisi::require_trial(t), parisi::invalid_trial);

  parisi::TrialPoint empty;
  CHECK_THROWS_AS(parisi::require_trial(empty), parisi::invalid_trial);
}
