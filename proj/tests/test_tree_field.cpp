#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "mssk/stats.hpp"
#include "mssk/tree_field.hpp"

using namespace mssk;

TEST_CASE("profile validation rejects malformed covariance sequences") {
  rpc::CovarianceProfile empty{{}};
  CHECK_THROWS_AS(empty.validate(), rpc::non_monotone_profile);
  rpc::CovarianceProfile single{{1.0}};
  CHECK_THROWS_AS(single.validate(), rpc::non_monotone_profile);
  rpc::CovarianceProfile negative{{-0.1, 0.5}};
  CHECK_THROWS_AS(negative.validate(), rpc::non_monotone_profile);
  rpc::CovarianceProfile decreasing{{0.0, 0.8, 0.5}};
  CHECK_THROWS_AS(decreasing.validate(), rpc::non_monotone_profile);

  rpc::CovarianceProfile ok{{0.0, 0.5, 0.5, 1.2}};
  REQUIRE_NOTHROW(ok.validate());
  CHECK(ok.depth() == 3);
  CHECK(ok.increment_sd(0) == 0.0);
  CHECK(ok.increment_sd(1) == Approx(std::sqrt(0.5)));
  CHECK(ok.increment_sd(2) == 0.0);
  CHECK(ok.increment_sd(3) == Approx(std::sqrt(0.7)));
}

TEST_CASE("field with a flat zero profile vanishes identically") {
  rpc::CovarianceProfile flat{{0.0, 0.0, 0.0}};
  rpc::TreeGaussianField f(flat, 2, 3, rng::Key(7));
  for (int64_t leaf = 0; leaf < 9; ++leaf) CHECK(f.leaf_value(leaf) == 0.0);
}

TEST_CASE("field construction validates depth agreement") {
  rpc::CovarianceProfile p{{0.0, 1.0}};
  CHECK_THROWS_AS(rpc::TreeGaussianField(p, 2, 3, rng::Key(1)),
                  rpc::non_monotone_profile);
}

TEST_CASE("field is deterministic in the key") {
  rpc::CovarianceProfile p{{0.1, 0.6, 1.0}};
  rpc::TreeGaussianField a(p, 2, 4, rng::Key(3));
  rpc::TreeGaussianField b(p, 2, 4, rng::Key(3));
  rpc::TreeGaussianField c(p, 2, 4, rng::Key(4));
  bool all_equal = true, any_diff = false;
  for (int64_t leaf = 0; leaf < 16; ++leaf) {
    all_equal = all_equal && a.leaf_value(leaf) == b.leaf_value(leaf);
    any_diff = any_diff || a.leaf_value(leaf) != c.leaf_value(leaf);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("path increments decompose the leaf value") {
  rpc::CovarianceProfile p{{0.2, 0.7, 1.5}};
  rpc::TreeGaussianField f(p, 2, 3, rng::Key(9));
  std::vector<double> buf(3);
  for (int64_t leaf = 0; leaf < 9; ++leaf) {
    f.path_increments(leaf, buf);
    CHECK(buf[0] + buf[1] + buf[2] == Approx(f.leaf_value(leaf)).epsilon(1e-14));
  }
  // leaves in the same subtree share all increments above the split
  std::vector<double> b0(3), b1(3), b2(3);
  f.path_increments(0, b0);
  f.path_increments(1, b1);  // siblings: same level-1 node
  f.path_increments(3, b2);  // cousin: shares only the root
  CHECK(b0[0] == b1[0]);
  CHECK(b0[1] == b1[1]);
  CHECK(b0[2] != b1[2]);
  CHECK(b0[0] == b2[0]);
  CHECK(b0[1] != b2[1]);
}

TEST_CASE("depth-one unit profile gives a standard gaussian per leaf") {
  rpc::CovarianceProfile p{{0.0, 1.0}};
  stats::Running mean, var;
  for (int rep = 0; rep < 600; ++rep) {
    rpc::TreeGaussianField f(p, 1, 4, rng::Key(17).child(static_cast<uint64_t>(rep)));
    for (int64_t leaf = 0; leaf < 4; ++leaf) {
      double x = f.leaf_value(leaf);
      mean.add(x);
      var.add(x * x);
    }
  }
  CHECK(std::fabs(mean.mean()) < 3.0 * mean.stderr_mean());
  CHECK(std::fabs(var.mean() - 1.0) < 3.0 * var.stderr_mean());
}

TEST_CASE("leaf covariance equals the profile at the ancestor level") {
  // depth 2, child_count 2: leaves (0,1) meet at level 1, (0,2) at level 0,
  // (0,0) at level 2
  rpc::CovarianceProfile p{{0.3, 0.8, 1.7}};
  stats::Running c_self, c_sib, c_cousin;
  for (int rep = 0; rep < 4000; ++rep) {
    rpc::TreeGaussianField f(p, 2, 2, rng::Key(23).child(static_cast<uint64_t>(rep)));
    double x0 = f.leaf_value(0);
    c_self.add(x0 * x0);
    c_sib.add(x0 * f.leaf_value(1));
    c_cousin.add(x0 * f.leaf_value(2));
  }
  CHECK(std::fabs(c_self.mean() - 1.7) < 3.0 * c_self.stderr_mean());
  CHECK(std::fabs(c_sib.mean() - 0.8) < 3.0 * c_sib.stderr_mean());
  CHECK(std::fabs(c_cousin.mean() - 0.3) < 3.0 * c_cousin.stderr_mean());
}
