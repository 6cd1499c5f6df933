#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "gswm/frequency.hpp"
#include "helpers.hpp"

namespace gswm {
namespace {

// Smallest value whose at-or-below count reaches rank ceil(p/100 * n), found
// by scanning every candidate.
double brute_nearest_rank(const std::vector<double>& values, double p) {
  const auto n = static_cast<double>(values.size());
  const long rank = std::max(1L, static_cast<long>(std::ceil(p / 100.0 * n - 1e-12)));
  double best = std::numeric_limits<double>::infinity();
  for (double v : values) {
    const long at_or_below = std::count_if(values.begin(), values.end(), [&](double x) { return x <= v; });
    if (at_or_below >= rank) best = std::min(best, v);
  }
  return best;
}

TEST(SamplingFrequency, SingleAndMultiView) {
  GaussianScene s;
  s.primitives.resize(1);
  const Camera a = look_at(Vec3(0, -4, 0), Vec3::Zero(), Vec3(0, 0, 1), 100, 64, 64);
  auto r = compute_sampling_frequencies(s, {a});
  ASSERT_TRUE(r.entries[0].nu_hat.has_value());
  EXPECT_NEAR(*r.entries[0].nu_hat, 25.0, 1e-12);
  EXPECT_EQ(r.entries[0].visible_count, 1);

  const Camera b = look_at(Vec3(1, 0, 0), Vec3::Zero(), Vec3(0, 0, 1), 50, 64, 64);
  r = compute_sampling_frequencies(s, {a, b});
  EXPECT_NEAR(*r.entries[0].nu_hat, 50.0, 1e-12);
  EXPECT_EQ(r.entries[0].visible_count, 2);

  s.primitives[0].center = Vec3(0, -10, 0);
  r = compute_sampling_frequencies(s, {a});
  EXPECT_FALSE(r.entries[0].nu_hat.has_value());
  EXPECT_EQ(r.entries[0].visible_count, 0);
}

TEST(NearestRank, MatchesBruteForce) {
  CounterRng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v(1 + rng.below(40));
    for (double& x : v) x = std::round(rng.uniform(0, 20));  // ties on purpose
    const double p = trial % 7 == 0 ? 100.0 : rng.uniform(0.5, 99.5);
    EXPECT_EQ(nearest_rank_percentile(v, p), brute_nearest_rank(v, p));
  }
  EXPECT_EQ(nearest_rank_percentile({1, 2, 3, 4, 5, 6, 7, 8}, 25), 2.0);
}

TEST(SelectCarriers, SpecExamples) {
  FrequencyReport r;
  for (int i = 1; i <= 8; ++i) r.entries.push_back({static_cast<double>(i), 3, false});
  RegularizeConfig cfg;
  EXPECT_EQ(select_carriers(r, 3, cfg), (std::vector<int>{0, 1}));
  EXPECT_TRUE(r.entries[0].selected && r.entries[1].selected && !r.entries[2].selected);

  FrequencyReport sparse;
  for (int i = 1; i <= 8; ++i) sparse.entries.push_back({static_cast<double>(i), 1, false});
  EXPECT_TRUE(select_carriers(sparse, 9, cfg).empty());

  FrequencyReport single;
  single.entries.push_back({4.0, 5, false});
  EXPECT_EQ(select_carriers(single, 5, cfg), std::vector<int>{0});
}

TEST(SelectCarriers, MatchesExhaustiveOracle) {
  CounterRng rng(4242);
  RegularizeConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    const int n_views = 1 + static_cast<int>(rng.below(12));
    FrequencyReport r;
    const int n = 1 + static_cast<int>(rng.below(60));
    for (int i = 0; i < n; ++i) {
      FrequencyEntry e;
      e.visible_count = static_cast<int>(rng.below(n_views + 1));
      if (e.visible_count > 0) e.nu_hat = std::round(rng.uniform(1, 30) * 4) / 4;
      r.entries.push_back(e);
    }
    std::vector<double> defined;
    for (const auto& e : r.entries) {
      if (e.nu_hat) defined.push_back(*e.nu_hat);
    }
    std::vector<int> expected;
    if (!defined.empty()) {
      const double threshold = brute_nearest_rank(defined, cfg.percentile);
      const int min_views = static_cast<int>(std::ceil(n_views * cfg.min_view_fraction - 1e-12));
      for (int i = 0; i < n; ++i) {
        const auto& e = r.entries[i];
        if (e.nu_hat && *e.nu_hat <= threshold && e.visible_count >= min_views) expected.push_back(i);
      }
    }
    EXPECT_EQ(select_carriers(r, n_views, cfg), expected) << "trial " << trial;
  }
}

TEST(SelectCarriers, InvariantToReordering) {
  FrequencyReport a;
  for (double v : {5.0, 1.0, 7.0, 2.0, 9.0, 3.0, 3.0, 8.0}) a.entries.push_back({v, 4, false});
  FrequencyReport b;
  b.entries.assign(a.entries.rbegin(), a.entries.rend());
  const auto sa = select_carriers(a, 4, RegularizeConfig{});
  const auto sb = select_carriers(b, 4, RegularizeConfig{});
  std::vector<double> va, vb;
  for (int i : sa) va.push_back(*a.entries[i].nu_hat);
  for (int i : sb) vb.push_back(*b.entries[i].nu_hat);
  std::sort(va.begin(), va.end());
  std::sort(vb.begin(), vb.end());
  EXPECT_EQ(va, vb);
}

TEST(Regularize, UnitCovarianceExample) {
  GaussianPrimitive g;
  g.opacity_logit = logit(0.5);
  const auto r = regularize_covariance(g, 1.0, 0.2);
  EXPECT_TRUE(covariance_of(r.primitive).isApprox(1.2 * Mat3::Identity(), 1e-12));
  EXPECT_NEAR(r.kappa, std::pow(1.0 / 1.2, 1.5), 1e-12);
  EXPECT_NEAR(r.primitive.opacity(), 0.5 * r.kappa, 1e-12);

  const auto same = regularize_covariance(g, 3.0, 0.0);
  EXPECT_DOUBLE_EQ(same.kappa, 1.0);
  EXPECT_TRUE(covariance_of(same.primitive).isApprox(covariance_of(g), 1e-12));
}

TEST(Regularize, EveryEigenvalueStrictlyIncreases) {
  const auto scene = testing::random_scene(31, 50);
  CounterRng rng(31);
  for (const auto& g : scene.primitives) {
    const double nu = rng.uniform(2, 40);
    const double lambda = rng.uniform(1e-3, 0.5);
    const auto r = regularize_covariance(g, nu, lambda);
    Eigen::SelfAdjointEigenSolver<Mat3> before(covariance_of(g));
    Eigen::SelfAdjointEigenSolver<Mat3> after(covariance_of(r.primitive));
    for (int i = 0; i < 3; ++i) {
      EXPECT_GT(after.eigenvalues()[i], before.eigenvalues()[i]);
      EXPECT_NEAR(after.eigenvalues()[i], before.eigenvalues()[i] + lambda / (nu * nu),
                  1e-9 + 1e-9 * after.eigenvalues()[i]);
    }
    EXPECT_GT(r.kappa, 0.0);
    EXPECT_LT(r.kappa, 1.0);
  }
}

TEST(Densify, FreezesParentsAndAppendsChildren) {
  const auto scene = testing::random_scene(5, 30);
  std::vector<int> carriers{0, 2, 4, 6, 8, 10, 12, 14, 16, 18};
  const auto d = densify(scene, carriers, RegularizeConfig{}, 9);
  ASSERT_EQ(d.scene.size(), 40u);
  ASSERT_EQ(d.spawned.size(), 10u);
  for (int i = 0; i < 30; ++i) {
    EXPECT_TRUE(d.scene.primitives[i].frozen);
    GaussianPrimitive parent = d.scene.primitives[i];
    parent.frozen = false;
    EXPECT_EQ(parent, scene.primitives[i]);
  }
  for (int i : d.spawned) {
    EXPECT_GE(i, 30);
    EXPECT_FALSE(d.scene.primitives[i].frozen);
  }
  EXPECT_EQ(densify(scene, carriers, RegularizeConfig{}, 9).scene, d.scene);
  EXPECT_NE(densify(scene, carriers, RegularizeConfig{}, 10).scene, d.scene);

  const auto empty = densify(scene, {}, RegularizeConfig{}, 9);
  EXPECT_TRUE(empty.empty_selection);
  EXPECT_TRUE(empty.spawned.empty());
  for (const auto& g : empty.scene.primitives) EXPECT_TRUE(g.frozen);
}

TEST(Densify, ChildCovarianceMatchesRegularizedParent) {
  GaussianPrimitive g;
  g.center = Vec3(0.3, -0.2, 0.1);
  g.log_scale = Vec3(std::log(0.3), std::log(0.1), std::log(0.05));
  g.rotation = normalized_quaternion(Vec4(0.9, 0.2, -0.3, 0.25));
  const auto reg = regularize_covariance(g, 8.0, 0.04).primitive;
  GaussianScene s;
  s.primitives = {reg};
  RegularizeConfig cfg;
  cfg.spawn_count = 100000;
  const auto d = densify(s, {0}, cfg, 123);
  ASSERT_EQ(d.spawned.size(), 100000u);
  Vec3 mean = Vec3::Zero();
  for (int i : d.spawned) mean += d.scene.primitives[i].center;
  mean /= static_cast<double>(d.spawned.size());
  Mat3 cov = Mat3::Zero();
  for (int i : d.spawned) {
    const Vec3 x = d.scene.primitives[i].center - mean;
    cov += x * x.transpose();
  }
  cov /= static_cast<double>(d.spawned.size() - 1);
  const Mat3 want = covariance_of(reg);
  EXPECT_LT((cov - want).norm() / want.norm(), 0.05);
}

}  // namespace
}  // namespace gswm
