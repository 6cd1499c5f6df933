#include <gtest/gtest.h>

#include <cmath>

#include "gswm/losses.hpp"
#include "helpers.hpp"

namespace gswm {
namespace {

using testing::random_image;

TEST(Reconstruction, IdenticalImages) {
  const auto a = random_image(1, 32, 32);
  const auto r = reconstruction_loss(a, a, 0.2);
  EXPECT_EQ(r.total, 0.0);
  for (double v : r.gradient.values()) EXPECT_EQ(v, 0.0);
}

TEST(Reconstruction, ConstantOffsetClosedForm) {
  const auto a = random_image(2, 32, 32, 0.2, 0.7);
  ImageBuffer b = a;
  const double delta = 0.05;
  for (double& v : b.values()) v += delta;
  const auto r = reconstruction_loss(b, a, 0.2);
  EXPECT_NEAR(r.mse, delta * delta, 1e-15);
  for (double p : r.pyramid) EXPECT_NEAR(p, delta * delta, 1e-15);
  EXPECT_NEAR(r.gradient_term, 0.0, 1e-15);
  EXPECT_NEAR(r.total, delta * delta + 0.2 * delta * delta, 1e-14);
}

TEST(Reconstruction, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto x = random_image(seed, 16, 16);
    const auto ref = random_image(seed + 20, 16, 16);
    const auto r = reconstruction_loss(x, ref, 0.2);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double num = testing::central_difference(x.values()[i], 1e-6,
                                                     [&] { return reconstruction_loss(x, ref, 0.2).total; });
      ASSERT_TRUE(testing::grad_close(r.gradient.values()[i], num, 1e-4, 1e-9))
          << "seed " << seed << " pixel " << i << ": " << r.gradient.values()[i] << " vs " << num;
    }
  }
}

TEST(Softplus, Stable) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
  EXPECT_NEAR(softplus(-800.0), 0.0, 1e-300);
}

std::vector<double> disc_params(std::uint64_t seed) {
  const auto m = DiscriminatorModel::initialized(seed);
  std::vector<double> p(m.params.begin(), m.params.end());
  // Non-zero biases exercise every term.
  CounterRng rng(seed);
  for (double& v : p) v += 0.05 * rng.uniform(-1, 1);
  return p;
}

TEST(Adversarial, EqualScoresGiveLn2) {
  const auto arch = discriminator_architecture();
  const auto p = disc_params(1);
  const auto img = random_image(3, 8, 8);
  const auto r = adversarial_losses(arch, p, img, img, false);
  EXPECT_NEAR(r.gen_loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(r.disc_loss - r.penalty_real - r.penalty_fake, std::log(2.0), 1e-15);
}

TEST(Adversarial, ConstantDiscriminatorHasNoPenalty) {
  const auto arch = discriminator_architecture();
  std::vector<double> p(arch.param_count(), 0.0);
  p.back() = 0.7;  // output bias only
  const auto r = adversarial_losses(arch, p, random_image(1, 8, 8), random_image(2, 8, 8), true);
  EXPECT_EQ(r.penalty_real, 0.0);
  EXPECT_EQ(r.penalty_fake, 0.0);
  EXPECT_NEAR(r.score_real, 0.7, 1e-15);
}

class AdversarialGradient : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(AdversarialGradient, MatchesCentralDifferences) {
  const std::uint64_t seed = GetParam();
  const auto arch = discriminator_architecture();
  auto p = disc_params(seed);
  const auto real = random_image(seed + 1, 8, 8);
  auto fake = random_image(seed + 2, 8, 8);
  const auto r = adversarial_losses(arch, p, real, fake, true);

  for (std::size_t i = 0; i < fake.size(); ++i) {
    const double num = testing::central_difference(fake.values()[i], 1e-6,
                                                   [&] { return adversarial_losses(arch, p, real, fake, false).gen_loss; });
    EXPECT_TRUE(testing::grad_close(r.d_fake.values()[i], num, 1e-3, 1e-7)) << "pixel " << i;
  }
  int checked = 0;
  for (std::size_t i = 0; i < p.size(); i += 3) {
    const double num = testing::central_difference(p[i], 1e-6,
                                                   [&] { return adversarial_losses(arch, p, real, fake, false).disc_loss; });
    if (std::abs(num) > 1e-6) ++checked;
    EXPECT_TRUE(testing::grad_close(r.d_params[i], num, 1e-3, 1e-7))
        << "param " << i << ": " << r.d_params[i] << " vs " << num;
  }
  EXPECT_GT(checked, 100);
}

INSTANTIATE_TEST_SUITE_P(Seeds, AdversarialGradient, ::testing::Values(1, 2, 3, 4, 5));

}  // namespace
}  // namespace gswm
