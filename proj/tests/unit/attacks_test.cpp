#include <gtest/gtest.h>

#include <cmath>

#include "gswm/attacks.hpp"
#include "gswm/error.hpp"
#include "helpers.hpp"

namespace gswm {
namespace {

using testing::dot;
using testing::random_image;

AttackSpec spec(AttackKind kind, int level, std::uint64_t seed = 1) { return {kind, level, std::nullopt, seed}; }

TEST(Ladder, Table) {
  EXPECT_EQ(ladder(AttackKind::kBlur, 3), 10);
  EXPECT_EQ(ladder(AttackKind::kBrightness, 3), 1.5);
  EXPECT_EQ(ladder(AttackKind::kJpegProxy, 3), 50);
  EXPECT_EQ(ladder(AttackKind::kContrast, 3), 1.5);
  EXPECT_EQ(ladder(AttackKind::kErasing, 3), 0.125);
  EXPECT_EQ(ladder(AttackKind::kNoise, 3), 0.05);
  EXPECT_EQ(ladder(AttackKind::kResizedCrop, 3), 0.75);
  EXPECT_EQ(ladder(AttackKind::kRotation, 3), 22.5);
  EXPECT_EQ(ladder(AttackKind::kJpegProxy, 1), 90);
  EXPECT_EQ(ladder(AttackKind::kBlur, 1), 2);
  EXPECT_EQ(ladder(AttackKind::kBlur, 5), 18);
  EXPECT_EQ(ladder(AttackKind::kElastic, 5), 10);
  EXPECT_THROW(ladder(AttackKind::kBlur, 0), Error);
  EXPECT_THROW(ladder(AttackKind::kBlur, 6), Error);
}

TEST(Names, RoundTrip) {
  for (AttackKind k : kAllAttacks) EXPECT_EQ(parse_attack_kind(attack_name(k)), k);
  EXPECT_THROW(parse_attack_kind("sharpen"), Error);
}

TEST(Blur, ImpulseReproducesKernel) {
  const int n = 41;
  ImageBuffer img(n, n);
  img.at(20, 20, 1) = 1.0;
  const auto out = apply(spec(AttackKind::kBlur, 3), img);
  // Dense oracle: sampled Gaussian with sigma = r / 3 over |offset| <= r.
  const double sigma = 10.0 / 3.0;
  std::vector<double> k;
  double sum = 0.0;
  for (int i = -10; i <= 10; ++i) {
    k.push_back(std::exp(-0.5 * i * i / (sigma * sigma)));
    sum += k.back();
  }
  for (double& v : k) v /= sum;
  double total = 0.0;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const int dx = x - 20;
      const int dy = y - 20;
      const double want = std::abs(dx) <= 10 && std::abs(dy) <= 10 ? k[dx + 10] * k[dy + 10] : 0.0;
      EXPECT_NEAR(out.at(x, y, 1), want, 1e-12);
      EXPECT_EQ(out.at(x, y, 0), 0.0);
      total += out.at(x, y, 1);
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Blur, ReflectPadding) {
  EXPECT_EQ(reflect101(-1, 5), 1);
  EXPECT_EQ(reflect101(-2, 5), 2);
  EXPECT_EQ(reflect101(5, 5), 3);
  EXPECT_EQ(reflect101(6, 5), 2);
  EXPECT_EQ(reflect101(3, 5), 3);
  EXPECT_EQ(reflect101(-7, 3), 1);
  const ImageBuffer flat(9, 9, 0.37);
  for (double v : apply(spec(AttackKind::kBlur, 5), flat).values()) EXPECT_NEAR(v, 0.37, 1e-12);
}

TEST(Pointwise, IdentityAndRange) {
  const auto img = random_image(3, 16, 16);
  AttackSpec b = spec(AttackKind::kBrightness, 3);
  b.parameter = 1.0;
  EXPECT_EQ(apply(b, img), img);
  for (AttackKind k : kAllAttacks) {
    for (int level = 1; level <= 5; ++level) {
      const auto out = apply(spec(k, level), img);
      ASSERT_TRUE(out.same_shape(img));
      for (double v : out.values()) {
        ASSERT_GE(v, 0.0) << attack_name(k);
        ASSERT_LE(v, 1.0) << attack_name(k);
      }
    }
  }
}

TEST(Attacks, DeterministicPerSeed) {
  const auto img = random_image(4, 24, 24);
  for (AttackKind k : kAllAttacks) {
    EXPECT_EQ(apply(spec(k, 3, 7), img), apply(spec(k, 3, 7), img)) << attack_name(k);
  }
  EXPECT_NE(apply(spec(AttackKind::kNoise, 3, 7), img), apply(spec(AttackKind::kNoise, 3, 8), img));
}

TEST(Attacks, ErasingAreaAndJpegQuality) {
  const ImageBuffer white(40, 40, 1.0);
  const auto erased = apply(spec(AttackKind::kErasing, 3), white);
  int zeros = 0;
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) zeros += erased.at(x, y, 0) == 0.0;
  }
  EXPECT_NEAR(zeros / 1600.0, 0.125, 0.02);

  const auto img = random_image(6, 32, 32);
  double prev = 0.0;
  for (int level = 1; level <= 5; ++level) {
    const auto out = apply(spec(AttackKind::kJpegProxy, level), img);
    double err = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) err += std::pow(out.values()[i] - img.values()[i], 2);
    EXPECT_GT(err, prev);
    prev = err;
  }
}

// <A(x + h d) - A(x - h d), w> / 2h against <d, A^T w>.
void expect_exact_backward(AttackKind kind, int level, double tol) {
  const auto x = random_image(10, 24, 20, 0.2, 0.8);
  const auto r = apply_with_backward(spec(kind, level), x);
  const auto w = random_image(11, r.image.width(), r.image.height(), -1, 1);
  const auto d = random_image(12, 24, 20, -1, 1);
  const double h = 1e-4;
  ImageBuffer xp = x;
  ImageBuffer xm = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp.values()[i] += h * d.values()[i];
    xm.values()[i] -= h * d.values()[i];
  }
  const double numeric = (dot(apply(spec(kind, level), xp), w) - dot(apply(spec(kind, level), xm), w)) / (2 * h);
  const double analytic = dot(r.backward(w), d);
  EXPECT_NEAR(analytic, numeric, tol * std::max(1.0, std::abs(numeric))) << attack_name(kind);
}

TEST(Backward, ExactWhereDifferentiable) {
  expect_exact_backward(AttackKind::kBlur, 2, 1e-7);
  expect_exact_backward(AttackKind::kBrightness, 1, 1e-7);
  expect_exact_backward(AttackKind::kContrast, 1, 1e-7);
  expect_exact_backward(AttackKind::kNoise, 1, 1e-7);
  expect_exact_backward(AttackKind::kRotation, 2, 1e-6);
  expect_exact_backward(AttackKind::kResizedCrop, 2, 1e-6);
  expect_exact_backward(AttackKind::kErasing, 3, 1e-7);
}

TEST(Backward, StraightThrough) {
  const auto x = random_image(1, 16, 16);
  const auto w = random_image(2, 16, 16, -1, 1);
  EXPECT_EQ(apply_with_backward(spec(AttackKind::kJpegProxy, 3), x).backward(w), w);
  EXPECT_EQ(apply_with_backward(spec(AttackKind::kElastic, 3), x).backward(w), w);
}

TEST(Pipeline, ComposesInOrder) {
  const auto img = random_image(5, 32, 32);
  EXPECT_EQ(apply_pipeline({}, img), img);
  AttackPipeline p;
  p.frequency_stage = {spec(AttackKind::kBlur, 1, 3)};
  p.geometry_stage = {spec(AttackKind::kRotation, 1, 4)};
  EXPECT_EQ(apply_pipeline(p, img), apply(spec(AttackKind::kRotation, 1, 4), apply(spec(AttackKind::kBlur, 1, 3), img)));
  EXPECT_EQ(apply_pipeline_with_backward(p, img).image, apply_pipeline(p, img));
  EXPECT_TRUE(is_frequency_attack(AttackKind::kJpegProxy));
  EXPECT_FALSE(is_frequency_attack(AttackKind::kElastic));
}

}  // namespace
}  // namespace gswm
