#include <gtest/gtest.h>

#include <cmath>

#include "gswm/detection.hpp"
#include "gswm/error.hpp"
#include "gswm/rng.hpp"
#include "helpers.hpp"

namespace gswm {
namespace {

// P(Binomial(n, 1/2) >= k) by summing exact integer binomial coefficients.
double enumerated_tail(int n, int k) {
  long double total = 0;
  long double c = 1;  // C(n, 0)
  for (int j = 0; j <= n; ++j) {
    if (j >= k) total += c;
    c = c * (n - j) / (j + 1);
  }
  return static_cast<double>(total / std::pow(2.0L, n));
}

int enumerated_threshold(int n, double fpr) {
  for (int k = 0; k <= n + 1; ++k) {
    if (enumerated_tail(n, k) <= fpr) return k;
  }
  return n + 1;
}

TEST(Bce, KnownValues) {
  const auto m = MessageBits::random(3);
  EXPECT_NEAR(bce_loss(std::vector<double>(48, 0.0), m).loss, std::log(2.0), 1e-15);
  std::vector<double> sure(48);
  for (int i = 0; i < 48; ++i) sure[i] = m[i] ? 20.0 : -20.0;
  EXPECT_LE(bce_loss(sure, m).loss, 1e-8);
  std::vector<double> huge(48, 800.0);
  EXPECT_TRUE(std::isfinite(bce_loss(huge, m).loss));
}

TEST(Bce, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = MessageBits::random(seed);
    CounterRng rng(seed);
    std::vector<double> z(48);
    for (double& v : z) v = rng.uniform(-6, 6);
    const auto r = bce_loss(z, m);
    for (int i = 0; i < 48; ++i) {
      const double num = testing::central_difference(z[i], 1e-5, [&] { return bce_loss(z, m).loss; });
      EXPECT_TRUE(testing::grad_close(r.gradient[i], num, 1e-6, 1e-11));
      const double sigma = 1.0 / (1.0 + std::exp(-z[i]));
      EXPECT_NEAR(r.gradient[i], (sigma - (m[i] ? 1.0 : 0.0)) / 48.0, 1e-15);
    }
  }
}

TEST(BitAccuracy, Examples) {
  const auto m = MessageBits::random(9);
  EXPECT_EQ(bit_accuracy(m, m), 1.0);
  EXPECT_EQ(bit_accuracy(m.complement(), m), 0.0);
  MessageBits half = m;
  for (int i = 0; i < 24; ++i) half.set(i, !m[i]);
  EXPECT_EQ(bit_accuracy(half, m), 0.5);
  EXPECT_EQ(matched_bits(half, m), 24);
}

TEST(Threshold, MatchesEnumeration) {
  EXPECT_EQ(detection_threshold(48, 0.01), 33);
  EXPECT_LE(enumerated_tail(48, 33), 0.01);
  EXPECT_GT(enumerated_tail(48, 32), 0.01);
  EXPECT_EQ(detection_threshold(1, 0.4), enumerated_threshold(1, 0.4));
  EXPECT_EQ(detection_threshold(1, 0.4), 2);
  for (int n : {2, 10, 48}) EXPECT_EQ(detection_threshold(n, 0.5), enumerated_threshold(n, 0.5));
  for (int n = 1; n <= 60; n += 7) {
    for (double fpr : {0.001, 0.01, 0.05, 0.2, 0.5, 0.9}) {
      EXPECT_EQ(detection_threshold(n, fpr), enumerated_threshold(n, fpr)) << n << " " << fpr;
      EXPECT_NEAR(binomial_tail(n, n / 2), enumerated_tail(n, n / 2), 1e-12);
    }
  }
}

TEST(Threshold, Monotone) {
  for (int n = 8; n <= 64; n += 8) {
    int prev = detection_threshold(n, 1e-4);
    for (double fpr : {1e-3, 1e-2, 0.1, 0.3}) {
      const int k = detection_threshold(n, fpr);
      EXPECT_LE(k, prev);
      prev = k;
    }
    EXPECT_GE(detection_threshold(n + 8, 0.01), detection_threshold(n, 0.01));
  }
  EXPECT_THROW(detection_threshold(48, 0.0), Error);
  EXPECT_THROW(detection_threshold(48, 1.0), Error);
}

TEST(Tpr, Examples) {
  const int thr = detection_threshold(48, 0.01);
  const auto m = MessageBits::random(1);
  MessageBits half = m;
  for (int i = 0; i < 24; ++i) half.set(i, !m[i]);
  std::vector<DetectionStats> all(5, detect(m, m, thr));
  EXPECT_EQ(tpr_at_fpr(all), 1.0);
  std::vector<DetectionStats> none(5, detect(half, m, thr));
  EXPECT_EQ(tpr_at_fpr(none), 0.0);
  EXPECT_THROW(tpr_at_fpr(std::vector<DetectionStats>{}), Error);
}

}  // namespace
}  // namespace gswm
