#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "gswm/error.hpp"
#include "gswm/pretrain.hpp"

namespace gswm {
namespace {

TEST(Corpus, DeterministicAndVaried) {
  EXPECT_EQ(corpus_image(3, 17, 32), corpus_image(3, 17, 32));
  EXPECT_NE(corpus_image(3, 17, 32), corpus_image(4, 17, 32));
  std::set<CorpusKind> kinds;
  std::set<std::vector<double>> distinct;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    kinds.insert(corpus_kind(i));
    const auto img = corpus_image(1, i, 16);
    for (double v : img.values()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    distinct.emplace(img.values().begin(), img.values().end());
  }
  EXPECT_EQ(kinds.size(), 4u);
  EXPECT_EQ(distinct.size(), 1000u);
}

TEST(EncoderInput, CosinePlanes) {
  nn::Tensor<double> img(3, 8, 12, 0.25);
  MessageBits m;
  m.set(0, true);
  m.set(2, true);
  const auto x = encoder_input(img, m);
  ASSERT_EQ(x.channels, 3 + kMessageBits);
  EXPECT_EQ(x.at(1, 4, 5), 0.25);
  // Bit 0 is the constant plane, bit 1 varies along y, bit 2 along x.
  for (int y = 0; y < 8; ++y) {
    for (int i = 0; i < 12; ++i) {
      EXPECT_NEAR(x.at(3, y, i), 1.0, 1e-15);
      EXPECT_NEAR(x.at(4, y, i), -std::cos(std::numbers::pi * (y + 0.5) / 8), 1e-15);
      EXPECT_NEAR(x.at(5, y, i), std::cos(std::numbers::pi * (i + 0.5) / 12), 1e-15);
    }
  }
  MessageBits flipped = m;
  flipped.set(7, !m[7]);
  const auto x2 = encoder_input(img, flipped);
  for (std::size_t k = 0; k < x.plane(); ++k) EXPECT_EQ(x2.data[10 * x.plane() + k], -x.data[10 * x.plane() + k]);
}

TEST(Pretrain, ValidatesConfig) {
  PretrainConfig c;
  c.lr = 0;
  EXPECT_THROW(pretrain_decoder(c), Error);
  c = {};
  c.corpus_size = 10;
  EXPECT_THROW(pretrain_decoder(c), Error);
  c = {};
  c.max_attack_level = 6;
  EXPECT_THROW(pretrain_decoder(c), Error);
  c = {};
  c.resolution = 8;
  EXPECT_THROW(pretrain_decoder(c), Error);
}

PretrainConfig tiny(std::uint64_t seed) {
  PretrainConfig c;
  c.steps = 6;
  c.resolution = 32;
  c.holdout = 4;
  c.log_every = 2;
  c.seed = seed;
  return c;
}

TEST(Pretrain, SameSeedSameWeights) {
  const auto a = pretrain_decoder(tiny(5));
  const auto b = pretrain_decoder(tiny(5));
  EXPECT_EQ(a.decoder.params, b.decoder.params);
  EXPECT_EQ(a.encoder.params, b.encoder.params);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(a.log.size(), 3u);
  EXPECT_NE(pretrain_decoder(tiny(6)).decoder.params, a.decoder.params);
}

TEST(Pretrain, UntrainedDecoderIsAtChance) {
  PretrainConfig c = tiny(9);
  c.holdout = 64;
  const auto stats = evaluate_holdout(EncoderModel::initialized(1), DecoderModel::initialized(2), c);
  EXPECT_NEAR(stats.bit_accuracy, 0.5, 0.1);
}

}  // namespace
}  // namespace gswm
