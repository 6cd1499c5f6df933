#include "gswm/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gswm/attacks.hpp"
#include "gswm/detection.hpp"
#include "gswm/error.hpp"
#include "gswm/losses.hpp"
#include "gswm/metrics.hpp"
#include "gswm/optim.hpp"
#include "gswm/rasterizer.hpp"
#include "gswm/rng.hpp"
#include "gswm/synth.hpp"
#include "json.hpp"

namespace gswm {

namespace {

constexpr std::uint64_t kCorpusTag = 0xC0B905ull;

Vec3 random_color(CounterRng& rng) { return Vec3(rng.uniform(), rng.uniform(), rng.uniform()); }

ImageBuffer gradient_image(CounterRng& rng, int n) {
  const Vec3 a = random_color(rng);
  const Vec3 b = random_color(rng);
  const Vec3 c = random_color(rng);
  const double angle = rng.uniform(0, 2 * std::numbers::pi);
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  const double cx = rng.uniform(0, n);
  const double cy = rng.uniform(0, n);
  const double radial = rng.uniform(0, 0.6);
  ImageBuffer img(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double t = std::clamp(0.5 + ((x - n / 2.0) * dx + (y - n / 2.0) * dy) / n, 0.0, 1.0);
      const double r = std::min(1.0, std::hypot(x - cx, y - cy) / n);
      const Vec3 v = (1 - radial) * ((1 - t) * a + t * b) + radial * ((1 - r) * c + r * a);
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = v[k];
    }
  }
  return img;
}

double smoothstep(double t) { return t * t * (3 - 2 * t); }

ImageBuffer value_noise_image(CounterRng& rng, int n) {
  ImageBuffer img(n, n);
  const int base_cells = 2 + static_cast<int>(rng.below(6));
  for (int c = 0; c < 3; ++c) {
    std::vector<double> plane(static_cast<std::size_t>(n) * n, 0.0);
    double amp = 1.0;
    int cells = base_cells;
    for (int octave = 0; octave < 4; ++octave) {
      std::vector<double> lattice(static_cast<std::size_t>(cells + 1) * (cells + 1));
      for (double& v : lattice) v = rng.uniform(-1, 1);
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const double fx = static_cast<double>(x) * cells / n;
          const double fy = static_cast<double>(y) * cells / n;
          const int ix = static_cast<int>(fx);
          const int iy = static_cast<int>(fy);
          const double tx = smoothstep(fx - ix);
          const double ty = smoothstep(fy - iy);
          auto at = [&](int i, int j) { return lattice[static_cast<std::size_t>(j) * (cells + 1) + i]; };
          const double top = (1 - tx) * at(ix, iy) + tx * at(ix + 1, iy);
          const double bottom = (1 - tx) * at(ix, iy + 1) + tx * at(ix + 1, iy + 1);
          plane[static_cast<std::size_t>(y) * n + x] += amp * ((1 - ty) * top + ty * bottom);
        }
      }
      amp *= 0.5;
      cells = std::min(cells * 2, n);
    }
    const auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
    const double range = std::max(*hi - *lo, 1e-9);
    const double gain = rng.uniform(0.4, 1.0);
    const double offset = rng.uniform(0.0, 1.0 - gain);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        img.at(x, y, c) = offset + gain * (plane[static_cast<std::size_t>(y) * n + x] - *lo) / range;
      }
    }
  }
  return img;
}

ImageBuffer checkerboard_image(CounterRng& rng, int n) {
  const Vec3 a = random_color(rng);
  const Vec3 b = random_color(rng);
  const double cell = rng.uniform(3.0, 16.0);
  const double angle = rng.uniform(0, std::numbers::pi / 2);
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  ImageBuffer img(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double u = (ca * x + sa * y) / cell;
      const double v = (-sa * x + ca * y) / cell;
      const bool odd = (static_cast<long>(std::floor(u)) + static_cast<long>(std::floor(v))) % 2 != 0;
      const Vec3& col = odd ? a : b;
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = col[k];
    }
  }
  return gaussian_blur(img, 0.7, 2);
}

ImageBuffer scene_render_image(CounterRng& rng, int n) {
  const SynthKind kinds[] = {SynthKind::kBlobs, SynthKind::kBlobs, SynthKind::kTexturedCard, SynthKind::kRing};
  SynthConfig sc;
  sc.resolution = n;
  sc.train_views = 8;
  sc.test_views = 0;
  sc.orbit_radius = rng.uniform(3.0, 5.0);
  sc.train_elevation_deg = rng.uniform(5.0, 45.0);
  const int count = 60 + static_cast<int>(rng.below(240));
  const auto s = synth_scene(kinds[rng.below(4)], count, rng.next_u64(), sc);
  return render(s.scene, s.cameras[rng.below(s.cameras.size())]);
}

// Pretraining augmentations: optionally one frequency attack and optionally
// one geometric attack, both at mild strength.
AttackPipeline pretrain_pipeline(const PretrainConfig& cfg, CounterRng& rng) {
  AttackPipeline p;
  const int level = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_attack_level)));
  switch (rng.below(6)) {
    case 0:
      break;
    case 1: {
      AttackSpec s{AttackKind::kBlur, level, 3.0 * rng.uniform(0.5, cfg.blur_sigma_max), rng.next_u64()};
      p.frequency_stage.push_back(s);
      break;
    }
    case 2:
      p.frequency_stage.push_back({AttackKind::kJpegProxy, level, std::nullopt, rng.next_u64()});
      break;
    case 3:
      p.frequency_stage.push_back({AttackKind::kNoise, level, std::nullopt, rng.next_u64()});
      break;
    case 4:
      p.frequency_stage.push_back({AttackKind::kBrightness, level, std::nullopt, rng.next_u64()});
      break;
    default:
      p.frequency_stage.push_back({AttackKind::kContrast, level, std::nullopt, rng.next_u64()});
      break;
  }
  static constexpr AttackKind kGeometric[] = {AttackKind::kElastic, AttackKind::kErasing, AttackKind::kRotation,
                                              AttackKind::kResizedCrop};
  const auto g = rng.below(6);
  if (g < 4) p.geometry_stage.push_back({kGeometric[g], level, std::nullopt, rng.next_u64()});
  return p;
}

MessageBits random_message(CounterRng& rng) {
  return MessageBits(std::bitset<kMessageBits>(rng.next_u64() & ((1ull << kMessageBits) - 1)));
}

// cover + residual, clamped to [0, 1].
ImageBuffer add_residual(const ImageBuffer& cover, const nn::Tensor<float>& residual) {
  ImageBuffer out = cover;
  for (int y = 0; y < cover.height(); ++y) {
    for (int x = 0; x < cover.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = std::clamp(cover.at(x, y, c) + residual.at(c, y, x), 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace

CorpusKind corpus_kind(std::uint64_t index) { return static_cast<CorpusKind>(index % 4); }

ImageBuffer corpus_image(std::uint64_t seed, std::uint64_t index, int resolution) {
  require(resolution >= 16, ErrorCode::kInvalidArgument, "corpus resolution must be >= 16");
  CounterRng rng({seed, kCorpusTag, index});
  switch (corpus_kind(index)) {
    case CorpusKind::kGradient: return gradient_image(rng, resolution);
    case CorpusKind::kValueNoise: return value_noise_image(rng, resolution);
    case CorpusKind::kCheckerboard: return checkerboard_image(rng, resolution);
    case CorpusKind::kSceneRender: return scene_render_image(rng, resolution);
  }
  return ImageBuffer(resolution, resolution);
}

void PretrainConfig::validate() const {
  require(steps >= 0 && batch >= 1, ErrorCode::kInvalidArgument, "steps must be >= 0 and batch >= 1");
  require(resolution >= kMinDecoderInput, ErrorCode::kInvalidArgument, "resolution must be >= 16");
  require(lr > 0, ErrorCode::kInvalidArgument, "lr must be positive");
  require(weight_bce >= 0 && weight_image >= 0 && weight_adv >= 0, ErrorCode::kInvalidArgument,
          "loss weights must be nonnegative");
  require(max_attack_level >= 1 && max_attack_level <= 5, ErrorCode::kInvalidArgument,
          "max_attack_level must be in 1..5");
  require(corpus_size >= 1000, ErrorCode::kInvalidArgument, "corpus must hold at least 1000 images");
  require(holdout >= 1 && log_every >= 1, ErrorCode::kInvalidArgument, "holdout and log_every must be >= 1");
}

HoldoutStats evaluate_holdout(const EncoderModel& encoder, const DecoderModel& decoder, const PretrainConfig& cfg) {
  const DecoderRunner runner(decoder);
  HoldoutStats s;
  for (int i = 0; i < cfg.holdout; ++i) {
    const std::uint64_t index = cfg.corpus_size + static_cast<std::uint64_t>(i);
    const ImageBuffer cover = corpus_image(cfg.seed, index, cfg.resolution);
    CounterRng rng({cfg.seed, 0x401D0u, index});
    const MessageBits msg = random_message(rng);
    const ImageBuffer marked = encode(encoder, cover, msg);
    s.bit_accuracy += bit_accuracy(decode_bits(runner.logits(marked)), msg);
    s.psnr += psnr(marked, cover);
  }
  s.bit_accuracy /= cfg.holdout;
  s.psnr /= cfg.holdout;
  return s;
}

PretrainResult pretrain_decoder(const PretrainConfig& cfg, const std::function<void(const PretrainLog&)>& progress) {
  cfg.validate();
  PretrainResult result;
  result.decoder = DecoderModel::initialized(hash_key({cfg.seed, 0xDEC0ull}));
  result.encoder = EncoderModel::initialized(hash_key({cfg.seed, 0xE2C0ull}));
  auto& dec = result.decoder;
  auto& enc = result.encoder;
  const auto disc_arch = discriminator_architecture();
  auto disc_init = DiscriminatorModel::initialized(hash_key({cfg.seed, 0xD15Cull}));
  std::vector<double> disc_params(disc_init.params.begin(), disc_init.params.end());

  Adam dec_opt(dec.params.size());
  Adam enc_opt(enc.params.size());
  Adam disc_opt(disc_params.size());
  std::vector<float> dec_grad_f(dec.params.size());
  std::vector<float> enc_grad_f(enc.params.size());
  std::vector<double> dec_grad(dec.params.size());
  std::vector<double> enc_grad(enc.params.size());
  std::vector<double> disc_grad(disc_params.size());

  PretrainLog running;
  int running_count = 0;
  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(dec_grad_f.begin(), dec_grad_f.end(), 0.0f);
    std::fill(enc_grad_f.begin(), enc_grad_f.end(), 0.0f);
    std::fill(disc_grad.begin(), disc_grad.end(), 0.0);
    const bool update_disc = cfg.weight_adv > 0 && step % 2 == 1;
    for (int b = 0; b < cfg.batch; ++b) {
      CounterRng rng({cfg.seed, 0x57E9ull, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(b)});
      const ImageBuffer cover = corpus_image(cfg.seed, rng.below(cfg.corpus_size), cfg.resolution);
      const MessageBits msg = random_message(rng);

      nn::Tape<float> enc_tape;
      auto residual = nn::forward<float>(enc.arch, enc.params,
                                         encoder_input(nn::from_image<float>(cover), msg), &enc_tape);
      const auto slope = bound_residual(residual);
      const ImageBuffer marked = add_residual(cover, residual);

      const AttackResult attacked = apply_pipeline_with_backward(
          step < cfg.clean_warmup_steps ? AttackPipeline{} : pretrain_pipeline(cfg, rng), marked);
      nn::Tape<float> dec_tape;
      const auto logits_f = nn::forward<float>(dec.arch, dec.params, nn::from_image<float>(attacked.image), &dec_tape);
      const std::vector<double> logits(logits_f.data.begin(), logits_f.data.end());
      const BceResult bce = bce_loss(logits, msg);
      nn::Tensor<float> d_logits(kMessageBits, 1, 1);
      for (int i = 0; i < kMessageBits; ++i) {
        d_logits.data[i] = static_cast<float>(cfg.weight_bce * bce.gradient[i] / cfg.batch);
      }
      const auto d_att = nn::backward<float>(dec.arch, dec.params, dec_tape, d_logits, dec_grad_f);
      ImageBuffer d_marked = attacked.backward(nn::to_image(d_att));

      const double n = static_cast<double>(marked.size());
      double image_loss = 0.0;
      for (std::size_t i = 0; i < marked.size(); ++i) {
        const double d = marked.values()[i] - cover.values()[i];
        image_loss += d * d / n;
        d_marked.values()[i] += cfg.weight_image * 2.0 * d / n / cfg.batch;
      }

      double adv_loss = 0.0;
      if (cfg.weight_adv > 0) {
        const auto adv = adversarial_losses(disc_arch, disc_params, cover, marked, update_disc);
        adv_loss = adv.gen_loss;
        for (std::size_t i = 0; i < marked.size(); ++i) {
          d_marked.values()[i] += cfg.weight_adv * adv.d_fake.values()[i] / cfg.batch;
        }
        if (update_disc) {
          for (std::size_t i = 0; i < disc_grad.size(); ++i) disc_grad[i] += adv.d_params[i] / cfg.batch;
        }
      }

      // Straight-through clamp: a saturated pixel would otherwise never recover.
      auto d_res = nn::from_image<float>(d_marked);
      for (std::size_t i = 0; i < slope.size(); ++i) d_res.data[i] *= slope[i];
      nn::backward<float>(enc.arch, enc.params, enc_tape, d_res, enc_grad_f);

      running.bce += bce.loss;
      running.image += image_loss;
      running.adv += adv_loss;
      running.bit_accuracy += bit_accuracy(decode_bits(logits), msg);
      ++running_count;
      if (!std::isfinite(bce.loss) || !std::isfinite(image_loss) || !std::isfinite(adv_loss)) {
        fail(ErrorCode::kDivergence, "pretraining loss is not finite at step " + std::to_string(step));
      }
    }
    std::copy(dec_grad_f.begin(), dec_grad_f.end(), dec_grad.begin());
    std::copy(enc_grad_f.begin(), enc_grad_f.end(), enc_grad.begin());
    dec_opt.step<float>(dec.params, dec_grad, cfg.lr);
    enc_opt.step<float>(enc.params, enc_grad, cfg.lr);
    if (update_disc) disc_opt.step<double>(disc_params, disc_grad, cfg.lr);

    if ((step + 1) % cfg.log_every == 0 || step + 1 == cfg.steps) {
      PretrainLog entry;
      entry.step = step + 1;
      entry.bce = running.bce / running_count;
      entry.image = running.image / running_count;
      entry.adv = running.adv / running_count;
      entry.bit_accuracy = running.bit_accuracy / running_count;
      result.log.push_back(entry);
      if (progress) progress(entry);
      running = {};
      running_count = 0;
    }
  }
  const HoldoutStats h = evaluate_holdout(enc, dec, cfg);
  result.holdout_bit_accuracy = h.bit_accuracy;
  result.holdout_psnr = h.psnr;
  return result;
}

std::string PretrainResult::to_json() const {
  nlohmann::ordered_json j;
  j["holdout_bit_accuracy"] = holdout_bit_accuracy;
  j["holdout_psnr"] = holdout_psnr;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& e : log) {
    entries.push_back({{"step", e.step}, {"bce", e.bce}, {"image", e.image}, {"adv", e.adv},
                       {"bit_accuracy", e.bit_accuracy}});
  }
  j["log"] = entries;
  return j.dump(2) + "\n";
}

}  // namespace gswm
