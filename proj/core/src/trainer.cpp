#include "gswm/trainer.hpp"

#include <cmath>

#include "gswm/detection.hpp"
#include "gswm/error.hpp"
#include "gswm/losses.hpp"
#include "gswm/optim.hpp"
#include "gswm/rng.hpp"
#include "json.hpp"

namespace gswm {

void TrainConfig::validate() const {
  require(iterations >= 1, ErrorCode::kInvalidArgument, "iterations must be >= 1");
  require(lr > 0 && final_lr_fraction > 0, ErrorCode::kInvalidArgument, "learning rate must be positive");
  require(weights.rec >= 0 && weights.wm >= 0 && weights.adv >= 0 && lambda_lpips_proxy >= 0,
          ErrorCode::kInvalidArgument, "loss weights must be nonnegative");
  require(blur_sigma_min >= 0 && blur_sigma_min <= blur_sigma_max, ErrorCode::kInvalidArgument,
          "blur sigma range must satisfy 0 <= min <= max");
  require(geometric_max_level >= 0 && geometric_max_level <= 5, ErrorCode::kInvalidArgument,
          "geometric_max_level must be in 0..5");
  require(patch_size >= 16, ErrorCode::kInvalidArgument, "patch_size must be >= 16");
  require(log_every >= 1, ErrorCode::kInvalidArgument, "log_every must be >= 1");
  raster.validate();
}

double TrainConfig::lr_at(int step) const {
  return lr * std::pow(final_lr_fraction, static_cast<double>(step) / iterations);
}

namespace {

constexpr std::uint64_t kStepTag = 0x7EA1A57ull;

void gather(const GaussianPrimitive& g, double* p) {
  for (int i = 0; i < 3; ++i) p[i] = g.center[i];
  for (int i = 0; i < 3; ++i) p[3 + i] = g.log_scale[i];
  for (int i = 0; i < 4; ++i) p[6 + i] = g.rotation[i];
  p[10] = g.opacity_logit;
  for (int i = 0; i < 3; ++i) p[11 + i] = g.color[i];
}

void scatter(const double* p, GaussianPrimitive& g) {
  for (int i = 0; i < 3; ++i) g.center[i] = p[i];
  for (int i = 0; i < 3; ++i) g.log_scale[i] = p[3 + i];
  for (int i = 0; i < 4; ++i) g.rotation[i] = p[6 + i];
  g.rotation = normalized_quaternion(g.rotation);
  g.opacity_logit = p[10];
  for (int i = 0; i < 3; ++i) g.color[i] = p[11 + i];
}

void gather_gradient(const PrimitiveGradient& d, double* p) {
  for (int i = 0; i < 3; ++i) p[i] = d.d_center[i];
  for (int i = 0; i < 3; ++i) p[3 + i] = d.d_log_scale[i];
  for (int i = 0; i < 4; ++i) p[6 + i] = d.d_rotation[i];
  p[10] = d.d_opacity_logit;
  for (int i = 0; i < 3; ++i) p[11 + i] = d.d_color[i];
}

ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int w, int h) {
  ImageBuffer out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
    }
  }
  return out;
}

void add_patch(ImageBuffer& dst, const ImageBuffer& patch, int x0, int y0, double scale) {
  for (int y = 0; y < patch.height(); ++y) {
    for (int x = 0; x < patch.width(); ++x) {
      for (int c = 0; c < 3; ++c) dst.at(x0 + x, y0 + y, c) += scale * patch.at(x, y, c);
    }
  }
}

bool finite(const StepLog& s) {
  return std::isfinite(s.total) && std::isfinite(s.rec) && std::isfinite(s.wm) && std::isfinite(s.adv) &&
         std::isfinite(s.disc);
}

}  // namespace

AttackPipeline training_pipeline(const TrainConfig& cfg, std::uint64_t stream) {
  CounterRng rng({stream, 0xA6ull});
  AttackPipeline p;
  AttackSpec blur;
  blur.kind = AttackKind::kBlur;
  blur.parameter = 3.0 * rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max);  // radius = 3 sigma
  blur.seed = rng.next_u64();
  p.frequency_stage.push_back(blur);
  if (cfg.geometric_max_level > 0) {
    static constexpr AttackKind kGeometric[] = {AttackKind::kElastic, AttackKind::kErasing, AttackKind::kRotation,
                                                AttackKind::kResizedCrop};
    AttackSpec g;
    g.kind = kGeometric[rng.below(4)];
    g.level = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.geometric_max_level)));
    g.seed = rng.next_u64();
    p.geometry_stage.push_back(g);
  }
  return p;
}

std::vector<double> clean_bit_accuracy(const GaussianScene& scene, const std::vector<Camera>& cameras,
                                       const DecoderModel& decoder, const MessageBits& message,
                                       const RasterConfig& raster) {
  const DecoderRunner runner(decoder);
  std::vector<double> acc;
  acc.reserve(cameras.size());
  for (const Camera& cam : cameras) {
    const auto logits = runner.logits(render(scene, cam, raster));
    acc.push_back(bit_accuracy(decode_bits(logits), message));
  }
  return acc;
}

EmbedResult embed(const GaussianScene& scene, const std::vector<Camera>& cameras,
                  const std::vector<ImageBuffer>& references, const DecoderModel& decoder,
                  const MessageBits& message, const TrainConfig& cfg,
                  const std::function<void(const StepLog&)>& progress) {
  cfg.validate();
  require(!cameras.empty(), ErrorCode::kInvalidArgument, "embed needs at least one camera");
  require(references.size() == cameras.size(), ErrorCode::kShapeMismatch,
          "embed needs one reference render per camera");
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    cameras[i].validate();
    require(references[i].width() == cameras[i].width && references[i].height() == cameras[i].height,
            ErrorCode::kShapeMismatch, "reference render " + std::to_string(i) + " does not match its camera");
  }

  EmbedResult result;
  result.scene = scene;
  std::vector<std::size_t> trainable;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    if (!scene.primitives[i].frozen) trainable.push_back(i);
  }
  TrainReport& report = result.report;
  report.config = cfg;
  report.message_hex = message.to_hex();
  report.trainable_primitives = trainable.size();

  std::vector<double> params(trainable.size() * kParamsPerPrimitive);
  for (std::size_t k = 0; k < trainable.size(); ++k) {
    gather(result.scene.primitives[trainable[k]], &params[k * kParamsPerPrimitive]);
  }
  std::vector<double> grad(params.size());
  Adam optimizer(params.size());

  const DecoderRunner runner(decoder);
  const bool use_adv = cfg.adv_enabled && cfg.weights.adv > 0.0;
  auto disc = DiscriminatorModel::initialized(hash_key({cfg.seed, 0xD15Cull}));
  std::vector<double> disc_params(disc.params.begin(), disc.params.end());
  Adam disc_optimizer(disc_params.size());

  double last_update_norm = 0.0;
  for (int step = 0; step < cfg.iterations; ++step) {
    CounterRng rng({cfg.seed, kStepTag, static_cast<std::uint64_t>(step)});
    const std::size_t view = rng.below(cameras.size());
    const Camera& cam = cameras[view];
    const ImageBuffer& reference = references[view];
    const ImageBuffer rendered = render(result.scene, cam, cfg.raster);
    ImageBuffer d_rendered(rendered.width(), rendered.height());
    StepLog log;
    log.step = step;
    log.lr = cfg.lr_at(step);

    // Watermark term through the augmentation and the frozen decoder.
    const AttackPipeline pipeline = training_pipeline(cfg, rng.next_u64());
    const AttackResult attacked = apply_pipeline_with_backward(pipeline, rendered);
    nn::Tape<double> tape;
    const auto logits = runner.logits(attacked.image, &tape);
    const BceResult bce = bce_loss(logits, message);
    log.wm = bce.loss;
    if (cfg.weights.wm > 0.0) {
      std::vector<double> d_logits(bce.gradient);
      for (double& v : d_logits) v *= cfg.weights.wm;
      const ImageBuffer d_attacked = runner.input_gradient(tape, d_logits);
      const ImageBuffer d_wm = attacked.backward(d_attacked);
      for (std::size_t i = 0; i < d_rendered.size(); ++i) d_rendered.values()[i] += d_wm.values()[i];
    }

    // Reconstruction term.
    const ReconstructionLoss rec = reconstruction_loss(rendered, reference, cfg.lambda_lpips_proxy);
    log.rec = rec.total;
    for (std::size_t i = 0; i < d_rendered.size(); ++i) {
      d_rendered.values()[i] += cfg.weights.rec * rec.gradient.values()[i];
    }

    // Adversarial term on a shared random patch.
    if (use_adv) {
      const int pw = std::min(cfg.patch_size, rendered.width());
      const int ph = std::min(cfg.patch_size, rendered.height());
      const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(rendered.width() - pw + 1)));
      const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(rendered.height() - ph + 1)));
      const bool update_disc = step % 2 == 1;
      const AdversarialLosses adv = adversarial_losses(disc.arch, disc_params, crop(reference, x0, y0, pw, ph),
                                                       crop(rendered, x0, y0, pw, ph), update_disc);
      log.adv = adv.gen_loss;
      log.disc = adv.disc_loss;
      add_patch(d_rendered, adv.d_fake, x0, y0, cfg.weights.adv);
      if (update_disc) disc_optimizer.step<double>(disc_params, adv.d_params, cfg.disc_lr);
    }

    log.total = cfg.weights.rec * log.rec + cfg.weights.wm * log.wm + cfg.weights.adv * (use_adv ? log.adv : 0.0);
    if (!finite(log)) {
      fail(ErrorCode::kDivergence, "loss is not finite at step " + std::to_string(step) +
                                       " (last parameter update norm " + std::to_string(last_update_norm) + ")");
    }

    const SceneGradients g = render_backward(result.scene, cam, cfg.raster, d_rendered);
    for (std::size_t k = 0; k < trainable.size(); ++k) {
      gather_gradient(g.primitives[trainable[k]], &grad[k * kParamsPerPrimitive]);
    }
    last_update_norm = optimizer.step<double>(params, grad, log.lr);
    for (std::size_t k = 0; k < trainable.size(); ++k) {
      scatter(&params[k * kParamsPerPrimitive], result.scene.primitives[trainable[k]]);
      // Keep the optimizer's view of the quaternion on the unit sphere.
      gather(result.scene.primitives[trainable[k]], &params[k * kParamsPerPrimitive]);
    }

    if (step % cfg.log_every == 0 || step + 1 == cfg.iterations) report.steps.push_back(log);
    if (progress) progress(log);
  }

  report.per_view_bit_accuracy = clean_bit_accuracy(result.scene, cameras, decoder, message, cfg.raster);
  double sum = 0.0;
  for (double a : report.per_view_bit_accuracy) sum += a;
  report.final_clean_bit_accuracy = sum / static_cast<double>(report.per_view_bit_accuracy.size());
  return result;
}

std::string TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = config.seed;
  j["message"] = message_hex;
  j["trainable_primitives"] = trainable_primitives;
  j["config"] = {
      {"iterations", config.iterations},
      {"lr", config.lr},
      {"final_lr_fraction", config.final_lr_fraction},
      {"lambda_rec", config.weights.rec},
      {"lambda_wm", config.weights.wm},
      {"lambda_adv", config.weights.adv},
      {"lambda_lpips_proxy", config.lambda_lpips_proxy},
      {"blur_sigma_range", {config.blur_sigma_min, config.blur_sigma_max}},
      {"geometric_max_level", config.geometric_max_level},
      {"adv_enabled", config.adv_enabled},
      {"disc_lr", config.disc_lr},
      {"patch_size", config.patch_size},
  };
  nlohmann::ordered_json steps_json = nlohmann::ordered_json::array();
  for (const auto& s : steps) {
    steps_json.push_back({{"step", s.step},
                          {"lr", s.lr},
                          {"total", s.total},
                          {"rec", s.rec},
                          {"wm", s.wm},
                          {"adv", s.adv},
                          {"disc", s.disc}});
  }
  j["steps"] = steps_json;
  j["final_clean_bit_accuracy"] = final_clean_bit_accuracy;
  j["per_view_bit_accuracy"] = per_view_bit_accuracy;
  return j.dump(2) + "\n";
}

}  // namespace gswm
