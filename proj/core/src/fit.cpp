#include "gswm/fit.hpp"

#include <algorithm>
#include <cmath>

#include "gswm/error.hpp"
#include "gswm/metrics.hpp"
#include "gswm/optim.hpp"
#include "gswm/rng.hpp"

namespace gswm {

namespace {

std::optional<Vec2> project_point(const Camera& cam, const Vec3& p) {
  const Vec3 v = cam.to_view(p);
  if (v.z() <= kNearPlane) return std::nullopt;
  const Vec2 px(cam.focal.x() * v.x() / v.z() + cam.principal_point.x(),
                cam.focal.y() * v.y() / v.z() + cam.principal_point.y());
  if (px.x() < 0 || px.y() < 0 || px.x() >= cam.width || px.y() >= cam.height) return std::nullopt;
  return px;
}

// Parameter groups, each with its own learning rate.
struct Groups {
  std::vector<double> center, scale, rotation, opacity, color;
};

Groups gather(const GaussianScene& s) {
  Groups g;
  for (const auto& p : s.primitives) {
    g.center.insert(g.center.end(), p.center.data(), p.center.data() + 3);
    g.scale.insert(g.scale.end(), p.log_scale.data(), p.log_scale.data() + 3);
    g.rotation.insert(g.rotation.end(), p.rotation.data(), p.rotation.data() + 4);
    g.opacity.push_back(p.opacity_logit);
    g.color.insert(g.color.end(), p.color.data(), p.color.data() + 3);
  }
  return g;
}

}  // namespace

void FitConfig::validate() const {
  require(n_gaussians >= 1, ErrorCode::kInvalidArgument, "n_gaussians must be >= 1");
  require(steps >= 0, ErrorCode::kInvalidArgument, "steps must be >= 0");
  require(lr_center > 0 && lr_scale > 0 && lr_rotation > 0 && lr_opacity > 0 && lr_color > 0 && final_lr_fraction > 0,
          ErrorCode::kInvalidArgument, "learning rates must be positive");
  require(log_every >= 1, ErrorCode::kInvalidArgument, "log_every must be >= 1");
  raster.validate();
}

GaussianScene fit_initialization(const std::vector<ImageBuffer>& images, const std::vector<Camera>& cameras,
                                 const FitConfig& cfg) {
  require(cameras.size() >= 4, ErrorCode::kInvalidArgument, "fit_scene needs at least 4 posed images");
  require(images.size() == cameras.size(), ErrorCode::kShapeMismatch, "fit_scene needs one image per camera");
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    cameras[i].validate();
    require(images[i].width() == cameras[i].width && images[i].height() == cameras[i].height,
            ErrorCode::kShapeMismatch, "image " + std::to_string(i) + " does not match its camera");
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto& c : cameras) centroid += c.center();
  centroid /= static_cast<double>(cameras.size());
  double dist = 0.0;
  for (const auto& c : cameras) dist += (c.center() - centroid).norm();
  dist /= static_cast<double>(cameras.size());
  const double extent = 0.5 * dist;

  GaussianScene scene;
  Vec3 bg = Vec3::Zero();
  for (const auto& img : images) {
    for (auto [x, y] : {std::pair{0, 0}, std::pair{img.width() - 1, 0}, std::pair{0, img.height() - 1},
                        std::pair{img.width() - 1, img.height() - 1}}) {
      for (int c = 0; c < 3; ++c) bg[c] += img.at(x, y, c);
    }
  }
  scene.background = bg / (4.0 * images.size());

  CounterRng rng({cfg.seed, 0xF17ull});
  const double spacing = extent * std::cbrt(4.0 / cfg.n_gaussians);
  long attempts = 0;
  while (static_cast<int>(scene.primitives.size()) < cfg.n_gaussians) {
    require(++attempts < 1000L * cfg.n_gaussians + 100000, ErrorCode::kValidation,
            "cameras share no common visible volume");
    const Vec3 p = centroid + extent * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    Vec3 color = Vec3::Zero();
    bool seen = true;
    for (std::size_t i = 0; i < cameras.size() && seen; ++i) {
      const auto px = project_point(cameras[i], p);
      if (!px) {
        seen = false;
        break;
      }
      for (int c = 0; c < 3; ++c) {
        color[c] += images[i].at(static_cast<int>(px->x()), static_cast<int>(px->y()), c);
      }
    }
    if (!seen) continue;
    GaussianPrimitive g;
    g.center = p;
    g.log_scale = Vec3::Constant(std::log(0.5 * spacing));
    g.opacity_logit = 0.0;
    g.color = color / static_cast<double>(cameras.size());
    scene.primitives.push_back(g);
  }
  return scene;
}

FitResult fit_scene(const std::vector<ImageBuffer>& images, const std::vector<Camera>& cameras, const FitConfig& cfg,
                    const std::function<void(const FitLog&)>& progress) {
  cfg.validate();
  FitResult result;
  result.scene = fit_initialization(images, cameras, cfg);
  GaussianScene& scene = result.scene;
  const std::size_t n = scene.primitives.size();
  Groups params = gather(scene);
  Adam opt_center(params.center.size()), opt_scale(params.scale.size()), opt_rotation(params.rotation.size()),
      opt_opacity(params.opacity.size()), opt_color(params.color.size());
  Groups grads = params;

  FitLog window;
  int window_count = 0;
  for (int step = 0; step < cfg.steps; ++step) {
    CounterRng rng({cfg.seed, 0xF1750ull, static_cast<std::uint64_t>(step)});
    const std::size_t view = rng.below(cameras.size());
    const ImageBuffer rendered = render(scene, cameras[view], cfg.raster);
    ImageBuffer d(rendered.width(), rendered.height());
    double loss = 0.0;
    const double count = static_cast<double>(rendered.size());
    for (std::size_t i = 0; i < rendered.size(); ++i) {
      const double diff = rendered.values()[i] - images[view].values()[i];
      loss += diff * diff / count;
      d.values()[i] = 2.0 * diff / count;
    }
    if (!std::isfinite(loss)) fail(ErrorCode::kDivergence, "fit loss is not finite at step " + std::to_string(step));
    const SceneGradients g = render_backward(scene, cameras[view], cfg.raster, d);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& pg = g.primitives[k];
      for (int a = 0; a < 3; ++a) {
        grads.center[3 * k + a] = pg.d_center[a];
        grads.scale[3 * k + a] = pg.d_log_scale[a];
        grads.color[3 * k + a] = pg.d_color[a];
      }
      for (int a = 0; a < 4; ++a) grads.rotation[4 * k + a] = pg.d_rotation[a];
      grads.opacity[k] = pg.d_opacity_logit;
    }
    const double decay = std::pow(cfg.final_lr_fraction, static_cast<double>(step) / std::max(1, cfg.steps));
    opt_center.step<double>(params.center, grads.center, cfg.lr_center * decay);
    opt_scale.step<double>(params.scale, grads.scale, cfg.lr_scale * decay);
    opt_rotation.step<double>(params.rotation, grads.rotation, cfg.lr_rotation * decay);
    opt_opacity.step<double>(params.opacity, grads.opacity, cfg.lr_opacity * decay);
    opt_color.step<double>(params.color, grads.color, cfg.lr_color * decay);
    for (std::size_t k = 0; k < n; ++k) {
      auto& p = scene.primitives[k];
      p.center = Vec3(params.center[3 * k], params.center[3 * k + 1], params.center[3 * k + 2]);
      p.log_scale = Vec3(params.scale[3 * k], params.scale[3 * k + 1], params.scale[3 * k + 2]);
      p.rotation = normalized_quaternion(
          Vec4(params.rotation[4 * k], params.rotation[4 * k + 1], params.rotation[4 * k + 2], params.rotation[4 * k + 3]));
      for (int a = 0; a < 4; ++a) params.rotation[4 * k + a] = p.rotation[a];
      p.opacity_logit = params.opacity[k];
      p.color = Vec3(params.color[3 * k], params.color[3 * k + 1], params.color[3 * k + 2]);
    }
    window.mse += loss;
    ++window_count;
    if ((step + 1) % cfg.log_every == 0 || step + 1 == cfg.steps) {
      window.step = step + 1;
      window.mse /= window_count;
      if (progress) progress(window);
      window = {};
      window_count = 0;
    }
  }
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    result.per_view_psnr.push_back(psnr(render(scene, cameras[i], cfg.raster), images[i]));
    result.train_psnr += result.per_view_psnr.back();
  }
  result.train_psnr /= static_cast<double>(cameras.size());
  return result;
}

}  // namespace gswm
