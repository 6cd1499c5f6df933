#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gswm/camera.hpp"
#include "gswm/image.hpp"
#include "gswm/rasterizer.hpp"
#include "gswm/scene.hpp"

namespace gswm {

struct FitConfig {
  int n_gaussians = 500;
  int steps = 3000;
  std::uint64_t seed = 0;
  double lr_center = 2e-3;
  double lr_scale = 1e-2;
  double lr_rotation = 1e-2;
  double lr_opacity = 5e-2;
  double lr_color = 2.5e-2;
  double final_lr_fraction = 0.1;
  int log_every = 100;
  RasterConfig raster;

  void validate() const;
};

struct FitLog {
  int step = 0;
  double mse = 0.0;  ///< running mean over the logging window, values in [0,1]
};

struct FitResult {
  GaussianScene scene;
  double train_psnr = 0.0;  ///< mean over the input views
  std::vector<double> per_view_psnr;
};

/// Initial primitives: points drawn uniformly from the region every camera
/// sees, colored by the mean of the pixels they project to.
GaussianScene fit_initialization(const std::vector<ImageBuffer>& images, const std::vector<Camera>& cameras,
                                 const FitConfig& cfg);

/// Photometric fit of every primitive parameter by Adam on the per-pixel
/// MSE of one randomly chosen view per step. No density control.
FitResult fit_scene(const std::vector<ImageBuffer>& images, const std::vector<Camera>& cameras,
                    const FitConfig& cfg, const std::function<void(const FitLog&)>& progress = {});

}  // namespace gswm
