#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "gswm/camera.hpp"
#include "gswm/scene.hpp"

namespace gswm {

enum class SynthKind { kBlobs, kTexturedCard, kRing };

std::string_view synth_kind_name(SynthKind kind);
/// blobs, textured-card or ring.
SynthKind parse_synth_kind(std::string_view name);

struct SynthConfig {
  int resolution = 64;
  int train_views = 12;
  int test_views = 4;
  double orbit_radius = 4.0;
  double train_elevation_deg = 20.0;
  double test_elevation_deg = 30.0;
  double fov_deg = 45.0;
};

struct SynthResult {
  GaussianScene scene;
  std::vector<Camera> cameras;  ///< training views first, then test views
  int train_count = 0;

  std::vector<Camera> train_cameras() const;
  std::vector<Camera> test_cameras() const;
};

/// Procedural scene around the origin. Training cameras sit on a circle at
/// equal azimuth steps; test cameras are offset by half a step in azimuth and
/// raised in elevation. All cameras look at the origin.
SynthResult synth_scene(SynthKind kind, int n_gaussians, std::uint64_t seed, const SynthConfig& cfg = {});

}  // namespace gswm
