#pragma once

#include <cmath>
#include <functional>

#include "gswm/camera.hpp"
#include "gswm/image.hpp"
#include "gswm/rng.hpp"
#include "gswm/scene.hpp"

namespace gswm::testing {

inline Camera front_camera(int size = 32, double distance = 4.0) {
  return look_at(Vec3(0, -distance, 0), Vec3::Zero(), Vec3(0, 0, 1), 1.2 * size, size, size);
}

/// n Gaussians scattered around the origin, well inside front_camera's view.
inline GaussianScene random_scene(std::uint64_t seed, int n, double spread = 0.8) {
  CounterRng rng({seed, 0x7E57ull});
  GaussianScene s;
  s.background = Vec3(rng.uniform(), rng.uniform(), rng.uniform());
  for (int i = 0; i < n; ++i) {
    GaussianPrimitive g;
    g.center = Vec3(rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(-spread, spread));
    g.log_scale = Vec3(rng.uniform(-2.5, -1.2), rng.uniform(-2.5, -1.2), rng.uniform(-2.5, -1.2));
    g.rotation = normalized_quaternion(Vec4(rng.normal(), rng.normal(), rng.normal(), rng.normal()));
    g.opacity_logit = rng.uniform(-1.5, 2.5);
    g.color = Vec3(rng.uniform(), rng.uniform(), rng.uniform());
    s.primitives.push_back(g);
  }
  return s;
}

inline ImageBuffer random_image(std::uint64_t seed, int w, int h, double lo = 0.0, double hi = 1.0) {
  CounterRng rng({seed, 0x1A6Eull});
  ImageBuffer img(w, h);
  for (double& v : img.values()) v = rng.uniform(lo, hi);
  return img;
}

inline double dot(const ImageBuffer& a, const ImageBuffer& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

/// Central difference of f around x (x is restored afterwards).
inline double central_difference(double& x, double h, const std::function<double()>& f) {
  const double x0 = x;
  x = x0 + h;
  const double up = f();
  x = x0 - h;
  const double down = f();
  x = x0;
  return (up - down) / (2 * h);
}

/// |a - b| within rel * max(|a|, |b|), or below the absolute floor.
inline bool grad_close(double analytic, double numeric, double rel, double floor) {
  const double diff = std::abs(analytic - numeric);
  return diff <= floor || diff <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

}  // namespace gswm::testing
