#include "gswm/synth.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gswm/error.hpp"
#include "gswm/rng.hpp"

namespace gswm {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Vec4 random_quaternion(CounterRng& rng) {
  Vec4 q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  if (q.norm() < 1e-12) return Vec4(1, 0, 0, 0);
  q.normalize();
  if (q[0] < 0) q = -q;
  return q;
}

Vec3 smooth_color(const Vec3& p, const Vec3& phase) {
  return Vec3(0.5 + 0.4 * std::sin(2.1 * p.x() + phase.x()), 0.5 + 0.4 * std::sin(1.7 * p.y() + 2.0 * p.z() + phase.y()),
              0.5 + 0.4 * std::sin(2.6 * p.z() - 1.3 * p.x() + phase.z()));
}

Vec3 clamp_color(const Vec3& c) { return c.cwiseMax(0.02).cwiseMin(0.98); }

GaussianScene blobs(int n, CounterRng& rng) {
  GaussianScene s;
  s.background = Vec3(0.05, 0.05, 0.08);
  const Vec3 phase(rng.uniform(0, 6.28), rng.uniform(0, 6.28), rng.uniform(0, 6.28));
  for (int i = 0; i < n; ++i) {
    GaussianPrimitive g;
    Vec3 p;
    do {
      p = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    } while (p.squaredNorm() > 1.0);
    g.center = p;
    const double base = std::log(rng.uniform(0.05, 0.18));
    for (int a = 0; a < 3; ++a) g.log_scale[a] = base + std::log(rng.uniform(0.6, 1.4));
    g.rotation = random_quaternion(rng);
    g.opacity_logit = logit(rng.uniform(0.4, 0.9));
    const Vec3 jitter(rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15));
    g.color = clamp_color(smooth_color(p, phase) + jitter);
    s.primitives.push_back(g);
  }
  return s;
}

GaussianScene textured_card(int n, CounterRng& rng) {
  GaussianScene s;
  s.background = Vec3(0.08, 0.06, 0.05);
  const int side = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
  const double extent = 1.2;
  const double step = 2 * extent / side;
  for (int i = 0; i < n; ++i) {
    const int gx = i % side;
    const int gy = (i / side) % side;
    GaussianPrimitive g;
    g.center = Vec3(-extent + (gx + 0.5) * step + rng.uniform(-0.1, 0.1) * step,
                    -extent + (gy + 0.5) * step + rng.uniform(-0.1, 0.1) * step, rng.uniform(-0.01, 0.01));
    g.log_scale = Vec3(std::log(0.6 * step), std::log(0.6 * step), std::log(0.01));
    g.rotation = Vec4(1, 0, 0, 0);
    g.opacity_logit = logit(0.9);
    const bool checker = ((gx / 3) + (gy / 3)) % 2 == 0;
    const double stripe = 0.5 + 0.4 * std::sin(3.0 * g.center.x());
    g.color = checker ? Vec3(0.85, stripe, 0.2) : Vec3(0.15, 0.3, stripe);
    g.color = clamp_color(g.color + Vec3(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)));
    s.primitives.push_back(g);
  }
  return s;
}

GaussianScene ring(int n, CounterRng& rng) {
  GaussianScene s;
  s.background = Vec3(0.04, 0.07, 0.06);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(0, 2 * std::numbers::pi);
    const double v = rng.uniform(0, 2 * std::numbers::pi);
    const double r = 0.9 + 0.22 * std::cos(v);
    GaussianPrimitive g;
    g.center = Vec3(r * std::cos(u), r * std::sin(u), 0.22 * std::sin(v));
    const double base = std::log(rng.uniform(0.05, 0.12));
    for (int a = 0; a < 3; ++a) g.log_scale[a] = base + std::log(rng.uniform(0.7, 1.3));
    g.rotation = random_quaternion(rng);
    g.opacity_logit = logit(rng.uniform(0.5, 0.9));
    g.color = clamp_color(Vec3(0.5 + 0.45 * std::cos(u), 0.5 + 0.45 * std::cos(u + 2.1), 0.5 + 0.45 * std::cos(u + 4.2)));
    s.primitives.push_back(g);
  }
  return s;
}

Camera orbit_camera(double azimuth_deg, double elevation_deg, const SynthConfig& cfg) {
  const double az = azimuth_deg * kDeg;
  const double el = elevation_deg * kDeg;
  const Vec3 center(cfg.orbit_radius * std::cos(el) * std::cos(az), cfg.orbit_radius * std::cos(el) * std::sin(az),
                    cfg.orbit_radius * std::sin(el));
  const double focal = 0.5 * cfg.resolution / std::tan(0.5 * cfg.fov_deg * kDeg);
  return look_at(center, Vec3::Zero(), Vec3(0, 0, 1), focal, cfg.resolution, cfg.resolution);
}

}  // namespace

std::string_view synth_kind_name(SynthKind kind) {
  switch (kind) {
    case SynthKind::kBlobs: return "blobs";
    case SynthKind::kTexturedCard: return "textured-card";
    case SynthKind::kRing: return "ring";
  }
  return "blobs";
}

SynthKind parse_synth_kind(std::string_view name) {
  for (SynthKind k : {SynthKind::kBlobs, SynthKind::kTexturedCard, SynthKind::kRing}) {
    if (synth_kind_name(k) == name) return k;
  }
  fail(ErrorCode::kInvalidArgument, "unknown scene kind '" + std::string(name) + "'");
}

std::vector<Camera> SynthResult::train_cameras() const {
  return {cameras.begin(), cameras.begin() + train_count};
}

std::vector<Camera> SynthResult::test_cameras() const {
  return {cameras.begin() + train_count, cameras.end()};
}

SynthResult synth_scene(SynthKind kind, int n_gaussians, std::uint64_t seed, const SynthConfig& cfg) {
  require(n_gaussians >= 10, ErrorCode::kInvalidArgument, "synth_scene needs at least 10 Gaussians");
  require(cfg.resolution >= 16 && cfg.train_views >= 1 && cfg.test_views >= 0, ErrorCode::kInvalidArgument,
          "invalid synthetic camera configuration");
  CounterRng rng({seed, 0x5C3E4Eull, static_cast<std::uint64_t>(kind)});
  SynthResult r;
  switch (kind) {
    case SynthKind::kBlobs: r.scene = blobs(n_gaussians, rng); break;
    case SynthKind::kTexturedCard: r.scene = textured_card(n_gaussians, rng); break;
    case SynthKind::kRing: r.scene = ring(n_gaussians, rng); break;
  }
  const double step = 360.0 / cfg.train_views;
  for (int i = 0; i < cfg.train_views; ++i) r.cameras.push_back(orbit_camera(i * step, cfg.train_elevation_deg, cfg));
  const double test_step = 360.0 / std::max(1, cfg.test_views);
  for (int i = 0; i < cfg.test_views; ++i) {
    r.cameras.push_back(orbit_camera(0.5 * step + i * test_step, cfg.test_elevation_deg, cfg));
  }
  r.train_count = cfg.train_views;
  return r;
}

}  // namespace gswm
