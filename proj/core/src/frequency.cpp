#include "gswm/frequency.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "gswm/error.hpp"
#include "gswm/rasterizer.hpp"
#include "gswm/rng.hpp"

namespace gswm {

void RegularizeConfig::validate() const {
  require(lambda >= 0.0, ErrorCode::kInvalidArgument, "lambda must be >= 0");
  require(percentile > 0.0 && percentile < 100.0, ErrorCode::kInvalidArgument,
          "percentile must lie in (0, 100)");
  require(min_view_fraction >= 0.0 && min_view_fraction <= 1.0, ErrorCode::kInvalidArgument,
          "min_view_fraction must lie in [0, 1]");
  require(spawn_count >= 1, ErrorCode::kInvalidArgument, "spawn_count must be >= 1");
}

FrequencyReport compute_sampling_frequencies(const GaussianScene& scene,
                                             const std::vector<Camera>& cameras) {
  require(!cameras.empty(), ErrorCode::kInvalidArgument, "need at least one camera");
  FrequencyReport report;
  report.entries.resize(scene.primitives.size());
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    auto& e = report.entries[i];
    for (const Camera& cam : cameras) {
      const Vec3 v = cam.to_view(scene.primitives[i].center);
      if (!(v.z() > kNearPlane)) continue;
      const double x = cam.focal.x() * v.x() / v.z() + cam.principal_point.x();
      const double y = cam.focal.y() * v.y() / v.z() + cam.principal_point.y();
      if (x < 0.0 || y < 0.0 || x >= cam.width || y >= cam.height) continue;
      const double nu = cam.focal.x() / v.z();
      ++e.visible_count;
      e.nu_hat = e.nu_hat ? std::max(*e.nu_hat, nu) : nu;
    }
  }
  return report;
}

double nearest_rank_percentile(std::vector<double> values, double percentile) {
  require(!values.empty(), ErrorCode::kInvalidArgument, "percentile of an empty list");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(percentile / 100.0 * n)));
  return values[std::min(rank, values.size()) - 1];
}

std::vector<int> select_carriers(FrequencyReport& report, int n_views, const RegularizeConfig& cfg) {
  cfg.validate();
  for (auto& e : report.entries) e.selected = false;
  std::vector<double> defined;
  for (const auto& e : report.entries) {
    if (e.nu_hat) defined.push_back(*e.nu_hat);
  }
  std::vector<int> selected;
  if (defined.empty()) return selected;
  const double threshold = nearest_rank_percentile(defined, cfg.percentile);
  const int min_views = static_cast<int>(std::ceil(n_views * cfg.min_view_fraction - 1e-12));
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    auto& e = report.entries[i];
    if (e.nu_hat && *e.nu_hat <= threshold && e.visible_count >= min_views) {
      e.selected = true;
      selected.push_back(static_cast<int>(i));
    }
  }
  return selected;
}

RegularizedPrimitive regularize_covariance(const GaussianPrimitive& g, double nu_hat,
                                           double lambda) {
  require(nu_hat > 0.0 && std::isfinite(nu_hat), ErrorCode::kInvalidArgument,
          "nu_hat must be positive");
  require(lambda >= 0.0, ErrorCode::kInvalidArgument, "lambda must be >= 0");
  if (lambda == 0.0) return {g, 1.0};

  const double added = lambda / (nu_hat * nu_hat);
  Eigen::SelfAdjointEigenSolver<Mat3> eig(covariance_of(g));
  const Vec3 values = eig.eigenvalues();
  Mat3 axes = eig.eigenvectors();
  if (axes.determinant() < 0.0) axes.col(0) *= -1.0;
  const Vec3 reg_values = values.array() + added;

  RegularizedPrimitive out{g, 1.0};
  out.primitive.log_scale = 0.5 * reg_values.array().log();
  out.primitive.rotation = quaternion_from_matrix(axes);
  // Determinant ratio from the spectrum: prod(v / (v + added)).
  out.kappa = std::sqrt((values.array() / reg_values.array()).prod());
  const double alpha = std::clamp(g.opacity() * out.kappa, 1e-4, 1.0 - 1e-4);
  out.primitive.opacity_logit = logit(alpha);
  return out;
}

DensifyResult densify(const GaussianScene& scene, const std::vector<int>& carriers,
                      const RegularizeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  DensifyResult result;
  result.scene = scene;
  for (auto& g : result.scene.primitives) g.frozen = true;
  result.empty_selection = carriers.empty();
  for (int parent_index : carriers) {
    require(parent_index >= 0 && static_cast<std::size_t>(parent_index) < scene.primitives.size(),
            ErrorCode::kInvalidArgument, "carrier index out of range");
    const GaussianPrimitive& parent = scene.primitives[parent_index];
    const Mat3 chol = covariance_of(parent).llt().matrixL();
    for (int k = 0; k < cfg.spawn_count; ++k) {
      CounterRng rng({seed, static_cast<std::uint64_t>(parent_index), static_cast<std::uint64_t>(k)});
      const Vec3 z(rng.normal(), rng.normal(), rng.normal());
      GaussianPrimitive child = parent;
      child.center = parent.center + chol * z;
      child.frozen = false;
      result.spawned.push_back(static_cast<int>(result.scene.primitives.size()));
      result.scene.primitives.push_back(child);
    }
  }
  return result;
}

CarrierPreparation prepare_carriers(const GaussianScene& scene, const std::vector<Camera>& cameras,
                                    const RegularizeConfig& cfg, std::uint64_t seed) {
  CarrierPreparation prep;
  prep.report = compute_sampling_frequencies(scene, cameras);
  prep.carriers = select_carriers(prep.report, static_cast<int>(cameras.size()), cfg);
  GaussianScene regularized = scene;
  for (int i : prep.carriers) {
    regularized.primitives[i] =
        regularize_covariance(scene.primitives[i], *prep.report.entries[i].nu_hat, cfg.lambda).primitive;
  }
  prep.densified = densify(regularized, prep.carriers, cfg, seed);
  return prep;
}

std::string frequency_report_csv(const FrequencyReport& report) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "index,nu_hat,visible_count,selected\n";
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    const auto& e = report.entries[i];
    out << i << ',';
    if (e.nu_hat) out << *e.nu_hat;
    out << ',' << e.visible_count << ',' << (e.selected ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace gswm
