#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gswm/camera.hpp"
#include "gswm/scene.hpp"

namespace gswm {

struct FrequencyEntry {
  std::optional<double> nu_hat;  ///< max over observing views of fx / depth; empty if unseen
  int visible_count = 0;
  bool selected = false;
};

struct FrequencyReport {
  std::vector<FrequencyEntry> entries;  ///< indexed like scene.primitives
};

struct RegularizeConfig {
  /// Filter strength; the default is the smoothing scale squared, s = 0.2.
  double lambda = 0.2 * 0.2;
  double percentile = 25.0;
  double min_view_fraction = 1.0 / 3.0;
  int spawn_count = 1;

  void validate() const;
};

/// Sampling rate of every primitive over the views that observe it. A view
/// observes a primitive when the projected center lies inside the image and
/// the view depth exceeds the near plane.
FrequencyReport compute_sampling_frequencies(const GaussianScene& scene,
                                             const std::vector<Camera>& cameras);

/// Nearest-rank percentile: the value at rank ceil(p/100 * n) of the sorted list.
double nearest_rank_percentile(std::vector<double> values, double percentile);

/// Low-frequency, well-observed primitives: nu_hat at or below the configured
/// percentile of all defined nu_hat, and visible in at least
/// ceil(n_views * min_view_fraction) views. Returns indices in ascending order
/// and marks them in report.entries[i].selected.
std::vector<int> select_carriers(FrequencyReport& report, int n_views, const RegularizeConfig& cfg);

struct RegularizedPrimitive {
  GaussianPrimitive primitive;
  double kappa = 1.0;  ///< sqrt(det cov / det regularized cov)
};

/// Convolves the primitive with an isotropic Gaussian of variance lambda / nu_hat^2:
/// cov_reg = cov + (lambda / nu_hat^2) I. The result is re-expressed as a
/// scale and rotation through an eigendecomposition, and opacity is scaled by
/// kappa (clamped to (1e-4, 1 - 1e-4)).
RegularizedPrimitive regularize_covariance(const GaussianPrimitive& g, double nu_hat,
                                           double lambda);

struct DensifyResult {
  GaussianScene scene;
  std::vector<int> spawned;  ///< indices of the appended children
  bool empty_selection = false;
};

/// Freezes every existing primitive and appends spawn_count children per
/// carrier with centers drawn from N(parent center, parent covariance).
/// Child k of parent p uses the generator keyed by (seed, p, k).
DensifyResult densify(const GaussianScene& scene, const std::vector<int>& carriers,
                      const RegularizeConfig& cfg, std::uint64_t seed);

/// One-call carrier preparation: frequencies, selection, regularization of the
/// selected primitives, densification.
struct CarrierPreparation {
  FrequencyReport report;
  std::vector<int> carriers;
  DensifyResult densified;
};

CarrierPreparation prepare_carriers(const GaussianScene& scene, const std::vector<Camera>& cameras,
                                    const RegularizeConfig& cfg, std::uint64_t seed);

/// CSV with columns index,nu_hat,visible_count,selected. Undefined nu_hat is
/// written as an empty field.
std::string frequency_report_csv(const FrequencyReport& report);

}  // namespace gswm
