#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gswm/attacks.hpp"
#include "gswm/camera.hpp"
#include "gswm/codec.hpp"
#include "gswm/message.hpp"
#include "gswm/rasterizer.hpp"
#include "gswm/scene.hpp"

namespace gswm {

struct ViewSet {
  std::string name;  ///< train, test or interpolate
  std::vector<Camera> cameras;
};

struct AttackLevels {
  AttackKind kind = AttackKind::kBlur;
  std::vector<int> levels;
};

struct EvalProtocol {
  std::vector<ViewSet> view_sets;
  std::vector<AttackLevels> attacks;
  int trials_per_cell = 5;
  double fpr = 0.01;
  std::uint64_t seed = 0;
  RasterConfig raster;

  /// train / test / interpolate (k interior views per consecutive train pair)
  /// with every attack at levels 1..5.
  static EvalProtocol standard(const std::vector<Camera>& train, const std::vector<Camera>& test, int k = 1);

  void validate() const;
};

struct ReportRow {
  std::string view_set;
  std::string attack;  ///< "none" for the clean row
  int level = 0;       ///< 0 for the clean row
  int trials = 0;      ///< decoded images pooled into the row
  double bit_accuracy = 0.0;
  double tpr_at_1pct_fpr = 0.0;
  double psnr = 0.0;  ///< unattacked watermarked vs reference renders
  double ssim = 0.0;
  double mse = 0.0;
  std::string error;  ///< non-empty when the cell failed
};

struct ReportTable {
  std::vector<ReportRow> rows;
  int threshold_bits = 0;
  std::string message_hex;

  const ReportRow* find(const std::string& view_set, const std::string& attack, int level) const;

  std::string to_csv() const;
  std::string to_json() const;
};

/// For every (view set, attack, level, view, trial) renders the watermarked
/// view, attacks it, decodes and scores against `message`. Averages pool all
/// views of a view set. Quality metrics compare unattacked renders of the two
/// scenes. A failing cell keeps its row with the error text.
ReportTable run_evaluation(const GaussianScene& scene_wm, const GaussianScene& scene_ref, const EvalProtocol& protocol,
                           const DecoderModel& decoder, const MessageBits& message);

/// Seed of one attack trial; independent of evaluation order.
std::uint64_t trial_seed(std::uint64_t base, const std::string& view_set, AttackKind kind, int level, std::size_t view,
                         int trial);

}  // namespace gswm
