#include "gswm/evaluation.hpp"

#include <iomanip>
#include <limits>
#include <sstream>

#include "gswm/detection.hpp"
#include "gswm/error.hpp"
#include "gswm/metrics.hpp"
#include "gswm/parallel.hpp"
#include "gswm/rng.hpp"
#include "json.hpp"

namespace gswm {

namespace {

std::uint64_t string_hash(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001B3ull;
  return h;
}

constexpr const char* kAveraging = "pooled over all views of each view set";

}  // namespace

std::uint64_t trial_seed(std::uint64_t base, const std::string& view_set, AttackKind kind, int level, std::size_t view,
                         int trial) {
  return hash_key({base, string_hash(view_set), static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(level),
                   static_cast<std::uint64_t>(view), static_cast<std::uint64_t>(trial)});
}

EvalProtocol EvalProtocol::standard(const std::vector<Camera>& train, const std::vector<Camera>& test, int k) {
  EvalProtocol p;
  p.view_sets.push_back({"train", train});
  p.view_sets.push_back({"test", test});
  p.view_sets.push_back({"interpolate", interpolate_path(train, k)});
  for (AttackKind kind : kAllAttacks) p.attacks.push_back({kind, {1, 2, 3, 4, 5}});
  return p;
}

void EvalProtocol::validate() const {
  require(trials_per_cell >= 1, ErrorCode::kInvalidArgument, "trials_per_cell must be >= 1");
  require(fpr > 0 && fpr < 1, ErrorCode::kInvalidArgument, "fpr must lie in (0, 1)");
  for (const auto& vs : view_sets) {
    require(!vs.name.empty(), ErrorCode::kInvalidArgument, "view sets need a name");
    for (const auto& cam : vs.cameras) cam.validate();
  }
  for (const auto& a : attacks) {
    for (int level : a.levels) ladder(a.kind, level);
  }
  raster.validate();
}

const ReportRow* ReportTable::find(const std::string& view_set, const std::string& attack, int level) const {
  for (const auto& r : rows) {
    if (r.view_set == view_set && r.attack == attack && r.level == level) return &r;
  }
  return nullptr;
}

ReportTable run_evaluation(const GaussianScene& scene_wm, const GaussianScene& scene_ref, const EvalProtocol& protocol,
                           const DecoderModel& decoder, const MessageBits& message) {
  protocol.validate();
  ReportTable table;
  table.threshold_bits = detection_threshold(kMessageBits, protocol.fpr);
  table.message_hex = message.to_hex();
  const DecoderRunner runner(decoder);

  struct Cell {
    std::size_t view_set;
    const AttackLevels* attack;  // null for the clean row
    int level;
  };
  std::vector<Cell> cells;
  for (std::size_t v = 0; v < protocol.view_sets.size(); ++v) {
    cells.push_back({v, nullptr, 0});
    for (const auto& a : protocol.attacks) {
      for (int level : a.levels) cells.push_back({v, &a, level});
    }
  }

  // Renders and quality metrics once per view set.
  struct ViewData {
    std::vector<ImageBuffer> watermarked;
    double psnr = 0.0, ssim = 0.0, mse = 0.0;
    std::string error;
  };
  std::vector<ViewData> data(protocol.view_sets.size());
  parallel_for(protocol.view_sets.size(), [&](std::size_t v) {
    auto& d = data[v];
    const auto& cams = protocol.view_sets[v].cameras;
    try {
      require(!cams.empty(), ErrorCode::kInvalidArgument, "view set '" + protocol.view_sets[v].name + "' is empty");
      for (const auto& cam : cams) {
        d.watermarked.push_back(render(scene_wm, cam, protocol.raster));
        const ImageBuffer ref = render(scene_ref, cam, protocol.raster);
        d.psnr += psnr(d.watermarked.back(), ref);
        d.ssim += ssim(d.watermarked.back(), ref);
        d.mse += mse(d.watermarked.back(), ref);
      }
      const double n = static_cast<double>(cams.size());
      d.psnr /= n;
      d.ssim /= n;
      d.mse /= n;
    } catch (const std::exception& e) {
      d.error = e.what();
    }
  });

  table.rows.resize(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    const Cell& cell = cells[i];
    const ViewSet& vs = protocol.view_sets[cell.view_set];
    const ViewData& d = data[cell.view_set];
    ReportRow& row = table.rows[i];
    row.view_set = vs.name;
    row.attack = cell.attack ? std::string(attack_name(cell.attack->kind)) : "none";
    row.level = cell.level;
    row.psnr = d.psnr;
    row.ssim = d.ssim;
    row.mse = d.mse;
    if (!d.error.empty()) {
      row.error = d.error;
      return;
    }
    try {
      std::vector<DetectionStats> stats;
      const int trials = cell.attack ? protocol.trials_per_cell : 1;
      for (std::size_t view = 0; view < d.watermarked.size(); ++view) {
        for (int t = 0; t < trials; ++t) {
          ImageBuffer img = d.watermarked[view];
          if (cell.attack) {
            AttackSpec spec;
            spec.kind = cell.attack->kind;
            spec.level = cell.level;
            spec.seed = trial_seed(protocol.seed, vs.name, spec.kind, spec.level, view, t);
            img = apply(spec, img);
          }
          stats.push_back(detect(decode_bits(runner.logits(img)), message, table.threshold_bits));
        }
      }
      double acc = 0.0;
      for (const auto& s : stats) acc += s.bit_accuracy;
      row.trials = static_cast<int>(stats.size());
      row.bit_accuracy = acc / static_cast<double>(stats.size());
      row.tpr_at_1pct_fpr = tpr_at_fpr(stats);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  return table;
}

std::string ReportTable::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "# averaging: " << kAveraging << "; threshold_bits: " << threshold_bits << "; message: " << message_hex
      << '\n';
  out << "view_set,attack,level,trials,bit_accuracy,tpr_at_1pct_fpr,psnr,ssim,mse,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    for (char& c : err) {
      if (c == ',' || c == '\n' || c == '"') c = ' ';
    }
    out << r.view_set << ',' << r.attack << ',' << r.level << ',' << r.trials << ',' << r.bit_accuracy << ','
        << r.tpr_at_1pct_fpr << ',' << r.psnr << ',' << r.ssim << ',' << r.mse << ',' << err << '\n';
  }
  return out.str();
}

std::string ReportTable::to_json() const {
  nlohmann::ordered_json j;
  j["averaging"] = kAveraging;
  j["threshold_bits"] = threshold_bits;
  j["message"] = message_hex;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"view_set", r.view_set},
                   {"attack", r.attack},
                   {"level", r.level},
                   {"trials", r.trials},
                   {"bit_accuracy", r.bit_accuracy},
                   {"tpr_at_1pct_fpr", r.tpr_at_1pct_fpr},
                   {"psnr", r.psnr},
                   {"ssim", r.ssim},
                   {"mse", r.mse},
                   {"error", r.error}});
  }
  j["rows"] = arr;
  return j.dump(2) + "\n";
}

}  // namespace gswm
