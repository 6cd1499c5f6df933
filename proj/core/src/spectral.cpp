#include "gswm/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include "json.hpp"
#include <sstream>

#include "gswm/error.hpp"
#include "gswm/metrics.hpp"

namespace gswm {

namespace {

// FFTW planning is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

double ratio(double edited, double original) {
  if (original > 0.0) return edited / original;
  return edited > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
}

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

}  // namespace

void BandSpec::validate() const {
  require(low_cut > 0.0 && low_cut < high_cut && high_cut <= 1.0, ErrorCode::kInvalidArgument,
          "band cuts must satisfy 0 < low_cut < high_cut <= 1");
}

Band band_of(double radius, const BandSpec& spec) {
  if (radius < spec.low_cut) return Band::kLow;
  if (radius < spec.high_cut) return Band::kMid;
  return Band::kHigh;
}

double bin_radius(int u, int v, int h, int w) {
  const double ku = u <= h / 2 ? u : u - h;
  const double kv = v <= w / 2 ? v : v - w;
  const double half_diag = 0.5 * std::sqrt(static_cast<double>(h) * h + static_cast<double>(w) * w);
  return std::sqrt(ku * ku + kv * kv) / half_diag;
}

std::vector<double> luminance(const ImageBuffer& image) {
  std::vector<double> y(static_cast<std::size_t>(image.width()) * image.height());
  for (int j = 0; j < image.height(); ++j) {
    for (int i = 0; i < image.width(); ++i) {
      y[static_cast<std::size_t>(j) * image.width() + i] =
          0.299 * image.at(i, j, 0) + 0.587 * image.at(i, j, 1) + 0.114 * image.at(i, j, 2);
    }
  }
  return y;
}

BandEnergies band_energy(const ImageBuffer& image, const BandSpec& spec) {
  spec.validate();
  require(!image.empty(), ErrorCode::kInvalidArgument, "band_energy of an empty image");
  const int w = image.width();
  const int h = image.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const auto y = luminance(image);
  BandEnergies e;
  double mean = 0.0;
  for (double v : y) {
    mean += v;
    e.spatial += v * v;
  }
  mean /= static_cast<double>(n);
  e.dc = static_cast<double>(n) * mean * mean;

  fftw_complex* buf = fftw_alloc_complex(n);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_2d(h, w, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < n; ++i) {
    buf[i][0] = y[i] - mean;
    buf[i][1] = 0.0;
  }
  fftw_execute(plan);
  for (int u = 0; u < h; ++u) {
    for (int v = 0; v < w; ++v) {
      const auto& c = buf[static_cast<std::size_t>(u) * w + v];
      const double p = (c[0] * c[0] + c[1] * c[1]) / static_cast<double>(n);
      switch (band_of(bin_radius(u, v, h, w), spec)) {
        case Band::kLow: e.low += p; break;
        case Band::kMid: e.mid += p; break;
        case Band::kHigh: e.high += p; break;
      }
    }
  }
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return e;
}

EnergyReport energy_retention(const ImageBuffer& original, const ImageBuffer& edited, const BandSpec& spec) {
  require_same_shape(original, edited, "energy_retention");
  EnergyReport r;
  r.original = band_energy(original, spec);
  r.edited = band_energy(edited, spec);
  r.low_retention = ratio(r.edited.low, r.original.low);
  r.mid_retention = ratio(r.edited.mid, r.original.mid);
  r.high_retention = ratio(r.edited.high, r.original.high);
  r.ssim = ssim(original, edited);
  r.mse = mse(original, edited);
  return r;
}

std::vector<EnergyReport> fingerprint_report(const ImageBuffer& original,
                                             const std::vector<std::pair<std::string, ImageBuffer>>& edits,
                                             const BandSpec& spec) {
  std::vector<EnergyReport> rows;
  rows.reserve(edits.size());
  for (const auto& [label, img] : edits) {
    rows.push_back(energy_retention(original, img, spec));
    rows.back().label = label;
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const EnergyReport& a, const EnergyReport& b) { return a.high_retention < b.high_retention; });
  return rows;
}

std::string fingerprint_csv(const std::vector<EnergyReport>& rows) {
  std::ostringstream out;
  out << "attack,low_retention,mid_retention,high_retention,ssim,mse\n";
  for (const auto& r : rows) {
    out << r.label << ',' << format_real(r.low_retention) << ',' << format_real(r.mid_retention) << ','
        << format_real(r.high_retention) << ',' << format_real(r.ssim) << ',' << format_real(r.mse) << '\n';
  }
  return out.str();
}

std::string fingerprint_json(const std::vector<EnergyReport>& rows) {
  // Infinite retention is written as the string "inf".
  auto real = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return format_real(v);
    return v;
  };
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"attack", r.label},
                   {"low_retention", real(r.low_retention)},
                   {"mid_retention", real(r.mid_retention)},
                   {"high_retention", real(r.high_retention)},
                   {"ssim", r.ssim},
                   {"mse", r.mse}});
  }
  return arr.dump(2) + "\n";
}

}  // namespace gswm
