#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gswm/image.hpp"

namespace gswm {

/// Ring bands over the centered spectrum. Radius is the distance from the
/// zero-frequency bin divided by half the image diagonal (in bins).
struct BandSpec {
  double low_cut = 1.0 / 6.0;
  double high_cut = 0.5;

  void validate() const;
};

enum class Band { kLow = 0, kMid = 1, kHigh = 2 };

Band band_of(double radius, const BandSpec& spec);

/// Normalized radius of DFT bin (u, v) of an h x w spectrum (unshifted indices).
double bin_radius(int u, int v, int h, int w);

struct BandEnergies {
  double low = 0.0;
  double mid = 0.0;
  double high = 0.0;
  double dc = 0.0;       ///< N * mean^2, removed before the transform
  double spatial = 0.0;  ///< sum of squared luminance values

  double band(Band b) const { return b == Band::kLow ? low : b == Band::kMid ? mid : high; }
};

/// Luminance 0.299 R + 0.587 G + 0.114 B, mean removed, 2D DFT; band energy
/// is sum |F|^2 / N over the band, so low + mid + high + dc == spatial.
BandEnergies band_energy(const ImageBuffer& image, const BandSpec& spec = {});

/// Luminance plane, row-major.
std::vector<double> luminance(const ImageBuffer& image);

struct EnergyReport {
  std::string label;
  BandEnergies original;
  BandEnergies edited;
  double low_retention = 0.0;
  double mid_retention = 0.0;
  double high_retention = 0.0;
  double ssim = 0.0;
  double mse = 0.0;  ///< 0-255 scale
};

/// edited / original per band. A band with no original energy retains 1 when
/// the edit has none either, otherwise +infinity.
EnergyReport energy_retention(const ImageBuffer& original, const ImageBuffer& edited,
                              const BandSpec& spec = {});

/// One row per labelled edit, sorted by high-band retention ascending (stable).
std::vector<EnergyReport> fingerprint_report(const ImageBuffer& original,
                                             const std::vector<std::pair<std::string, ImageBuffer>>& edits,
                                             const BandSpec& spec = {});

/// Columns: attack,low_retention,mid_retention,high_retention,ssim,mse.
std::string fingerprint_csv(const std::vector<EnergyReport>& rows);
std::string fingerprint_json(const std::vector<EnergyReport>& rows);

}  // namespace gswm
