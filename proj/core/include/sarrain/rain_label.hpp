#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <utility>

#include "sarrain/raster.hpp"

namespace sarrain {

/// Z = a * R^b with Z in mm^6/m^3 and R in mm/h (NEXRAD convective default).
struct ZrParams {
  double a = 300.0;
  double b = 1.4;
};

inline constexpr std::array<double, 3> kClassRainRatesMmh = {1.0, 3.0, 10.0};
inline constexpr std::array<double, 3> kClassThresholdsDbz = {24.7, 31.5, 38.8};

/// 10 log10(a r^b); r == 0 gives -infinity (rain-free).
double dbz_from_rainrate(double rain_mmh, const ZrParams& zr = {});
double rainrate_from_dbz(double dbz, const ZrParams& zr = {});

/// Nested masks for rain >= 1, >= 3, >= 10 mm/h. `valid` is 0 where the
/// reflectivity was nodata; those pixels are 0 in every class mask.
struct ClassMasks {
  Grid m1;
  Grid m3;
  Grid m10;
  Grid valid;
  std::array<double, 3> thresholds_dbz = kClassThresholdsDbz;

  const Grid& channel(std::size_t i) const;
  Grid& channel(std::size_t i);
  /// 0 rain-free, 1..3 the highest class reached.
  Grid labels() const;
  bool nested() const;
};

ClassMasks class_masks(const Grid& reflectivity_dbz,
                       const std::array<double, 3>& thresholds_dbz = kClassThresholdsDbz);

/// Masks persist as "<stem>.m1.sgrd", "<stem>.m3.sgrd", "<stem>.m10.sgrd"
/// plus "<stem>.valid.sgrd".
void write_class_masks(const ClassMasks& masks, const std::filesystem::path& stem);
ClassMasks read_class_masks(const std::filesystem::path& stem);

/// Displacement of the radar raster relative to the SAR scene:
/// radar(r + d_row, c + d_col) lines up with sar(r, c).
struct RegistrationOffset {
  int d_row = 0;
  int d_col = 0;
  double score = 0.0;

  RegistrationOffset negated() const { return {-d_row, -d_col, score}; }
  bool same_shift(const RegistrationOffset& o) const {
    return d_row == o.d_row && d_col == o.d_col;
  }
};

inline constexpr int kDefaultSearchRadiusPx = 32;

/// Integer translation maximizing the normalized cross-correlation between
/// a SAR heterogeneity map and the radar mask over a square search window.
/// Ties go to the smallest |d_row|+|d_col|, then d_row, then d_col.
RegistrationOffset register_translation(const Grid& sar_feature, const Grid& radar_mask,
                                        int search_radius_px = kDefaultSearchRadiusPx);

/// Registration of a continuous SAR feature against a 0/1 radar mask. The
/// feature is binarized so that its rain fraction equals the mask's, then
/// re-binarized on the overlap at each new shift until the shift settles.
RegistrationOffset register_coverage_matched(const Grid& sar_feature, const Grid& radar_mask,
                                             int search_radius_px = kDefaultSearchRadiusPx,
                                             int max_rounds = 4);

/// out(r, c) = g(r + d_row, c + d_col); cells shifted in from outside
/// become nodata.
Grid apply_offset(const Grid& grid, const RegistrationOffset& offset);

/// Manual registration overrides: CSV "swath,patch,d_row,d_col".
using OffsetOverrides = std::map<std::pair<std::string, std::string>, RegistrationOffset>;
OffsetOverrides read_offset_overrides(const std::filesystem::path& path);

}  // namespace sarrain
