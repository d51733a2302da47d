#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sarrain/rain_label.hpp"
#include "sarrain/raster.hpp"

namespace sarrain {

/// Co-projected layers of one SAR acquisition and its radar colocation.
struct SwathLayers {
  std::string swath_id;
  Grid sigma0_norm;
  Grid reflectivity;  // dBZ
  Grid wind_mps;
  Grid land;          // mask, 1 = land
  std::vector<double> incidence_deg;
  double time_delta_s = 0.0;  // SAR minus radar scan time
};

struct ExtractionRules {
  std::size_t tile_px = 256;
  std::size_t stride_px = 0;  // 0 = half the tile width
  double max_time_delta_s = 1200.0;
  double max_land_fraction = 0.5;
  double min_max_dbz = 25.0;

  std::size_t stride() const { return stride_px == 0 ? tile_px / 2 : stride_px; }
};

struct Patch {
  std::string swath_id;
  std::string patch_id;
  std::size_t row_offset = 0;
  std::size_t col_offset = 0;
  Grid sigma0_norm;
  Grid reflectivity;
  Grid wind_mps;
  Grid land;
  std::vector<double> incidence_deg;
  RegistrationOffset offset_applied;
  double time_delta_s = 0.0;

  double land_fraction() const;
  /// Maximum valid reflectivity; -inf when every cell is nodata.
  double max_dbz() const;
  /// Throws DataError naming the patch if a layer or rule invariant fails.
  void check(const ExtractionRules& rules) const;
};

struct LabeledPatch {
  Patch patch;
  ClassMasks masks;
};

std::string patch_id_for(std::size_t row_offset, std::size_t col_offset);

struct ExtractionResult {
  std::vector<Patch> patches;
  std::size_t tiles = 0;
  std::size_t rejected_land = 0;
  std::size_t rejected_reflectivity = 0;
  bool rejected_time_window = false;
};

/// Tiles a swath at the rule stride and keeps patches that pass the land
/// and reflectivity rules. A swath outside the colocation window yields no
/// patches.
ExtractionResult extract_patches(const SwathLayers& swath, const ExtractionRules& rules);

// ---- dataset directory ------------------------------------------------------

enum class Subset { Unassigned, Train, Validation, Test };
std::string_view to_string(Subset s);
Subset subset_from_string(std::string_view s);

struct ManifestRow {
  std::string swath;
  std::string patch;
  Subset subset = Subset::Unassigned;
  double time_delta_s = 0.0;
  int d_row = 0;
  int d_col = 0;
  double land_frac = 0.0;
  double max_dbz = 0.0;
};

inline constexpr std::string_view kManifestHeader =
    "swath,patch,subset,time_delta_s,d_row,d_col,land_frac,max_dbz";

void write_manifest(std::span<const ManifestRow> rows, const std::filesystem::path& path);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
ManifestRow manifest_row(const Patch& patch, Subset subset = Subset::Unassigned);

/// Layer files: <root>/<swath>/<patch>.{s0,refl,wind,land,inc}.sgrd and the
/// class masks <patch>.{m1,m3,m10,valid}.sgrd. The incidence layer is a
/// 1 x cols grid.
std::filesystem::path patch_stem(const std::filesystem::path& root, std::string_view swath,
                                 std::string_view patch);
void write_patch(const std::filesystem::path& root, const Patch& patch);
void write_labeled_patch(const std::filesystem::path& root, const LabeledPatch& item);
Patch read_patch(const std::filesystem::path& root, const ManifestRow& row);
LabeledPatch read_labeled_patch(const std::filesystem::path& root, const ManifestRow& row);

/// Optional exclusion list, one "swath" or "swath,patch" per line.
struct ExclusionList {
  std::vector<std::string> swaths;
  std::vector<std::pair<std::string, std::string>> patches;
  bool excludes(std::string_view swath, std::string_view patch) const;
};
ExclusionList read_exclusions(const std::filesystem::path& path);

// ---- balanced split ---------------------------------------------------------

inline constexpr std::size_t kReflectivityBins = 4;
inline constexpr std::size_t kWindBins = 5;
inline constexpr std::array<double, kWindBins> kWindBinEdges = {0.0, 4.0, 8.0, 12.0, 16.0};

std::size_t reflectivity_bin(double dbz);
std::size_t wind_bin(double wind_mps);

/// Per-swath pixel counts in the reflectivity classes and wind bins.
struct SwathHistogram {
  std::string swath_id;
  std::array<double, kReflectivityBins> reflectivity{};
  std::array<double, kWindBins> wind{};

  SwathHistogram& operator+=(const SwathHistogram& other);
};

/// Accumulates valid ocean pixels of a patch (land and nodata excluded).
void accumulate_histogram(SwathHistogram& hist, const Grid& reflectivity, const Grid& wind,
                          const Grid& land);

struct SplitFractions {
  double train = 0.795;
  double validation = 0.096;
  double test = 0.109;
};

struct SplitAssignment {
  std::map<std::string, Subset> subset_of;
  std::array<std::size_t, 3> swath_counts{};
  /// share[k][b]: fraction of bin b's pixels that landed in subset k.
  std::array<std::array<double, kReflectivityBins>, 3> reflectivity_share{};
  std::array<std::array<double, kWindBins>, 3> wind_share{};
  double objective = 0.0;
};

/// Swath-level assignment minimizing the summed L1 gap between each
/// subset's per-bin pixel share and its target fraction, with subset swath
/// counts held within one of the target. Greedy seeding plus move/swap
/// refinement over seed-derived orderings; deterministic.
SplitAssignment split_balanced(std::span<const SwathHistogram> swaths,
                               const SplitFractions& fractions, std::uint64_t seed = 0);

// ---- registration statistics ------------------------------------------------

struct OffsetStats {
  double r2_distance = 0.0;
  std::optional<double> r2_direction;  // needs station bearings
  double r2_wind = 0.0;
};

/// Coefficient of determination of a one-regressor least-squares fit.
/// Throws UndefinedMetricError when the regressor has zero variance.
double r_squared(std::span<const double> x, std::span<const double> y);

/// R^2 of |offset| vs station distance, of offset direction vs the radial
/// bearing (compass degrees from the station, when given) and of |offset|
/// vs wind speed.
OffsetStats registration_stats(std::span<const RegistrationOffset> offsets,
                               std::span<const double> distances_km,
                               std::span<const double> winds_mps,
                               std::span<const double> bearings_deg = {});

}  // namespace sarrain
