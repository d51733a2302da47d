#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sarrain/dataset.hpp"
#include "sarrain/gmf.hpp"
#include "sarrain/rain_label.hpp"
#include "sarrain/raster.hpp"
#include "sarrain/rng.hpp"

namespace sarrain {

struct SceneConfig {
  std::uint64_t seed = 1;
  std::size_t size_px = 256;
  double pixel_spacing_m = 400.0;
  GeoPoint origin{27.0, -80.0};
  std::int64_t timestamp = 1'525'000'000;

  // wind: background plus a linear ramp from the top row to the bottom row
  double wind_mps = 8.0;
  double wind_ramp_mps = 2.0;
  double wind_direction_deg = 45.0;

  std::size_t n_cells = 6;
  double cell_rate_min_mmh = 2.0;
  double cell_rate_max_mmh = 40.0;
  double cell_radius_min_px = 3.0;
  double cell_radius_max_px = 8.0;

  // contrast(R) = 1 + bright_gain * min(R / bright_saturation_mmh, 1)
  double bright_gain = 0.5;
  double bright_saturation_mmh = 10.0;
  bool dark_ring = false;
  double dark_ring_factor = 0.8;
  // optional linear fade of the rain contrast between two wind speeds
  bool wind_fade = false;
  double wind_fade_start_mps = 6.0;
  double wind_fade_end_mps = 16.0;

  std::size_t speckle_looks = 16;  // 0 = noise-free
  double coast_fraction = 0.0;     // land half-plane on the left columns
  double land_brightness = 3.0;    // land sigma0 relative to the reference GMF

  double incidence_near_deg = 30.0;
  double incidence_far_deg = 45.0;
  double time_delta_s = 0.0;

  void validate() const;
};

std::string to_json(const SceneConfig& cfg);
SceneConfig scene_config_from_json(std::string_view json);
SceneConfig load_scene_config(const std::filesystem::path& path);

struct RainCell {
  double row = 0.0;
  double col = 0.0;
  double peak_mmh = 0.0;
  double radius_px = 0.0;  // Gaussian sigma
};

struct Scene {
  Grid sigma0;  // linear, before incidence normalization
  std::vector<double> incidence_deg;
  Grid reflectivity;  // dBZ, floored at kReflectivityFloorDbz
  Grid wind_mps;
  Grid land;
  Grid rain_mmh;
  ClassMasks truth;  // from the exact rate field; valid excludes land
  std::vector<RainCell> cells;
};

inline constexpr double kReflectivityFloorDbz = -30.0;

Scene gen_scene(const SceneConfig& cfg, const GmfSpec& gmf = cmod5n());

/// Scene layers ready for extraction (incidence-normalized sigma0).
SwathLayers swath_layers(const Scene& scene, const SceneConfig& cfg, const GmfSpec& gmf,
                         std::string swath_id);

/// Unit-mean gamma variate with the given shape, drawn from a counter stream.
double gamma_unit_mean(CounterRng& rng, double shape);

struct CorpusConfig {
  SceneConfig scene;
  std::size_t n_swaths = 12;
  std::size_t cells_min = 2;
  std::size_t cells_max = 10;
  double wind_min_mps = 2.0;
  double wind_max_mps = 14.0;
  double max_abs_time_delta_s = 900.0;
  double coast_probability = 0.3;
  int max_shift_px = 0;  // injected registration shift bound per patch
  ExtractionRules rules{128, 0, 1200.0, 0.5, 25.0};

  void validate() const;
};

std::string to_json(const CorpusConfig& cfg);
CorpusConfig corpus_config_from_json(std::string_view json);

/// Per-swath scene parameters drawn from the corpus seed.
SceneConfig corpus_scene(const CorpusConfig& cfg, std::size_t swath_index);
std::string corpus_swath_id(std::size_t swath_index);

struct CorpusSummary {
  std::size_t swaths = 0;
  std::size_t patches = 0;
  std::size_t rejected = 0;
  std::vector<SwathHistogram> histograms;
};

/// Writes the dataset layout under `root`: manifest.csv, per-patch layer
/// and truth-mask files, injected_shifts.csv ("swath,patch,d_row,d_col",
/// the offset registration should recover) and swaths.csv.
CorpusSummary gen_corpus(const CorpusConfig& cfg, const std::filesystem::path& root,
                         const GmfSpec& gmf = cmod5n());

}  // namespace sarrain
