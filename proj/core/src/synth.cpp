#include "sarrain/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sarrain/error.hpp"
#include "sarrain/parallel.hpp"

namespace sarrain {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GeoPoint, lat, lon)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SceneConfig, seed, size_px, pixel_spacing_m, origin,
                                                timestamp, wind_mps, wind_ramp_mps,
                                                wind_direction_deg, n_cells, cell_rate_min_mmh,
                                                cell_rate_max_mmh, cell_radius_min_px,
                                                cell_radius_max_px, bright_gain,
                                                bright_saturation_mmh, dark_ring, dark_ring_factor,
                                                wind_fade, wind_fade_start_mps, wind_fade_end_mps,
                                                speckle_looks, coast_fraction, land_brightness,
                                                incidence_near_deg, incidence_far_deg, time_delta_s)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExtractionRules, tile_px, stride_px,
                                                max_time_delta_s, max_land_fraction, min_max_dbz)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CorpusConfig, scene, n_swaths, cells_min,
                                                cells_max, wind_min_mps, wind_max_mps,
                                                max_abs_time_delta_s, coast_probability,
                                                max_shift_px, rules)

namespace {

template <typename T>
T parse_config(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

}  // namespace

void SceneConfig::validate() const {
  require(size_px >= 8, "scene size must be at least 8 px");
  require(pixel_spacing_m > 0.0, "pixel spacing must be positive");
  require(wind_mps >= 0.0 && wind_mps - std::abs(wind_ramp_mps) / 2 >= 0.0,
          "scene wind must stay non-negative");
  require(cell_rate_min_mmh > 0.0 && cell_rate_min_mmh <= cell_rate_max_mmh,
          "cell rate range must be positive and ordered");
  require(cell_radius_min_px > 0.0 && cell_radius_min_px <= cell_radius_max_px,
          "cell radius range must be positive and ordered");
  require(bright_gain >= 0.0 && bright_saturation_mmh > 0.0, "invalid contrast model");
  require(dark_ring_factor > 0.0 && dark_ring_factor <= 1.0, "dark ring factor must be in (0, 1]");
  require(wind_fade_start_mps < wind_fade_end_mps, "wind fade range must be ordered");
  require(coast_fraction >= 0.0 && coast_fraction < 1.0, "coast fraction must be in [0, 1)");
  require(land_brightness > 0.0, "land brightness must be positive");
  require(incidence_near_deg >= kGmfMinIncidenceDeg && incidence_far_deg <= kGmfMaxIncidenceDeg,
          "incidence range outside the GMF domain");
}

std::string to_json(const SceneConfig& cfg) { return nlohmann::json(cfg).dump(2); }

SceneConfig scene_config_from_json(std::string_view json) {
  auto cfg = parse_config<SceneConfig>(json, "scene config");
  cfg.validate();
  return cfg;
}

SceneConfig load_scene_config(const std::filesystem::path& path) {
  try {
    return scene_config_from_json(slurp(path));
  } catch (const FormatError& e) {
    throw FormatError(e.what(), path.string());
  }
}

double gamma_unit_mean(CounterRng& rng, double shape) {
  // Marsaglia-Tsang; shape >= 1 here since looks are whole numbers
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      const double u1 = 1.0 - rng.uniform();
      const double u2 = rng.uniform();
      x = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / shape;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / shape;
  }
}

Scene gen_scene(const SceneConfig& cfg, const GmfSpec& gmf) {
  cfg.validate();
  const std::size_t n = cfg.size_px;
  const GridGeometry geom{n, n, cfg.pixel_spacing_m, cfg.origin};

  Scene scene;
  CounterRng cell_rng(derive_seed(cfg.seed, 1));
  for (std::size_t k = 0; k < cfg.n_cells; ++k) {
    RainCell cell;
    cell.row = cell_rng.uniform() * static_cast<double>(n);
    cell.col = lerp(cfg.coast_fraction * static_cast<double>(n), static_cast<double>(n),
                    cell_rng.uniform());
    cell.peak_mmh = lerp(cfg.cell_rate_min_mmh, cfg.cell_rate_max_mmh, cell_rng.uniform());
    cell.radius_px = lerp(cfg.cell_radius_min_px, cfg.cell_radius_max_px, cell_rng.uniform());
    scene.cells.push_back(cell);
  }

  scene.incidence_deg.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    scene.incidence_deg[c] = lerp(cfg.incidence_near_deg, cfg.incidence_far_deg,
                                  n > 1 ? static_cast<double>(c) / static_cast<double>(n - 1) : 0.0);
  }

  scene.rain_mmh = Grid(geom, DType::Float32, 0.0f, Grid::kDefaultNodata, cfg.timestamp);
  scene.wind_mps = Grid(geom, DType::Float32, 0.0f, Grid::kDefaultNodata, cfg.timestamp);
  scene.reflectivity = Grid(geom, DType::Float32, 0.0f, Grid::kDefaultNodata, cfg.timestamp);
  scene.sigma0 = Grid(geom, DType::Float32, 0.0f, Grid::kDefaultNodata, cfg.timestamp);
  scene.land = Grid::mask(geom);
  scene.land.set_timestamp(cfg.timestamp);

  const auto land_cols = static_cast<std::size_t>(std::floor(cfg.coast_fraction * static_cast<double>(n)));
  std::vector<double> rate(n * n, 0.0);
  std::vector<double> ring(n * n, 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      double sum = 0.0;
      double ring_factor = 1.0;
      for (const auto& cell : scene.cells) {
        const double dr = static_cast<double>(r) - cell.row;
        const double dc = static_cast<double>(c) - cell.col;
        const double d2 = dr * dr + dc * dc;
        const double s2 = cell.radius_px * cell.radius_px;
        sum += cell.peak_mmh * std::exp(-0.5 * d2 / s2);
        if (cfg.dark_ring && cell.peak_mmh >= cfg.bright_saturation_mmh) {
          const double u = (std::sqrt(d2) - 2.5 * cell.radius_px) / (0.6 * cell.radius_px);
          ring_factor *= 1.0 - (1.0 - cfg.dark_ring_factor) * std::exp(-0.5 * u * u);
        }
      }
      rate[r * n + c] = sum;
      ring[r * n + c] = ring_factor;
    }
  }

  CounterRng speckle_rng(derive_seed(cfg.seed, 2));
  const double ramp_den = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double wind = cfg.wind_mps + cfg.wind_ramp_mps * (static_cast<double>(r) / ramp_den - 0.5);
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t i = r * n + c;
      const double rr = rate[i];
      const bool is_land = c < land_cols;
      scene.wind_mps.values()[i] = static_cast<float>(wind);
      scene.rain_mmh.values()[i] = static_cast<float>(rr);
      const double dbz = rr > 0.0 ? dbz_from_rainrate(rr) : kReflectivityFloorDbz;
      scene.reflectivity.values()[i] = static_cast<float>(std::max(dbz, kReflectivityFloorDbz));
      scene.land.values()[i] = is_land ? 1.0f : 0.0f;

      double s0;
      if (is_land) {
        s0 = cfg.land_brightness *
             gmf_eval(gmf, scene.incidence_deg[c], gmf.reference_wind_mps, gmf.reference_direction_deg);
      } else {
        double amplitude = cfg.bright_gain * std::min(rr / cfg.bright_saturation_mmh, 1.0);
        double ring_factor = ring[i];
        if (cfg.wind_fade) {
          const double fade = std::clamp((cfg.wind_fade_end_mps - wind) /
                                             (cfg.wind_fade_end_mps - cfg.wind_fade_start_mps),
                                         0.0, 1.0);
          amplitude *= fade;
          ring_factor = 1.0 - (1.0 - ring_factor) * fade;
        }
        s0 = gmf_eval(gmf, scene.incidence_deg[c], wind, cfg.wind_direction_deg) *
             (1.0 + amplitude) * ring_factor;
      }
      if (cfg.speckle_looks > 0) {
        s0 *= gamma_unit_mean(speckle_rng, static_cast<double>(cfg.speckle_looks));
      }
      scene.sigma0.values()[i] = static_cast<float>(s0);
    }
  }

  scene.truth = class_masks(scene.reflectivity, kClassThresholdsDbz);
  for (std::size_t i = 0; i < n * n; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      scene.truth.channel(k).values()[i] = rate[i] >= kClassRainRatesMmh[k] ? 1.0f : 0.0f;
    }
    scene.truth.valid.values()[i] = scene.land.values()[i] == 1.0f ? 0.0f : 1.0f;
  }
  return scene;
}

SwathLayers swath_layers(const Scene& scene, const SceneConfig& cfg, const GmfSpec& gmf,
                         std::string swath_id) {
  SwathLayers layers;
  layers.swath_id = std::move(swath_id);
  layers.sigma0_norm = incidence_normalize({scene.sigma0, scene.incidence_deg}, gmf);
  layers.reflectivity = scene.reflectivity;
  layers.wind_mps = scene.wind_mps;
  layers.land = scene.land;
  layers.incidence_deg = scene.incidence_deg;
  layers.time_delta_s = cfg.time_delta_s;
  return layers;
}

// ---- corpus -----------------------------------------------------------------

void CorpusConfig::validate() const {
  scene.validate();
  require(n_swaths >= 3, "a corpus needs at least 3 swaths");
  require(cells_min <= cells_max, "cell count range must be ordered");
  require(wind_min_mps >= 0.0 && wind_min_mps <= wind_max_mps, "wind range must be ordered");
  require(coast_probability >= 0.0 && coast_probability <= 1.0, "coast probability must be in [0, 1]");
  require(max_shift_px >= 0, "shift bound must be non-negative");
  require(rules.tile_px > 0 && rules.tile_px <= scene.size_px, "tile size must fit the scene");
}

std::string to_json(const CorpusConfig& cfg) { return nlohmann::json(cfg).dump(2); }

CorpusConfig corpus_config_from_json(std::string_view json) {
  auto cfg = parse_config<CorpusConfig>(json, "corpus config");
  cfg.validate();
  return cfg;
}

std::string corpus_swath_id(std::size_t swath_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "iw%03zu", swath_index);
  return buf;
}

SceneConfig corpus_scene(const CorpusConfig& cfg, std::size_t swath_index) {
  SceneConfig s = cfg.scene;
  s.seed = derive_seed(cfg.scene.seed, 1000 + swath_index);
  CounterRng rng(derive_seed(s.seed, 7));
  s.n_cells = cfg.cells_min + static_cast<std::size_t>(rng.below(cfg.cells_max - cfg.cells_min + 1));
  s.wind_mps = std::max(lerp(cfg.wind_min_mps, cfg.wind_max_mps, rng.uniform()),
                        std::abs(s.wind_ramp_mps) / 2);
  s.time_delta_s = std::round(lerp(-cfg.max_abs_time_delta_s, cfg.max_abs_time_delta_s, rng.uniform()));
  const bool coast = rng.uniform() < cfg.coast_probability;
  s.coast_fraction = coast ? lerp(0.05, 0.3, rng.uniform()) : 0.0;
  s.timestamp = cfg.scene.timestamp + static_cast<std::int64_t>(swath_index) * 86400;
  return s;
}

namespace {

struct SwathOutput {
  std::vector<ManifestRow> rows;
  std::vector<std::array<int, 2>> shifts;
  SwathHistogram histogram;
  std::size_t rejected = 0;
};

}  // namespace

CorpusSummary gen_corpus(const CorpusConfig& cfg, const std::filesystem::path& root,
                         const GmfSpec& gmf) {
  cfg.validate();
  std::filesystem::create_directories(root);
  std::vector<SwathOutput> outputs(cfg.n_swaths);

  parallel_for(cfg.n_swaths, [&](std::size_t s) {
    const auto scfg = corpus_scene(cfg, s);
    const auto id = corpus_swath_id(s);
    const auto scene = gen_scene(scfg, gmf);
    const auto layers = swath_layers(scene, scfg, gmf, id);
    auto extracted = extract_patches(layers, cfg.rules);
    auto& out = outputs[s];
    out.histogram.swath_id = id;
    out.rejected = extracted.rejected_land + extracted.rejected_reflectivity;
    CounterRng shift_rng(derive_seed(scfg.seed, 9));
    const std::size_t t = cfg.rules.tile_px;
    for (auto& p : extracted.patches) {
      const auto span = static_cast<std::uint64_t>(2 * cfg.max_shift_px + 1);
      const int dr = static_cast<int>(shift_rng.below(span)) - cfg.max_shift_px;
      const int dc = static_cast<int>(shift_rng.below(span)) - cfg.max_shift_px;
      if (dr != 0 || dc != 0) {
        // radar displaced so that radar(r + dr, c + dc) lines up with sar(r, c)
        p.reflectivity = crop(apply_offset(scene.reflectivity, {-dr, -dc, 0.0}), p.row_offset,
                              p.col_offset, t, t);
      }
      LabeledPatch item{p, {}};
      item.masks.m1 = crop(scene.truth.m1, p.row_offset, p.col_offset, t, t);
      item.masks.m3 = crop(scene.truth.m3, p.row_offset, p.col_offset, t, t);
      item.masks.m10 = crop(scene.truth.m10, p.row_offset, p.col_offset, t, t);
      item.masks.valid = crop(scene.truth.valid, p.row_offset, p.col_offset, t, t);
      write_labeled_patch(root, item);
      accumulate_histogram(out.histogram, crop(scene.reflectivity, p.row_offset, p.col_offset, t, t),
                           p.wind_mps, p.land);
      out.rows.push_back(manifest_row(p));
      out.shifts.push_back({dr, dc});
    }
  });

  CorpusSummary summary;
  summary.swaths = cfg.n_swaths;
  std::vector<ManifestRow> rows;
  std::ofstream shifts(root / "injected_shifts.csv", std::ios::trunc);
  std::ofstream swaths(root / "swaths.csv", std::ios::trunc);
  if (!shifts || !swaths) throw IoError("cannot write corpus tables", root.string());
  shifts << "swath,patch,d_row,d_col\n";
  swaths << "swath,wind_mps,time_delta_s,coast_fraction,n_cells,seed\n";
  for (std::size_t s = 0; s < cfg.n_swaths; ++s) {
    const auto& out = outputs[s];
    for (std::size_t k = 0; k < out.rows.size(); ++k) {
      shifts << out.rows[k].swath << ',' << out.rows[k].patch << ',' << out.shifts[k][0] << ','
             << out.shifts[k][1] << '\n';
    }
    rows.insert(rows.end(), out.rows.begin(), out.rows.end());
    const auto scfg = corpus_scene(cfg, s);
    swaths << corpus_swath_id(s) << ',' << scfg.wind_mps << ',' << scfg.time_delta_s << ','
           << scfg.coast_fraction << ',' << scfg.n_cells << ',' << scfg.seed << '\n';
    summary.patches += out.rows.size();
    summary.rejected += out.rejected;
    summary.histograms.push_back(out.histogram);
  }
  write_manifest(rows, root / "manifest.csv");
  std::ofstream(root / "corpus.json", std::ios::trunc) << to_json(cfg) << '\n';
  return summary;
}

}  // namespace sarrain
