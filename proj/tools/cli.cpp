#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sarrain/csv.hpp"
#include "sarrain/dataset.hpp"
#include "sarrain/error.hpp"
#include "sarrain/glm.hpp"
#include "sarrain/gmf.hpp"
#include "sarrain/koch.hpp"
#include "sarrain/metrics.hpp"
#include "sarrain/parallel.hpp"
#include "sarrain/rain_label.hpp"
#include "sarrain/raster.hpp"
#include "sarrain/synth.hpp"
#include "sarrain/train.hpp"

namespace sarrain::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct Context {
  std::vector<std::string> args;
  std::ostream& out;
  std::ostream& err;
};

void write_run_manifest(const fs::path& path, const Context& ctx, const std::string& command,
                        const ojson& seeds, const ojson& extra = ojson::object()) {
  std::string joined;
  for (const auto& a : ctx.args) joined += a + '\x1f';
  ojson j;
  j["tool"] = "sarrain";
  j["version"] = SARRAIN_VERSION_STRING;
  j["command"] = command;
  j["args"] = ctx.args;
  j["config_hash"] = hex64(fnv1a(joined));
  j["seeds"] = seeds;
  j["workers"] = worker_count();
  for (const auto& [k, v] : extra.items()) j[k] = v;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write run manifest", path.string());
  f << j.dump(2) << '\n';
}

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not a number list: '" + text + "'");
    }
  }
  return out;
}

// ---- dataset helpers --------------------------------------------------------

std::vector<ManifestRow> rows_in(const std::vector<ManifestRow>& rows, const std::string& subset) {
  if (subset == "all") return rows;
  const Subset want = subset_from_string(subset);
  std::vector<ManifestRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [&](const ManifestRow& r) { return r.subset == want; });
  return out;
}

std::size_t resample_factor(double from_m, double to_m, const std::string& where) {
  const double f = to_m / from_m;
  const double rf = std::round(f);
  if (rf < 1.0 || std::abs(f - rf) > 1e-9) {
    throw DataError("cannot resample " + fmt(from_m, 1) + " m/px data to " + fmt(to_m, 1) +
                        " m/px by an integer factor",
                    where);
  }
  return static_cast<std::size_t>(rf);
}

std::vector<double> resample_columns(const std::vector<double>& v, std::size_t factor) {
  std::vector<double> out;
  for (std::size_t c = 0; c < v.size(); c += factor) {
    const std::size_t end = std::min(v.size(), c + factor);
    double s = 0.0;
    for (std::size_t k = c; k < end; ++k) s += v[k];
    out.push_back(s / static_cast<double>(end - c));
  }
  return out;
}

/// Patch at the requested resolution with masks re-derived from the
/// resampled reflectivity when the spacing changes.
LabeledPatch at_resolution(LabeledPatch item, double resolution_m, const std::string& where) {
  const double spacing = item.patch.sigma0_norm.pixel_spacing_m();
  if (std::abs(spacing - resolution_m) < 1e-9) return item;
  const auto factor = resample_factor(spacing, resolution_m, where);
  auto& p = item.patch;
  p.sigma0_norm = resample(p.sigma0_norm, resolution_m, ResampleMethod::BlockMean);
  p.reflectivity = resample(p.reflectivity, resolution_m, ResampleMethod::BlockMean);
  p.wind_mps = resample(p.wind_mps, resolution_m, ResampleMethod::BlockMean);
  p.land = resample(p.land, resolution_m, ResampleMethod::Nearest);
  p.incidence_deg = resample_columns(p.incidence_deg, factor);
  item.masks = class_masks(p.reflectivity);
  return item;
}

Grid valid_ocean(const ClassMasks& masks, const Grid& land) {
  Grid v = Grid::mask(masks.valid.geometry());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v.values()[i] = masks.valid.values()[i] == 1.0f && land.values()[i] != 1.0f ? 1.0f : 0.0f;
  }
  return v;
}

// ---- synth ------------------------------------------------------------------

struct SynthOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string id = "scene";
};

int cmd_synth(const SynthOptions& o, const Context& ctx) {
  std::ifstream in(o.config);
  if (!in) throw IoError("cannot open config", o.config);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json probe;
  try {
    probe = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config is not JSON: ") + e.what(), o.config);
  }
  const fs::path out = o.out;
  fs::create_directories(out);
  const bool corpus = probe.is_object() && (probe.contains("scene") || probe.contains("n_swaths"));
  try {
    if (corpus) {
      auto cfg = corpus_config_from_json(buf.str());
      if (o.seed) cfg.scene.seed = *o.seed;
      const auto summary = gen_corpus(cfg, out);
      write_run_manifest(out / "run_manifest.json", ctx, "synth", {{"corpus", cfg.scene.seed}},
                         {{"swaths", summary.swaths}, {"patches", summary.patches}});
      ctx.out << "corpus: " << summary.swaths << " swaths, " << summary.patches << " patches, "
              << summary.rejected << " tiles rejected\n";
      return kExitOk;
    }
    auto cfg = scene_config_from_json(buf.str());
    if (o.seed) cfg.seed = *o.seed;
    const auto scene = gen_scene(cfg);
    const auto stem = (out / o.id).string();
    write_grid(scene.sigma0, stem + ".s0.sgrd");
    Grid inc(GridGeometry{1, scene.sigma0.cols(), cfg.pixel_spacing_m, cfg.origin},
             std::vector<float>(scene.incidence_deg.begin(), scene.incidence_deg.end()));
    write_grid(inc, stem + ".inc.sgrd");
    Grid refl = scene.reflectivity;
    refl.set_timestamp(cfg.timestamp - static_cast<std::int64_t>(std::llround(cfg.time_delta_s)));
    write_grid(refl, stem + ".refl.sgrd");
    write_grid(scene.wind_mps, stem + ".wind.sgrd");
    write_grid(scene.land, stem + ".land.sgrd");
    write_grid(scene.rain_mmh, stem + ".rain.sgrd");
    write_class_masks(scene.truth, stem + ".truth");
    write_sidecar(stem + ".s0.sgrd", to_json(cfg));
    write_run_manifest(out / "run_manifest.json", ctx, "synth", {{"scene", cfg.seed}});
    ctx.out << "scene '" << o.id << "': " << cfg.size_px << "x" << cfg.size_px << ", "
            << scene.cells.size() << " rain cells\n";
  } catch (const FormatError& e) {
    throw FormatError(e.what(), o.config);
  }
  return kExitOk;
}

// ---- extract ----------------------------------------------------------------

struct ExtractOptions {
  std::string input;
  std::string out;
  std::string gmf;
  std::size_t tile = 256;
  std::size_t stride = 0;
  double resolution = 0.0;
  std::string exclude;
  double max_time_delta = 1200.0;
  double max_land = 0.5;
  double min_dbz = 25.0;
};

Grid read_layer(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing swath layer", path.string());
  return read_grid(path);
}

int cmd_extract(const ExtractOptions& o, const Context& ctx) {
  const GmfSpec gmf = o.gmf.empty() ? cmod5n() : load_gmf(o.gmf);
  ExtractionRules rules{o.tile, o.stride, o.max_time_delta, o.max_land, o.min_dbz};
  std::optional<ExclusionList> excl;
  if (!o.exclude.empty()) excl = read_exclusions(o.exclude);

  std::vector<std::string> ids;
  if (!fs::is_directory(o.input)) throw IoError("input is not a directory", o.input);
  for (const auto& e : fs::directory_iterator(o.input)) {
    const auto name = e.path().filename().string();
    const std::string suffix = ".s0.sgrd";
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      ids.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw DataError("no '<swath>.s0.sgrd' files found", o.input);

  struct Slot {
    std::vector<ManifestRow> rows;
    ExtractionResult stats;
    std::size_t excluded = 0;
  };
  std::vector<Slot> slots(ids.size());
  const fs::path out = o.out;
  fs::create_directories(out);

  parallel_for(ids.size(), [&](std::size_t k) {
    const auto stem = (fs::path(o.input) / ids[k]).string();
    SwathLayers layers;
    layers.swath_id = ids[k];
    const Grid s0 = read_layer(stem + ".s0.sgrd");
    const Grid inc = read_layer(stem + ".inc.sgrd");
    layers.reflectivity = read_layer(stem + ".refl.sgrd");
    layers.wind_mps = read_layer(stem + ".wind.sgrd");
    layers.land = read_layer(stem + ".land.sgrd");
    if (inc.cols() != s0.cols()) throw DataError("incidence width differs from sigma0", stem + ".inc.sgrd");
    for (const auto* g : {&layers.reflectivity, &layers.wind_mps, &layers.land}) {
      if (!(g->geometry() == s0.geometry())) {
        throw DataError("swath layers are not co-projected", stem);
      }
    }
    Sigma0Grid raw{s0, std::vector<double>(inc.values().begin(), inc.values().end())};
    layers.incidence_deg = raw.incidence_deg;
    layers.sigma0_norm = incidence_normalize(raw, gmf);
    layers.time_delta_s = static_cast<double>(s0.timestamp() - layers.reflectivity.timestamp());
    if (o.resolution > 0.0 && std::abs(o.resolution - s0.pixel_spacing_m()) > 1e-9) {
      const auto factor = resample_factor(s0.pixel_spacing_m(), o.resolution, stem);
      layers.sigma0_norm = resample(layers.sigma0_norm, o.resolution, ResampleMethod::BlockMean);
      layers.reflectivity = resample(layers.reflectivity, o.resolution, ResampleMethod::BlockMean);
      layers.wind_mps = resample(layers.wind_mps, o.resolution, ResampleMethod::BlockMean);
      layers.land = resample(layers.land, o.resolution, ResampleMethod::Nearest);
      layers.incidence_deg = resample_columns(layers.incidence_deg, factor);
    }
    auto& slot = slots[k];
    slot.stats = extract_patches(layers, rules);
    for (const auto& p : slot.stats.patches) {
      if (excl && excl->excludes(p.swath_id, p.patch_id)) {
        ++slot.excluded;
        continue;
      }
      write_labeled_patch(out, {p, class_masks(p.reflectivity)});
      slot.rows.push_back(manifest_row(p));
    }
    slot.stats.patches.clear();
  });

  std::vector<ManifestRow> rows;
  std::size_t tiles = 0, land = 0, refl = 0, window = 0, excluded = 0;
  for (const auto& s : slots) {
    rows.insert(rows.end(), s.rows.begin(), s.rows.end());
    tiles += s.stats.tiles;
    land += s.stats.rejected_land;
    refl += s.stats.rejected_reflectivity;
    window += s.stats.rejected_time_window ? 1 : 0;
    excluded += s.excluded;
  }
  write_manifest(rows, out / "manifest.csv");
  write_run_manifest(out / "run_manifest.json", ctx, "extract", ojson::object(),
                     {{"patches", rows.size()}, {"tiles", tiles}});
  ctx.out << "extracted " << rows.size() << " patches from " << ids.size() << " swaths ("
          << tiles << " tiles; rejected: " << land << " land, " << refl << " reflectivity, "
          << window << " swaths outside the time window, " << excluded << " excluded)\n";
  return kExitOk;
}

// ---- split ------------------------------------------------------------------

struct SplitOptions {
  std::string data;
  std::uint64_t seed = 0;
  double train = 0.795;
  double validation = 0.096;
  double test = 0.109;
};

std::vector<SwathHistogram> dataset_histograms(const fs::path& root,
                                               const std::vector<ManifestRow>& rows) {
  std::vector<SwathHistogram> hists;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    auto [it, fresh] = index.emplace(r.swath, hists.size());
    if (fresh) {
      hists.emplace_back();
      hists.back().swath_id = r.swath;
    }
    const auto p = read_patch(root, r);
    accumulate_histogram(hists[it->second], p.reflectivity, p.wind_mps, p.land);
  }
  return hists;
}

int cmd_split(const SplitOptions& o, const Context& ctx) {
  const fs::path root = o.data;
  auto rows = read_manifest(root / "manifest.csv");
  const auto hists = dataset_histograms(root, rows);
  const auto split = split_balanced(hists, {o.train, o.validation, o.test}, o.seed);
  for (auto& r : rows) r.subset = split.subset_of.at(r.swath);
  write_manifest(rows, root / "manifest.csv");

  std::ofstream rep(root / "split_report.csv", std::ios::trunc);
  if (!rep) throw IoError("cannot write split report", (root / "split_report.csv").string());
  rep << "subset,kind,bin,share,target\n";
  const std::array<double, 3> target = {o.train, o.validation, o.test};
  const std::array<Subset, 3> subsets = {Subset::Train, Subset::Validation, Subset::Test};
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t b = 0; b < kReflectivityBins; ++b) {
      rep << to_string(subsets[k]) << ",reflectivity," << b << ','
          << fmt(split.reflectivity_share[k][b]) << ',' << fmt(target[k]) << '\n';
    }
    for (std::size_t b = 0; b < kWindBins; ++b) {
      rep << to_string(subsets[k]) << ",wind," << b << ',' << fmt(split.wind_share[k][b]) << ','
          << fmt(target[k]) << '\n';
    }
  }
  write_run_manifest(root / "split_manifest.json", ctx, "split", {{"split", o.seed}},
                     {{"objective", split.objective}});
  ctx.out << "split " << hists.size() << " swaths: train " << split.swath_counts[0]
          << ", validation " << split.swath_counts[1] << ", test " << split.swath_counts[2]
          << " (objective " << fmt(split.objective, 4) << ")\n";
  return kExitOk;
}

// ---- register ---------------------------------------------------------------

struct RegisterOptions {
  std::string data;
  int radius = kDefaultSearchRadiusPx;
  std::string overrides;
  std::string stations;
  std::string gmf;
};

int cmd_register(const RegisterOptions& o, const Context& ctx) {
  const fs::path root = o.data;
  auto rows = read_manifest(root / "manifest.csv");
  const GmfSpec gmf = o.gmf.empty() ? cmod5n() : load_gmf(o.gmf);
  OffsetOverrides overrides;
  if (!o.overrides.empty()) overrides = read_offset_overrides(o.overrides);

  struct Slot {
    RegistrationOffset offset;
    std::string status;
    double wind = 0.0;
  };
  std::vector<Slot> slots(rows.size());
  parallel_for(rows.size(), [&](std::size_t k) {
    auto& row = rows[k];
    auto item = read_labeled_patch(root, row);
    auto& p = item.patch;
    auto& slot = slots[k];
    double wsum = 0.0;
    std::size_t wn = 0;
    for (float w : p.wind_mps.values()) {
      if (!p.wind_mps.is_nodata(w)) {
        wsum += w;
        ++wn;
      }
    }
    slot.wind = wn > 0 ? wsum / static_cast<double>(wn) : 0.0;
    if (const auto it = overrides.find({row.swath, row.patch}); it != overrides.end()) {
      slot.offset = it->second;
      slot.status = "override";
    } else {
      Grid feature = wind_residual(p.sigma0_norm, p.incidence_deg, p.wind_mps, gmf);
      Grid radar(p.reflectivity.geometry(), DType::Float32, 0.0f);
      const auto masks = class_masks(p.reflectivity);
      for (std::size_t i = 0; i < feature.size(); ++i) {
        if (p.land.values()[i] == 1.0f) feature.values()[i] = feature.nodata();
        radar.values()[i] = masks.valid.values()[i] == 1.0f ? masks.m1.values()[i] : radar.nodata();
      }
      try {
        slot.offset = register_coverage_matched(feature, radar, o.radius);
        slot.status = "ok";
      } catch (const NoSignalError&) {
        slot.offset = {};
        slot.status = "no-signal";
      }
    }
    if (slot.offset.d_row != 0 || slot.offset.d_col != 0) {
      p.reflectivity = apply_offset(p.reflectivity, slot.offset);
    }
    item.masks = class_masks(p.reflectivity);
    const auto stem = patch_stem(root, row.swath, row.patch).string();
    write_grid(p.reflectivity, stem + ".refl.sgrd");
    write_class_masks(item.masks, stem);
    row.d_row += slot.offset.d_row;
    row.d_col += slot.offset.d_col;
  });
  write_manifest(rows, root / "manifest.csv");

  std::ofstream off(root / "offsets.csv", std::ios::trunc);
  if (!off) throw IoError("cannot write offsets", (root / "offsets.csv").string());
  off << "swath,patch,d_row,d_col,score,status\n";
  std::size_t no_signal = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    off << rows[k].swath << ',' << rows[k].patch << ',' << slots[k].offset.d_row << ','
        << slots[k].offset.d_col << ',' << fmt(slots[k].offset.score, 4) << ','
        << slots[k].status << '\n';
    no_signal += slots[k].status == "no-signal" ? 1 : 0;
  }

  ojson extra = {{"patches", rows.size()}, {"no_signal", no_signal}};
  if (!o.stations.empty()) {
    const auto table = read_csv(o.stations);
    expect_columns(table, {"swath", "patch", "distance_km"}, o.stations);
    const auto is = table.column("swath"), ip = table.column("patch"),
               id = table.column("distance_km");
    std::optional<std::size_t> ib;
    if (std::find(table.header.begin(), table.header.end(), "bearing_deg") != table.header.end()) {
      ib = table.column("bearing_deg");
    }
    std::map<std::pair<std::string, std::string>, std::pair<double, double>> station;
    for (const auto& r : table.rows) {
      station[{r[is], r[ip]}] = {parse_double(r[id], o.stations),
                                 ib ? parse_double(r[*ib], o.stations) : 0.0};
    }
    std::vector<RegistrationOffset> offs;
    std::vector<double> dist, wind, bearing;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto it = station.find({rows[k].swath, rows[k].patch});
      if (it == station.end() || slots[k].status == "no-signal") continue;
      offs.push_back(slots[k].offset);
      dist.push_back(it->second.first);
      bearing.push_back(it->second.second);
      wind.push_back(slots[k].wind);
    }
    const auto stats = registration_stats(offs, dist, wind,
                                          ib ? std::span<const double>(bearing) : std::span<const double>());
    extra["r2_distance"] = stats.r2_distance;
    extra["r2_wind"] = stats.r2_wind;
    if (stats.r2_direction) extra["r2_direction"] = *stats.r2_direction;
    ctx.out << "R^2 offset vs distance " << fmt(stats.r2_distance, 3) << ", vs wind "
            << fmt(stats.r2_wind, 3);
    if (stats.r2_direction) ctx.out << ", direction vs bearing " << fmt(*stats.r2_direction, 3);
    ctx.out << '\n';
  }
  write_run_manifest(root / "register_manifest.json", ctx, "register", ojson::object(), extra);
  ctx.out << "registered " << rows.size() << " patches (" << no_signal << " without signal)\n";
  return kExitOk;
}

// ---- train-koch -------------------------------------------------------------

struct TrainOptions {
  std::string data;
  double resolution = 400.0;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t runs = 5;
  std::size_t epochs = 200;
  double lr = 1e-3;
  std::size_t batch = 32;
};

void check_resolution(double resolution, bool koch) {
  static constexpr std::array<double, 4> kAllowed = {100.0, 200.0, 400.0, 800.0};
  if (std::find(kAllowed.begin(), kAllowed.end(), resolution) == kAllowed.end()) {
    throw UsageError("--resolution must be one of 100, 200, 400, 800 m/px");
  }
  if (koch && resolution < 200.0) {
    throw UsageError("Koch filter models are only used down to 200 m/px (their receptive "
                     "field is too small below that); got " + fmt(resolution, 0) + " m/px");
  }
}

std::vector<TrainSample> load_samples(const fs::path& root, const std::vector<ManifestRow>& rows,
                                      double resolution, const FilterBankSpec& bank) {
  std::vector<TrainSample> samples(rows.size());
  parallel_for(rows.size(), [&](std::size_t k) {
    const auto where = patch_stem(root, rows[k].swath, rows[k].patch).string();
    const auto item = at_resolution(read_labeled_patch(root, rows[k]), resolution, where);
    samples[k] = make_sample(item.patch.sigma0_norm, item.masks, bank, &item.patch.land);
  });
  return samples;
}

fs::path sibling(const fs::path& file, const std::string& suffix) {
  return file.parent_path() / (file.stem().string() + suffix);
}

int cmd_train(const TrainOptions& o, const Context& ctx) {
  check_resolution(o.resolution, true);
  const fs::path root = o.data;
  const auto rows = read_manifest(root / "manifest.csv");
  const auto train_rows = rows_in(rows, "train");
  const auto val_rows = rows_in(rows, "validation");
  if (train_rows.empty()) {
    throw DataError("manifest has no training patches; run 'sarrain split' first",
                    (root / "manifest.csv").string());
  }
  const FilterBankSpec bank;
  const auto train_set = load_samples(root, train_rows, o.resolution, bank);
  const auto val_set = load_samples(root, val_rows, o.resolution, bank);

  TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch;
  cfg.seed = o.seed;
  cfg.runs = o.runs;
  const auto init = KochParams::reference(o.resolution);
  const auto results = train_runs(train_set, val_set, cfg, init);

  const fs::path out = o.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::vector<double> finals, ratios;
  ojson seeds = ojson::array();
  for (std::size_t r = 0; r < results.size(); ++r) {
    const auto& res = results[r];
    const fs::path params_path = r == 0 ? out : sibling(out, "_run" + std::to_string(r) + ".json");
    save_koch_model({res.params, bank}, params_path);
    const fs::path hist_path =
        sibling(out, r == 0 ? ".history.csv" : "_run" + std::to_string(r) + ".history.csv");
    std::ofstream h(hist_path, std::ios::trunc);
    if (!h) throw IoError("cannot write training history", hist_path.string());
    h << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < res.history.train_loss.size(); ++e) {
      h << e + 1 << ',' << fmt(res.history.train_loss[e], 8) << ','
        << fmt(res.history.val_loss[e], 8) << '\n';
    }
    finals.push_back(res.history.final_train_loss);
    ratios.push_back(res.history.final_train_loss / res.history.initial_train_loss);
    seeds.push_back(res.seed);
  }
  write_run_manifest(sibling(out, ".manifest.json"), ctx, "train-koch", seeds,
                     {{"resolution_m", o.resolution},
                      {"train_patches", train_set.size()},
                      {"validation_patches", val_set.size()},
                      {"epochs", o.epochs},
                      {"learning_rate", o.lr},
                      {"batch_size", o.batch}});
  ctx.out << "trained " << results.size() << " run(s) on " << train_set.size() << " patches\n"
          << "final train loss: " << format_mean_std(run_stats(finals), 5) << '\n'
          << "final/initial loss: " << format_mean_std(run_stats(ratios), 3) << '\n';
  return kExitOk;
}

// ---- predict ----------------------------------------------------------------

struct PredictOptions {
  std::string model;
  std::string data;
  std::string out;
  std::string subset = "test";
  bool baseline = false;
  double threshold = 0.5;
  double resolution = 400.0;
  double cut = 0.5;
};

int cmd_predict(const PredictOptions& o, const Context& ctx) {
  KochModel model;
  std::string kind;
  if (o.baseline) {
    check_resolution(o.resolution, true);
    model = {KochParams::reference(o.resolution), FilterBankSpec{}};
    kind = "binary";
    if (!(o.threshold > 0.0 && o.threshold < 1.0)) {
      throw UsageError("--threshold must lie in (0, 1)");
    }
  } else {
    if (o.model.empty()) throw UsageError("--model is required unless --baseline is given");
    model = load_koch_model(o.model);
    check_resolution(model.params.resolution_m, true);
    kind = "multiclass";
  }
  const fs::path root = o.data;
  const fs::path out = o.out;
  const auto rows = rows_in(read_manifest(root / "manifest.csv"), o.subset);
  if (rows.empty()) throw DataError("no patches in subset '" + o.subset + "'", (root / "manifest.csv").string());
  const double res_m = model.params.resolution_m;
  fs::create_directories(out);

  parallel_for(rows.size(), [&](std::size_t k) {
    const auto& row = rows[k];
    const auto where = patch_stem(root, row.swath, row.patch).string();
    const auto item = at_resolution(read_labeled_patch(root, row), res_m, where);
    fs::create_directories(out / row.swath);
    const auto stem = patch_stem(out, row.swath, row.patch).string();
    if (o.baseline) {
      write_grid(koch_binary(item.patch.sigma0_norm, model.bank, model.params, o.threshold),
                 stem + ".pred.sgrd");
      return;
    }
    const auto pred = koch_forward(item.patch.sigma0_norm, model.params, model.bank);
    write_grid(pred.y1, stem + ".y1.sgrd");
    write_grid(pred.y3, stem + ".y3.sgrd");
    write_grid(pred.y10, stem + ".y10.sgrd");
    write_grid(labels_from_channels(pred, o.cut), stem + ".pred.sgrd");
  });

  write_manifest(rows, out / "manifest.csv");
  ojson meta = {{"kind", kind}, {"resolution_m", res_m}, {"model", o.baseline ? "reference" : o.model}};
  if (o.baseline) meta["threshold"] = o.threshold;
  std::ofstream(out / "predict.json", std::ios::trunc) << meta.dump(2) << '\n';
  write_run_manifest(out / "run_manifest.json", ctx, "predict", ojson::object(), meta);
  ctx.out << "predicted " << rows.size() << " patches (" << kind << ", " << fmt(res_m, 0)
          << " m/px)\n";
  return kExitOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalOptions {
  std::string pred;
  std::string truth;
  std::string subset = "test";
  std::size_t runs = 1;
  std::string strat;
  std::string edges;
  std::string model_name;
  std::string truth_suffix;  // binary truth mask <patch>.<suffix>.sgrd, e.g. glm
  std::string out;
};

struct RunMetrics {
  std::string kind;
  double resolution_m = 0.0;
  std::optional<double> multiclass;
  std::array<std::optional<double>, 3> binary{};
  std::vector<StratifiedCurve> curves;  // per threshold: F1 then detection probability
};

Grid strat_layer(const std::string& strat, const Patch& p) {
  if (strat == "wind") return p.wind_mps;
  if (strat == "incidence") {
    Grid g(p.sigma0_norm.geometry());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) g(r, c) = static_cast<float>(p.incidence_deg[c]);
    }
    return g;
  }
  return distance_to_coast(p.land);
}

std::vector<double> default_edges(const std::string& strat) {
  if (strat == "wind") return {0.0, 4.0, 8.0, 12.0, 16.0};
  if (strat == "incidence") return {30.0, 33.0, 36.0, 39.0, 42.0, 45.0};
  return {0.0, 2.0, 4.0, 6.0, 10.0, 20.0, 50.0};
}

RunMetrics eval_run(const fs::path& pred_root, const fs::path& truth_root, const EvalOptions& o,
                    const std::vector<double>& edges) {
  RunMetrics m;
  {
    std::ifstream meta_in(pred_root / "predict.json");
    if (!meta_in) throw IoError("prediction directory lacks predict.json", pred_root.string());
    try {
      const auto meta = nlohmann::json::parse(meta_in);
      m.kind = meta.at("kind").get<std::string>();
      m.resolution_m = meta.at("resolution_m").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(e.what(), (pred_root / "predict.json").string());
    }
  }
  const auto truth_rows = rows_in(read_manifest(truth_root / "manifest.csv"), o.subset);
  std::vector<ManifestRow> rows;
  for (const auto& r : truth_rows) {
    if (fs::exists(patch_stem(pred_root, r.swath, r.patch).string() + ".pred.sgrd")) rows.push_back(r);
  }
  if (rows.empty()) throw DataError("no predictions match the truth subset", pred_root.string());

  const bool binary_truth = !o.truth_suffix.empty();
  const std::size_t levels = m.kind == "binary" || binary_truth ? 1 : 3;
  auto level_of = [&](std::size_t t) {
    return m.kind == "binary" ? 1.0f : static_cast<float>(t + 1);
  };
  struct Slot {
    ConfusionMatrix multi{4};
    std::array<ConfusionMatrix, 3> bin{ConfusionMatrix(2), ConfusionMatrix(2), ConfusionMatrix(2)};
    std::vector<std::vector<ConfusionMatrix>> strata;  // [level][bin]
  };
  std::vector<Slot> slots(rows.size());
  parallel_for(rows.size(), [&](std::size_t k) {
    const auto& row = rows[k];
    const auto where = patch_stem(truth_root, row.swath, row.patch).string();
    const auto pred_path = patch_stem(pred_root, row.swath, row.patch).string() + ".pred.sgrd";
    const auto item = at_resolution(read_labeled_patch(truth_root, row), m.resolution_m, where);
    const Grid pred = read_grid(pred_path);
    if (pred.rows() != item.masks.m1.rows() || pred.cols() != item.masks.m1.cols()) {
      throw DataError("prediction geometry differs from the truth patch", pred_path);
    }
    const Grid valid = valid_ocean(item.masks, item.patch.land);
    std::array<Grid, 3> truth{item.masks.m1, item.masks.m3, item.masks.m10};
    if (binary_truth) {
      const Grid t = read_grid(where + "." + o.truth_suffix + ".sgrd");
      truth = {t, t, t};
    }
    auto& slot = slots[k];
    if (m.kind == "multiclass" && !binary_truth) {
      slot.multi = confusion(pred, item.masks.labels(), 4, valid);
    }
    for (std::size_t t = 0; t < 3; ++t) {
      if (binary_truth && t > 0) break;
      Grid pm = Grid::mask(pred.geometry());
      for (std::size_t i = 0; i < pm.size(); ++i) {
        pm.values()[i] = pred.values()[i] >= level_of(t) ? 1.0f : 0.0f;
      }
      slot.bin[t] = binary_confusion(pm, truth[t], valid);
    }
    if (o.strat.empty()) return;
    const Grid s = strat_layer(o.strat, item.patch);
    slot.strata.assign(levels, std::vector<ConfusionMatrix>(edges.size(), ConfusionMatrix(2)));
    for (std::size_t t = 0; t < levels; ++t) {
      for (std::size_t i = 0; i < pred.size(); ++i) {
        if (valid.values()[i] != 1.0f || s.is_nodata(s.values()[i])) continue;
        const auto b = strat_bin(edges, s.values()[i]);
        ++slot.strata[t][b](truth[t].values()[i] == 1.0f ? 1 : 0, pred.values()[i] >= level_of(t) ? 1 : 0);
      }
    }
  });

  ConfusionMatrix multi(4);
  std::array<ConfusionMatrix, 3> bin{ConfusionMatrix(2), ConfusionMatrix(2), ConfusionMatrix(2)};
  std::vector<std::vector<ConfusionMatrix>> pooled(levels, std::vector<ConfusionMatrix>(edges.size(), ConfusionMatrix(2)));
  for (const auto& s : slots) {
    multi.merge(s.multi);
    for (std::size_t t = 0; t < 3; ++t) bin[t].merge(s.bin[t]);
    for (std::size_t t = 0; t < s.strata.size(); ++t) {
      for (std::size_t b = 0; b < edges.size(); ++b) pooled[t][b].merge(s.strata[t][b]);
    }
  }
  if (m.kind == "multiclass" && !binary_truth && multi.total() > 0) m.multiclass = macro_f1(multi);
  for (std::size_t t = 0; t < 3; ++t) {
    if (bin[t].total() > 0) m.binary[t] = macro_f1(bin[t]);
  }
  if (!o.strat.empty()) {
    for (std::size_t t = 0; t < levels; ++t) {
      StratifiedCurve f1{edges, {}, {}, StratMetric::F1};
      StratifiedCurve dp{edges, {}, {}, StratMetric::DetectionProbability};
      for (const auto& cm : pooled[t]) {
        f1.count.push_back(cm.total());
        dp.count.push_back(cm.total());
        f1.value.push_back(cm.total() > 0 ? std::optional(macro_f1(cm)) : std::nullopt);
        const auto pos = cm(1, 0) + cm(1, 1);
        dp.value.push_back(pos > 0 ? std::optional(static_cast<double>(cm(1, 1)) / static_cast<double>(pos))
                                   : std::nullopt);
      }
      m.curves.push_back(std::move(f1));
      m.curves.push_back(std::move(dp));
    }
  }
  return m;
}

int cmd_eval(const EvalOptions& o, const Context& ctx) {
  if (o.runs < 1) throw UsageError("--runs must be at least 1");
  if (!o.strat.empty() && o.strat != "wind" && o.strat != "incidence" && o.strat != "coast") {
    throw UsageError("--strat must be wind, incidence or coast");
  }
  const auto edges = o.edges.empty() ? default_edges(o.strat) : parse_list(o.edges);
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (!(edges[k - 1] < edges[k])) throw UsageError("--edges must be increasing");
  }
  const fs::path pred_root = o.pred;
  std::vector<RunMetrics> runs;
  for (std::size_t r = 0; r < o.runs; ++r) {
    const fs::path dir = o.runs == 1 ? pred_root : pred_root / ("run" + std::to_string(r));
    runs.push_back(eval_run(dir, o.truth, o, edges));
  }
  const fs::path out = o.out.empty() ? pred_root : fs::path(o.out);
  fs::create_directories(out);
  const std::string name = o.model_name.empty() ? runs.front().kind : o.model_name;
  const double res_m = runs.front().resolution_m;

  std::ofstream table(out / "metrics.csv", std::ios::trunc);
  if (!table) throw IoError("cannot write metrics", (out / "metrics.csv").string());
  table << "model,resolution_m,metric,threshold,mean,std\n";
  auto emit = [&](const std::string& metric, const std::string& threshold,
                  const std::vector<double>& values) {
    if (values.empty()) return;
    const auto s = run_stats(values);
    table << name << ',' << fmt(res_m, 0) << ',' << metric << ',' << threshold << ','
          << fmt(s.mean) << ',' << fmt(s.std) << '\n';
    ctx.out << metric << (threshold.empty() ? "" : " " + threshold) << ": "
            << format_mean_std({s.mean * 100.0, s.std * 100.0}, 1) << " %\n";
  };
  static constexpr std::array<const char*, 3> kLevels = {">1mm/h", ">3mm/h", ">10mm/h"};
  for (std::size_t t = 0; t < 3; ++t) {
    std::vector<double> v;
    for (const auto& m : runs) {
      if (m.binary[t]) v.push_back(*m.binary[t]);
    }
    emit("binary_f1", kLevels[t], v);
  }
  std::vector<double> mc;
  for (const auto& m : runs) {
    if (m.multiclass) mc.push_back(*m.multiclass);
  }
  emit("multiclass_f1", "", mc);

  if (!o.strat.empty()) {
    std::ofstream curve(out / ("strat_" + o.strat + ".csv"), std::ios::trunc);
    curve << "run,threshold,metric,bin_lo,bin_hi,value,count\n";
    for (std::size_t r = 0; r < runs.size(); ++r) {
      for (std::size_t c = 0; c < runs[r].curves.size(); ++c) {
        const auto& cv = runs[r].curves[c];
        const char* level = kLevels[c / 2];
        for (std::size_t b = 0; b < cv.bins(); ++b) {
          curve << r << ',' << level << ','
                << (cv.metric == StratMetric::F1 ? "f1" : "detection_probability") << ','
                << cv.edges[b] << ',' << (b + 1 < cv.bins() ? fmt(cv.edges[b + 1], 3) : "inf")
                << ',' << (cv.value[b] ? fmt(*cv.value[b]) : "") << ',' << cv.count[b] << '\n';
        }
      }
    }
  }
  write_run_manifest(out / "eval_manifest.json", ctx, "eval", ojson::object(),
                     {{"runs", o.runs}, {"pooling", "pixels pooled over all patches"}});
  return kExitOk;
}

// ---- glm-cluster ------------------------------------------------------------

struct GlmOptions {
  std::string events;
  std::string grid;
  std::optional<double> time;
  double max_dt = 1200.0;
  int adjacency = 8;
  std::string out;
};

int cmd_glm(const GlmOptions& o, const Context& ctx) {
  if (o.adjacency != 4 && o.adjacency != 8) throw UsageError("--adjacency must be 4 or 8");
  auto events = read_events_csv(o.events);
  std::stable_sort(events.begin(), events.end(),
                   [](const LightningEvent& a, const LightningEvent& b) { return a.time_s < b.time_s; });
  const Grid ref = read_grid(o.grid);
  const double t_acq = o.time ? *o.time : static_cast<double>(ref.timestamp());
  const auto clusters = cluster_events(events, ref.geometry(),
                                       o.adjacency == 4 ? Adjacency::Four : Adjacency::Eight);
  const auto flashes = group_flashes(events);
  const Grid mask = rasterize_lightning(clusters, events, ref.geometry(), t_acq, o.max_dt);
  const fs::path out = o.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_grid(mask, out);

  std::ofstream f(sibling(out, ".flashes.csv"), std::ios::trunc);
  f << "flash,n_events,start_s,end_s,min_lat,max_lat,min_lon,max_lon\n";
  for (std::size_t k = 0; k < flashes.size(); ++k) {
    const auto& fl = flashes[k];
    f << k << ',' << fl.members.size() << ',' << fmt(fl.start_s, 3) << ',' << fmt(fl.end_s, 3)
      << ',' << fmt(fl.min_lat) << ',' << fmt(fl.max_lat) << ',' << fmt(fl.min_lon) << ','
      << fmt(fl.max_lon) << '\n';
  }
  std::size_t set = 0;
  for (float v : mask.values()) set += v == 1.0f ? 1 : 0;
  write_run_manifest(sibling(out, ".manifest.json"), ctx, "glm-cluster", ojson::object(),
                     {{"events", events.size()},
                      {"clusters", clusters.clusters.size()},
                      {"rejected_events", clusters.rejected},
                      {"flashes", flashes.size()},
                      {"mask_pixels", set}});
  ctx.out << events.size() << " events, " << clusters.clusters.size() << " clusters ("
          << clusters.rejected << " events outside the grid), " << flashes.size() << " flashes, "
          << set << " mask pixels\n";
  return kExitOk;
}

// ---- report -----------------------------------------------------------------

struct ReportOptions {
  std::string data;
};

int cmd_report(const ReportOptions& o, const Context& ctx) {
  const fs::path root = o.data;
  const auto rows = read_manifest(root / "manifest.csv");
  std::map<Subset, SwathHistogram> per_subset;
  std::map<Subset, std::set<std::string>> swaths;
  std::map<Subset, std::size_t> patches;
  for (const auto& r : rows) {
    const auto p = read_patch(root, r);
    accumulate_histogram(per_subset[r.subset], p.reflectivity, p.wind_mps, p.land);
    swaths[r.subset].insert(r.swath);
    ++patches[r.subset];
  }
  SwathHistogram total;
  for (const auto& [s, h] : per_subset) total += h;

  std::ofstream rep(root / "report.csv", std::ios::trunc);
  if (!rep) throw IoError("cannot write report", (root / "report.csv").string());
  rep << "subset,swaths,patches,kind,bin,pixels,share\n";
  ctx.out << "subset        swaths  patches\n";
  for (const auto& [s, h] : per_subset) {
    char line[96];
    std::snprintf(line, sizeof line, "%-12s %7zu %8zu\n", std::string(to_string(s)).c_str(),
                  swaths[s].size(), patches[s]);
    ctx.out << line;
    for (std::size_t b = 0; b < kReflectivityBins; ++b) {
      const double share = total.reflectivity[b] > 0 ? h.reflectivity[b] / total.reflectivity[b] : 0.0;
      rep << to_string(s) << ',' << swaths[s].size() << ',' << patches[s] << ",reflectivity," << b
          << ',' << h.reflectivity[b] << ',' << fmt(share) << '\n';
    }
    for (std::size_t b = 0; b < kWindBins; ++b) {
      const double share = total.wind[b] > 0 ? h.wind[b] / total.wind[b] : 0.0;
      rep << to_string(s) << ',' << swaths[s].size() << ',' << patches[s] << ",wind," << b << ','
          << h.wind[b] << ',' << fmt(share) << '\n';
    }
  }
  write_run_manifest(root / "report_manifest.json", ctx, "report", ojson::object(),
                     {{"patches", rows.size()}});
  return kExitOk;
}

void print_error(std::ostream& err, const Error& e) {
  ojson j = {{"error", std::string(to_string(e.kind()))}, {"message", e.what()}};
  if (!e.path().empty()) j["path"] = e.path();
  err << j.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"SAR rain segmentation toolkit", "sarrain"};
  app.set_version_flag("--version", std::string(SARRAIN_VERSION_STRING));
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t workers = 0;
  app.add_option("--workers", workers, "worker threads (SARRAIN_WORKERS overrides)");

  SynthOptions synth;
  auto* s_synth = app.add_subcommand("synth", "generate a synthetic scene or corpus");
  s_synth->add_option("--config", synth.config, "SceneConfig or corpus JSON")->required()->check(CLI::ExistingFile);
  s_synth->add_option("--out", synth.out, "output directory")->required();
  s_synth->add_option("--seed", synth.seed, "override the config seed");
  s_synth->add_option("--id", synth.id, "scene file stem");

  ExtractOptions extract;
  auto* s_extract = app.add_subcommand("extract", "tile swaths into labeled patches");
  s_extract->add_option("--input", extract.input, "directory of <swath>.{s0,inc,refl,wind,land}.sgrd")->required();
  s_extract->add_option("--out", extract.out, "dataset directory")->required();
  s_extract->add_option("--gmf", extract.gmf, "GMF coefficient file");
  s_extract->add_option("--tile", extract.tile, "patch size in pixels")->check(CLI::PositiveNumber);
  s_extract->add_option("--stride", extract.stride, "tile stride (0 = half the tile)");
  s_extract->add_option("--resolution", extract.resolution, "resample to this spacing (m/px)");
  s_extract->add_option("--exclude", extract.exclude, "exclusion list")->check(CLI::ExistingFile);
  s_extract->add_option("--max-time-delta", extract.max_time_delta, "colocation window (s)");
  s_extract->add_option("--max-land", extract.max_land, "maximum land fraction");
  s_extract->add_option("--min-dbz", extract.min_dbz, "minimum patch maximum reflectivity");

  SplitOptions split;
  auto* s_split = app.add_subcommand("split", "balanced swath-level train/validation/test split");
  s_split->add_option("--data", split.data, "dataset directory")->required();
  s_split->add_option("--seed", split.seed, "restart seed");
  s_split->add_option("--train", split.train, "train fraction");
  s_split->add_option("--validation", split.validation, "validation fraction");
  s_split->add_option("--test", split.test, "test fraction");

  RegisterOptions reg;
  auto* s_reg = app.add_subcommand("register", "align radar labels to the SAR rain signature");
  s_reg->add_option("--data", reg.data, "dataset directory")->required();
  s_reg->add_option("--radius", reg.radius, "search radius (px)")->check(CLI::NonNegativeNumber);
  s_reg->add_option("--overrides", reg.overrides, "manual offsets CSV")->check(CLI::ExistingFile);
  s_reg->add_option("--stations", reg.stations, "CSV swath,patch,distance_km[,bearing_deg]")->check(CLI::ExistingFile);
  s_reg->add_option("--gmf", reg.gmf, "GMF coefficient file (default: built-in CMOD5.N)")->check(CLI::ExistingFile);

  TrainOptions train_opt;
  auto* s_train = app.add_subcommand("train-koch", "fine-tune the multi-threshold Koch model");
  s_train->add_option("--data", train_opt.data, "dataset directory")->required();
  s_train->add_option("--resolution", train_opt.resolution, "model resolution (m/px)");
  s_train->add_option("--out", train_opt.out, "parameter JSON")->required();
  s_train->add_option("--seed", train_opt.seed, "first run seed");
  s_train->add_option("--runs", train_opt.runs, "independent runs")->check(CLI::PositiveNumber);
  s_train->add_option("--epochs", train_opt.epochs, "epochs")->check(CLI::PositiveNumber);
  s_train->add_option("--lr", train_opt.lr, "Adam learning rate");
  s_train->add_option("--batch", train_opt.batch, "mini-batch size")->check(CLI::PositiveNumber);

  PredictOptions pred;
  auto* s_pred = app.add_subcommand("predict", "run a Koch model over dataset patches");
  s_pred->add_option("--model", pred.model, "parameter JSON");
  s_pred->add_option("--data", pred.data, "dataset directory")->required();
  s_pred->add_option("--out", pred.out, "prediction directory")->required();
  s_pred->add_option("--subset", pred.subset, "train|validation|test|all");
  s_pred->add_flag("--baseline", pred.baseline, "use the binary reference detector");
  s_pred->add_option("--threshold", pred.threshold, "binary detector threshold");
  s_pred->add_option("--resolution", pred.resolution, "baseline resolution (m/px)");
  s_pred->add_option("--cut", pred.cut, "channel cut for class labels");

  EvalOptions eval;
  auto* s_eval = app.add_subcommand("eval", "F1 scores and stratified curves");
  s_eval->add_option("--pred", eval.pred, "prediction directory (run0.. with --runs)")->required();
  s_eval->add_option("--truth", eval.truth, "dataset directory")->required();
  s_eval->add_option("--subset", eval.subset, "train|validation|test|all");
  s_eval->add_option("--runs", eval.runs, "number of run directories");
  s_eval->add_option("--strat", eval.strat, "wind|incidence|coast");
  s_eval->add_option("--edges", eval.edges, "comma-separated bin edges");
  s_eval->add_option("--name", eval.model_name, "model name in the report");
  s_eval->add_option("--truth-mask", eval.truth_suffix, "binary truth layer suffix, e.g. glm");
  s_eval->add_option("--out", eval.out, "report directory (default: --pred)");

  GlmOptions glm;
  auto* s_glm = app.add_subcommand("glm-cluster", "lightning clusters and rain-proxy mask");
  s_glm->add_option("--events", glm.events, "CSV time_s,lat,lon")->required()->check(CLI::ExistingFile);
  s_glm->add_option("--grid", glm.grid, "SGRID whose geometry the mask uses")->required()->check(CLI::ExistingFile);
  s_glm->add_option("--time", glm.time, "acquisition time (s); default: grid timestamp");
  s_glm->add_option("--max-dt", glm.max_dt, "colocation window (s)");
  s_glm->add_option("--adjacency", glm.adjacency, "4 or 8");
  s_glm->add_option("--out", glm.out, "output mask SGRID")->required();

  ReportOptions report;
  auto* s_report = app.add_subcommand("report", "per-subset dataset summary");
  s_report->add_option("--data", report.data, "dataset directory")->required();

  if (args.empty()) {
    err << app.help();
    return kExitUsage;
  }
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << SARRAIN_VERSION_STRING << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\nrun 'sarrain --help' for usage\n";
    return kExitUsage;
  }
  if (workers > 0) set_worker_count(workers);

  Context ctx{args, out, err};
  try {
    if (s_synth->parsed()) return cmd_synth(synth, ctx);
    if (s_extract->parsed()) return cmd_extract(extract, ctx);
    if (s_split->parsed()) return cmd_split(split, ctx);
    if (s_reg->parsed()) return cmd_register(reg, ctx);
    if (s_train->parsed()) return cmd_train(train_opt, ctx);
    if (s_pred->parsed()) return cmd_predict(pred, ctx);
    if (s_eval->parsed()) return cmd_eval(eval, ctx);
    if (s_glm->parsed()) return cmd_glm(glm, ctx);
    if (s_report->parsed()) return cmd_report(report, ctx);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    print_error(err, e);
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    print_error(err, IoError(e.what(), e.path1().string()));
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace sarrain::cli
