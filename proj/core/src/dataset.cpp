#include "sarrain/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "sarrain/csv.hpp"
#include "sarrain/error.hpp"
#include "sarrain/rng.hpp"

namespace sarrain {

namespace fs = std::filesystem;

// ---- patches ----------------------------------------------------------------

double Patch::land_fraction() const {
  std::size_t land_px = 0;
  for (float v : land.values()) land_px += v == 1.0f ? 1 : 0;
  return static_cast<double>(land_px) / static_cast<double>(land.size());
}

double Patch::max_dbz() const {
  double best = -std::numeric_limits<double>::infinity();
  for (float v : reflectivity.values()) {
    if (!reflectivity.is_nodata(v)) best = std::max(best, static_cast<double>(v));
  }
  return best;
}

void Patch::check(const ExtractionRules& rules) const {
  const auto where = swath_id + "/" + patch_id;
  for (const Grid* g : {&reflectivity, &wind_mps, &land}) {
    if (g->rows() != sigma0_norm.rows() || g->cols() != sigma0_norm.cols()) {
      throw DataError("patch layers disagree on geometry", where);
    }
  }
  if (incidence_deg.size() != sigma0_norm.cols()) {
    throw DataError("patch incidence does not cover every column", where);
  }
  if (std::abs(time_delta_s) > rules.max_time_delta_s) {
    throw DataError("patch outside the colocation window", where);
  }
  if (land_fraction() > rules.max_land_fraction) {
    throw DataError("patch exceeds the land fraction limit", where);
  }
  if (max_dbz() < rules.min_max_dbz) {
    throw DataError("patch maximum reflectivity below the rain floor", where);
  }
}

std::string patch_id_for(std::size_t row_offset, std::size_t col_offset) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r%05zuc%05zu", row_offset, col_offset);
  return buf;
}

ExtractionResult extract_patches(const SwathLayers& swath, const ExtractionRules& rules) {
  const Grid& s0 = swath.sigma0_norm;
  for (const Grid* g : {&swath.reflectivity, &swath.wind_mps, &swath.land}) {
    require(g->rows() == s0.rows() && g->cols() == s0.cols() &&
                g->pixel_spacing_m() == s0.pixel_spacing_m(),
            "swath layers of '" + swath.swath_id + "' are not co-projected");
  }
  require(swath.incidence_deg.size() == s0.cols(),
          "swath incidence must cover every column");
  require(swath.land.is_byte() && swath.land.is_binary(), "land layer must be a mask");

  ExtractionResult result;
  if (std::abs(swath.time_delta_s) > rules.max_time_delta_s) {
    result.rejected_time_window = true;
    return result;
  }
  const auto rows = tile_offsets(s0.rows(), rules.tile_px, rules.stride());
  const auto cols = tile_offsets(s0.cols(), rules.tile_px, rules.stride());
  const std::size_t t = rules.tile_px;
  for (auto r : rows) {
    for (auto c : cols) {
      ++result.tiles;
      Patch p;
      p.swath_id = swath.swath_id;
      p.patch_id = patch_id_for(r, c);
      p.row_offset = r;
      p.col_offset = c;
      p.land = crop(swath.land, r, c, t, t);
      if (p.land_fraction() > rules.max_land_fraction) {
        ++result.rejected_land;
        continue;
      }
      p.reflectivity = crop(swath.reflectivity, r, c, t, t);
      if (p.max_dbz() < rules.min_max_dbz) {
        ++result.rejected_reflectivity;
        continue;
      }
      p.sigma0_norm = crop(s0, r, c, t, t);
      p.wind_mps = crop(swath.wind_mps, r, c, t, t);
      p.incidence_deg.assign(swath.incidence_deg.begin() + static_cast<std::ptrdiff_t>(c),
                             swath.incidence_deg.begin() + static_cast<std::ptrdiff_t>(c + t));
      p.time_delta_s = swath.time_delta_s;
      p.check(rules);
      result.patches.push_back(std::move(p));
    }
  }
  return result;
}

// ---- manifest and layout ----------------------------------------------------

std::string_view to_string(Subset s) {
  switch (s) {
    case Subset::Unassigned: return "none";
    case Subset::Train: return "train";
    case Subset::Validation: return "validation";
    case Subset::Test: return "test";
  }
  return "none";
}

Subset subset_from_string(std::string_view s) {
  if (s == "train") return Subset::Train;
  if (s == "validation" || s == "val") return Subset::Validation;
  if (s == "test") return Subset::Test;
  if (s == "none" || s.empty()) return Subset::Unassigned;
  throw FormatError("unknown subset '" + std::string(s) + "'");
}

void write_manifest(std::span<const ManifestRow> rows, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest", path.string());
  out << kManifestHeader << '\n';
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.3f,%d,%d,%.6f,%.4f", r.time_delta_s, r.d_row, r.d_col,
                  r.land_frac, r.max_dbz);
    out << r.swath << ',' << r.patch << ',' << to_string(r.subset) << ',' << buf << '\n';
  }
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  const auto table = read_csv(path);
  const auto origin = path.string();
  expect_columns(table, {"swath", "patch", "subset", "time_delta_s", "d_row", "d_col",
                         "land_frac", "max_dbz"},
                 origin);
  const auto is = table.column("swath"), ip = table.column("patch"),
             iu = table.column("subset"), it = table.column("time_delta_s"),
             ir = table.column("d_row"), ic = table.column("d_col"),
             il = table.column("land_frac"), im = table.column("max_dbz");
  std::vector<ManifestRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& f : table.rows) {
    ManifestRow r;
    r.swath = f[is];
    r.patch = f[ip];
    try {
      r.subset = subset_from_string(f[iu]);
    } catch (const FormatError& e) {
      throw FormatError(e.what(), origin);
    }
    r.time_delta_s = parse_double(f[it], origin);
    r.d_row = static_cast<int>(parse_int(f[ir], origin));
    r.d_col = static_cast<int>(parse_int(f[ic], origin));
    r.land_frac = parse_double(f[il], origin);
    r.max_dbz = parse_double(f[im], origin);
    rows.push_back(std::move(r));
  }
  return rows;
}

ManifestRow manifest_row(const Patch& p, Subset subset) {
  return {p.swath_id,           p.patch_id,           subset,          p.time_delta_s,
          p.offset_applied.d_row, p.offset_applied.d_col, p.land_fraction(), p.max_dbz()};
}

fs::path patch_stem(const fs::path& root, std::string_view swath, std::string_view patch) {
  return root / std::string(swath) / std::string(patch);
}

namespace {

Grid incidence_grid(const Patch& p) {
  GridGeometry g = p.sigma0_norm.geometry();
  g.rows = 1;
  std::vector<float> v(p.incidence_deg.begin(), p.incidence_deg.end());
  return Grid(g, std::move(v), DType::Float32, Grid::kDefaultNodata, p.sigma0_norm.timestamp());
}

}  // namespace

void write_patch(const fs::path& root, const Patch& p) {
  fs::create_directories(root / p.swath_id);
  const auto stem = patch_stem(root, p.swath_id, p.patch_id).string();
  write_grid(p.sigma0_norm, stem + ".s0.sgrd");
  write_grid(p.reflectivity, stem + ".refl.sgrd");
  write_grid(p.wind_mps, stem + ".wind.sgrd");
  write_grid(p.land, stem + ".land.sgrd");
  write_grid(incidence_grid(p), stem + ".inc.sgrd");
}

void write_labeled_patch(const fs::path& root, const LabeledPatch& item) {
  write_patch(root, item.patch);
  write_class_masks(item.masks, patch_stem(root, item.patch.swath_id, item.patch.patch_id));
}

Patch read_patch(const fs::path& root, const ManifestRow& row) {
  const auto stem = patch_stem(root, row.swath, row.patch).string();
  Patch p;
  p.swath_id = row.swath;
  p.patch_id = row.patch;
  // ids written by patch_id_for carry the tile origin; other ids leave it at zero
  std::size_t r0 = 0, c0 = 0;
  char tail = 0;
  if (std::sscanf(row.patch.c_str(), "r%zuc%zu%c", &r0, &c0, &tail) == 2) {
    p.row_offset = r0;
    p.col_offset = c0;
  }
  p.sigma0_norm = read_grid(stem + ".s0.sgrd");
  p.reflectivity = read_grid(stem + ".refl.sgrd");
  p.wind_mps = read_grid(stem + ".wind.sgrd");
  p.land = read_grid(stem + ".land.sgrd");
  const auto inc = read_grid(stem + ".inc.sgrd");
  if (inc.cols() != p.sigma0_norm.cols()) {
    throw DataError("incidence layer width does not match the patch", stem + ".inc.sgrd");
  }
  p.incidence_deg.assign(inc.values().begin(), inc.values().end());
  p.offset_applied = {row.d_row, row.d_col, 0.0};
  p.time_delta_s = row.time_delta_s;
  for (const Grid* g : {&p.reflectivity, &p.wind_mps, &p.land}) {
    if (g->rows() != p.sigma0_norm.rows() || g->cols() != p.sigma0_norm.cols()) {
      throw DataError("patch layers disagree on geometry", stem);
    }
  }
  return p;
}

LabeledPatch read_labeled_patch(const fs::path& root, const ManifestRow& row) {
  LabeledPatch item{read_patch(root, row), {}};
  item.masks = read_class_masks(patch_stem(root, row.swath, row.patch));
  if (item.masks.m1.rows() != item.patch.sigma0_norm.rows() ||
      item.masks.m1.cols() != item.patch.sigma0_norm.cols()) {
    throw DataError("class masks do not match patch geometry",
                    patch_stem(root, row.swath, row.patch).string());
  }
  return item;
}

bool ExclusionList::excludes(std::string_view swath, std::string_view patch) const {
  for (const auto& s : swaths) {
    if (s == swath) return true;
  }
  for (const auto& [s, p] : patches) {
    if (s == swath && p == patch) return true;
  }
  return false;
}

ExclusionList read_exclusions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open exclusion list", path.string());
  ExclusionList list;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      list.swaths.push_back(line);
    } else {
      list.patches.emplace_back(line.substr(0, comma), line.substr(comma + 1));
    }
  }
  return list;
}

// ---- histograms -------------------------------------------------------------

std::size_t reflectivity_bin(double dbz) {
  std::size_t b = 0;
  for (double t : kClassThresholdsDbz) b += dbz >= t ? 1 : 0;
  return b;
}

std::size_t wind_bin(double wind) {
  std::size_t b = 0;
  for (std::size_t k = 1; k < kWindBinEdges.size(); ++k) b += wind >= kWindBinEdges[k] ? 1 : 0;
  return b;
}

SwathHistogram& SwathHistogram::operator+=(const SwathHistogram& other) {
  for (std::size_t b = 0; b < kReflectivityBins; ++b) reflectivity[b] += other.reflectivity[b];
  for (std::size_t b = 0; b < kWindBins; ++b) wind[b] += other.wind[b];
  return *this;
}

void accumulate_histogram(SwathHistogram& hist, const Grid& refl, const Grid& wind,
                          const Grid& land) {
  require(refl.size() == wind.size() && refl.size() == land.size(),
          "histogram layers must share geometry");
  for (std::size_t i = 0; i < refl.size(); ++i) {
    if (land.values()[i] == 1.0f) continue;
    const float z = refl.values()[i];
    const float w = wind.values()[i];
    if (refl.is_nodata(z) || wind.is_nodata(w)) continue;
    hist.reflectivity[reflectivity_bin(z)] += 1.0;
    hist.wind[wind_bin(w)] += 1.0;
  }
}

// ---- balanced split ---------------------------------------------------------

namespace {

constexpr std::size_t kBins = kReflectivityBins + kWindBins;
using BinVector = std::array<double, kBins>;

struct SplitProblem {
  std::vector<BinVector> counts;
  BinVector totals{};
  std::array<double, 3> targets{};
  std::array<std::size_t, 3> lower{};
  std::array<std::size_t, 3> upper{};
};

struct SplitState {
  std::vector<int> subset;
  std::array<BinVector, 3> sums{};
  std::array<std::size_t, 3> size{};

  void place(const SplitProblem& prob, std::size_t s, int k) {
    subset[s] = k;
    ++size[static_cast<std::size_t>(k)];
    for (std::size_t b = 0; b < kBins; ++b) sums[static_cast<std::size_t>(k)][b] += prob.counts[s][b];
  }
  void remove(const SplitProblem& prob, std::size_t s) {
    const auto k = static_cast<std::size_t>(subset[s]);
    --size[k];
    for (std::size_t b = 0; b < kBins; ++b) sums[k][b] -= prob.counts[s][b];
    subset[s] = -1;
  }
};

double objective(const SplitProblem& prob, const std::array<BinVector, 3>& sums,
                 const BinVector& totals) {
  double obj = 0.0;
  for (std::size_t b = 0; b < kBins; ++b) {
    if (!(totals[b] > 0.0)) continue;
    for (std::size_t k = 0; k < 3; ++k) obj += std::abs(sums[k][b] / totals[b] - prob.targets[k]);
  }
  return obj;
}

double full_objective(const SplitProblem& prob, const SplitState& st) {
  return objective(prob, st.sums, prob.totals);
}

SplitState greedy(const SplitProblem& prob, const std::vector<std::size_t>& order) {
  const std::size_t n = prob.counts.size();
  SplitState st;
  st.subset.assign(n, -1);
  BinVector partial{};
  std::size_t remaining = n;
  for (auto s : order) {
    --remaining;
    for (std::size_t b = 0; b < kBins; ++b) partial[b] += prob.counts[s][b];
    int best_k = -1;
    double best_obj = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      if (st.size[ku] >= prob.upper[ku]) continue;
      std::size_t owed = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t have = st.size[j] + (j == ku ? 1 : 0);
        owed += prob.lower[j] > have ? prob.lower[j] - have : 0;
      }
      if (owed > remaining) continue;
      auto sums = st.sums;
      for (std::size_t b = 0; b < kBins; ++b) sums[ku][b] += prob.counts[s][b];
      const double obj = objective(prob, sums, partial);
      if (obj < best_obj - 1e-15) {
        best_obj = obj;
        best_k = k;
      }
    }
    if (best_k < 0) throw PreconditionError("split count bounds are infeasible");
    st.place(prob, s, best_k);
  }
  return st;
}

void refine(const SplitProblem& prob, SplitState& st) {
  const std::size_t n = prob.counts.size();
  double current = full_objective(prob, st);
  for (int iter = 0; iter < 10000; ++iter) {
    double best = current;
    std::size_t best_s = n, best_t = n;
    int best_k = -1;
    // single moves
    for (std::size_t s = 0; s < n; ++s) {
      const auto from = static_cast<std::size_t>(st.subset[s]);
      if (st.size[from] <= prob.lower[from]) continue;
      for (int k = 0; k < 3; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (ku == from || st.size[ku] >= prob.upper[ku]) continue;
        auto sums = st.sums;
        for (std::size_t b = 0; b < kBins; ++b) {
          sums[from][b] -= prob.counts[s][b];
          sums[ku][b] += prob.counts[s][b];
        }
        const double obj = objective(prob, sums, prob.totals);
        if (obj < best - 1e-12) {
          best = obj;
          best_s = s;
          best_t = n;
          best_k = k;
        }
      }
    }
    // pairwise swaps
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t t = s + 1; t < n; ++t) {
        const auto ks = static_cast<std::size_t>(st.subset[s]);
        const auto kt = static_cast<std::size_t>(st.subset[t]);
        if (ks == kt) continue;
        auto sums = st.sums;
        for (std::size_t b = 0; b < kBins; ++b) {
          const double d = prob.counts[s][b] - prob.counts[t][b];
          sums[ks][b] -= d;
          sums[kt][b] += d;
        }
        const double obj = objective(prob, sums, prob.totals);
        if (obj < best - 1e-12) {
          best = obj;
          best_s = s;
          best_t = t;
          best_k = -1;
        }
      }
    }
    if (best_s == n) return;
    if (best_t == n) {
      st.remove(prob, best_s);
      st.place(prob, best_s, best_k);
    } else {
      const int ks = st.subset[best_s];
      const int kt = st.subset[best_t];
      st.remove(prob, best_s);
      st.remove(prob, best_t);
      st.place(prob, best_s, kt);
      st.place(prob, best_t, ks);
    }
    current = best;
  }
}

}  // namespace

SplitAssignment split_balanced(std::span<const SwathHistogram> swaths,
                               const SplitFractions& fractions, std::uint64_t seed) {
  const std::size_t n = swaths.size();
  require(n >= 3, "balanced split needs at least 3 swaths, got " + std::to_string(n));
  const std::array<double, 3> f = {fractions.train, fractions.validation, fractions.test};
  for (double x : f) require(x > 0.0, "split fractions must be positive");
  require(std::abs(f[0] + f[1] + f[2] - 1.0) < 1e-6, "split fractions must sum to 1");

  SplitProblem prob;
  prob.targets = f;
  prob.counts.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t b = 0; b < kReflectivityBins; ++b) prob.counts[s][b] = swaths[s].reflectivity[b];
    for (std::size_t b = 0; b < kWindBins; ++b) prob.counts[s][kReflectivityBins + b] = swaths[s].wind[b];
    for (std::size_t b = 0; b < kBins; ++b) prob.totals[b] += prob.counts[s][b];
  }

  // Target swath counts by largest remainder, each at least one.
  std::array<std::size_t, 3> target{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = f[k] * static_cast<double>(n);
    target[k] = static_cast<std::size_t>(std::floor(exact));
    rem[k] = exact - std::floor(exact);
    assigned += target[k];
  }
  while (assigned < n) {
    const auto k = static_cast<std::size_t>(std::max_element(rem.begin(), rem.end()) - rem.begin());
    ++target[k];
    rem[k] = -1.0;
    ++assigned;
  }
  for (auto& t : target) {
    if (t == 0) {
      t = 1;
      --*std::max_element(target.begin(), target.end());
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    prob.lower[k] = std::max<std::size_t>(1, target[k] - 1);
    prob.upper[k] = target[k] + 1;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ta = std::accumulate(prob.counts[a].begin(), prob.counts[a].begin() + kReflectivityBins, 0.0);
    const auto tb = std::accumulate(prob.counts[b].begin(), prob.counts[b].begin() + kReflectivityBins, 0.0);
    return ta > tb;
  });

  constexpr int kRestarts = 8;
  std::optional<SplitState> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int r = 0; r < kRestarts; ++r) {
    auto trial_order = order;
    if (r > 0) {
      CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
      rng.shuffle(std::span<std::size_t>(trial_order));
    }
    auto st = greedy(prob, trial_order);
    refine(prob, st);
    const double obj = full_objective(prob, st);
    if (obj < best_obj - 1e-12) {
      best_obj = obj;
      best = std::move(st);
    }
  }

  SplitAssignment out;
  out.objective = best_obj;
  constexpr std::array<Subset, 3> kSubsets = {Subset::Train, Subset::Validation, Subset::Test};
  for (std::size_t s = 0; s < n; ++s) {
    const auto k = static_cast<std::size_t>(best->subset[s]);
    if (!out.subset_of.emplace(swaths[s].swath_id, kSubsets[k]).second) {
      throw PreconditionError("duplicate swath id '" + swaths[s].swath_id + "'");
    }
    ++out.swath_counts[k];
  }
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t b = 0; b < kReflectivityBins; ++b) {
      const double t = prob.totals[b];
      out.reflectivity_share[k][b] = t > 0.0 ? best->sums[k][b] / t : 0.0;
    }
    for (std::size_t b = 0; b < kWindBins; ++b) {
      const double t = prob.totals[kReflectivityBins + b];
      out.wind_share[k][b] = t > 0.0 ? best->sums[k][kReflectivityBins + b] / t : 0.0;
    }
  }
  return out;
}

// ---- registration statistics ------------------------------------------------

double r_squared(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "regression inputs must have equal length");
  require(x.size() >= 3, "regression needs at least 3 samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 1e-12 * std::max(1.0, mx * mx) * n)) {
    throw UndefinedMetricError("R^2 undefined: regressor has zero variance");
  }
  if (!(syy > 0.0)) return 0.0;
  return std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
}

OffsetStats registration_stats(std::span<const RegistrationOffset> offsets,
                               std::span<const double> distances_km,
                               std::span<const double> winds_mps,
                               std::span<const double> bearings_deg) {
  const std::size_t n = offsets.size();
  require(distances_km.size() == n && winds_mps.size() == n,
          "offset statistics need equal-length inputs");
  require(bearings_deg.empty() || bearings_deg.size() == n,
          "bearings must match the offsets");
  require(n >= 3, "offset statistics need at least 3 offsets");

  std::vector<double> magnitude(n);
  for (std::size_t i = 0; i < n; ++i) {
    magnitude[i] = std::hypot(offsets[i].d_row, offsets[i].d_col);
  }
  OffsetStats stats;
  stats.r2_distance = r_squared(distances_km, magnitude);
  stats.r2_wind = r_squared(winds_mps, magnitude);

  if (!bearings_deg.empty()) {
    constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;
    std::vector<double> bearing, direction;
    for (std::size_t i = 0; i < n; ++i) {
      if (offsets[i].d_row == 0 && offsets[i].d_col == 0) continue;
      // compass direction: north is -row, east is +col
      double dir = std::atan2(offsets[i].d_col, -offsets[i].d_row) * kRadToDeg;
      const double b = bearings_deg[i];
      while (dir - b > 180.0) dir -= 360.0;
      while (dir - b <= -180.0) dir += 360.0;
      bearing.push_back(b);
      direction.push_back(dir);
    }
    if (bearing.size() >= 3) stats.r2_direction = r_squared(bearing, direction);
  }
  return stats;
}

}  // namespace sarrain
