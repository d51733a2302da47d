#include "sarrain/rain_label.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <utility>

#include "sarrain/csv.hpp"
#include "sarrain/error.hpp"

namespace sarrain {

double dbz_from_rainrate(double rain_mmh, const ZrParams& zr) {
  if (!(rain_mmh >= 0.0)) {
    throw DomainError("rain rate must be non-negative, got " + std::to_string(rain_mmh));
  }
  if (rain_mmh == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(zr.a) + 10.0 * zr.b * std::log10(rain_mmh);
}

double rainrate_from_dbz(double dbz, const ZrParams& zr) {
  if (dbz == -std::numeric_limits<double>::infinity()) return 0.0;
  return std::pow(std::pow(10.0, dbz / 10.0) / zr.a, 1.0 / zr.b);
}

// ---- class masks ------------------------------------------------------------

const Grid& ClassMasks::channel(std::size_t i) const {
  switch (i) {
    case 0: return m1;
    case 1: return m3;
    case 2: return m10;
  }
  throw PreconditionError("class channel index out of range");
}

Grid& ClassMasks::channel(std::size_t i) {
  return const_cast<Grid&>(std::as_const(*this).channel(i));
}

Grid ClassMasks::labels() const {
  Grid out = Grid::mask(m1.geometry());
  out.set_timestamp(m1.timestamp());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values()[i] = m1.values()[i] + m3.values()[i] + m10.values()[i];
  }
  return out;
}

bool ClassMasks::nested() const {
  for (std::size_t i = 0; i < m1.size(); ++i) {
    if (m10.values()[i] > m3.values()[i] || m3.values()[i] > m1.values()[i]) return false;
  }
  return true;
}

ClassMasks class_masks(const Grid& reflectivity, const std::array<double, 3>& thresholds) {
  require(thresholds[0] < thresholds[1] && thresholds[1] < thresholds[2],
          "class thresholds must be strictly increasing");
  ClassMasks masks{Grid::mask(reflectivity.geometry()), Grid::mask(reflectivity.geometry()),
                   Grid::mask(reflectivity.geometry()),
                   Grid::mask(reflectivity.geometry(), 1.0f), thresholds};
  for (std::size_t i = 0; i < reflectivity.size(); ++i) {
    const float z = reflectivity.values()[i];
    if (reflectivity.is_nodata(z)) {
      masks.valid.values()[i] = 0.0f;
      continue;
    }
    for (std::size_t k = 0; k < 3; ++k) {
      // float comparison so a stored 38.8f counts as 38.8 dBZ
      masks.channel(k).values()[i] = z >= static_cast<float>(thresholds[k]) ? 1.0f : 0.0f;
    }
  }
  for (auto* g : {&masks.m1, &masks.m3, &masks.m10, &masks.valid}) {
    g->set_timestamp(reflectivity.timestamp());
  }
  return masks;
}

void write_class_masks(const ClassMasks& masks, const std::filesystem::path& stem) {
  const auto base = stem.string();
  write_grid(masks.m1, base + ".m1.sgrd");
  write_grid(masks.m3, base + ".m3.sgrd");
  write_grid(masks.m10, base + ".m10.sgrd");
  write_grid(masks.valid, base + ".valid.sgrd");
}

ClassMasks read_class_masks(const std::filesystem::path& stem) {
  const auto base = stem.string();
  ClassMasks masks{read_grid(base + ".m1.sgrd"), read_grid(base + ".m3.sgrd"),
                   read_grid(base + ".m10.sgrd"), Grid(), kClassThresholdsDbz};
  const std::filesystem::path valid_path = base + ".valid.sgrd";
  masks.valid = std::filesystem::exists(valid_path) ? read_grid(valid_path)
                                                     : Grid::mask(masks.m1.geometry(), 1.0f);
  for (const Grid* g : {&masks.m3, &masks.m10, &masks.valid}) {
    if (!(g->geometry() == masks.m1.geometry())) {
      throw DataError("class masks disagree on geometry", base);
    }
  }
  return masks;
}

// ---- registration -----------------------------------------------------------

namespace {

bool has_variance(const Grid& g) {
  bool seen = false;
  float first = 0.0f;
  for (float v : g.values()) {
    if (g.is_nodata(v)) continue;
    if (!seen) {
      first = v;
      seen = true;
    } else if (v != first) {
      return true;
    }
  }
  return false;
}

struct Candidate {
  int d_row;
  int d_col;
  double score;
};

bool preferred(const Candidate& a, const Candidate& b) {
  constexpr double kTie = 1e-12;
  if (a.score > b.score + kTie) return true;
  if (b.score > a.score + kTie) return false;
  const int la = std::abs(a.d_row) + std::abs(a.d_col);
  const int lb = std::abs(b.d_row) + std::abs(b.d_col);
  if (la != lb) return la < lb;
  if (a.d_row != b.d_row) return a.d_row < b.d_row;
  return a.d_col < b.d_col;
}

}  // namespace

namespace {

std::size_t min_overlap_for(const Grid& g) { return std::max<std::size_t>(16, g.size() / 4); }

// Score every shift on the same SAR window when it is large enough; otherwise the
// overlap shrinks with the shift.
int search_margin(const Grid& g, int radius) {
  const auto rows = static_cast<int>(g.rows());
  const auto cols = static_cast<int>(g.cols());
  const bool fixed = rows > 2 * radius && cols > 2 * radius &&
                     static_cast<std::size_t>(rows - 2 * radius) * static_cast<std::size_t>(cols - 2 * radius) >=
                         min_overlap_for(g);
  return fixed ? radius : 0;
}

std::optional<double> ncc_at(const Grid& x_grid, const Grid& y_grid, int dr, int dc, int margin) {
  const auto rows = static_cast<int>(x_grid.rows());
  const auto cols = static_cast<int>(x_grid.cols());
  const int r0 = std::max(margin, -dr), r1 = std::min(rows - margin, rows - dr);
  const int c0 = std::max(margin, -dc), c1 = std::min(cols - margin, cols - dc);
  if (r1 <= r0 || c1 <= c0) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  std::size_t n = 0;
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) {
      const float x = x_grid(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      const float y = y_grid(static_cast<std::size_t>(r + dr), static_cast<std::size_t>(c + dc));
      if (x_grid.is_nodata(x) || y_grid.is_nodata(y)) continue;
      sx += x;
      sy += y;
      sxx += static_cast<double>(x) * x;
      syy += static_cast<double>(y) * y;
      sxy += static_cast<double>(x) * y;
      ++n;
    }
  }
  if (n < min_overlap_for(x_grid)) return std::nullopt;
  const double nn = static_cast<double>(n);
  const double vx = nn * sxx - sx * sx;
  const double vy = nn * syy - sy * sy;
  if (!(vx > 0.0) || !(vy > 0.0)) return std::nullopt;
  return (nn * sxy - sx * sy) / std::sqrt(vx * vy);
}

}  // namespace

RegistrationOffset register_translation(const Grid& sar_feature, const Grid& radar_mask,
                                        int search_radius_px) {
  require(sar_feature.rows() == radar_mask.rows() && sar_feature.cols() == radar_mask.cols(),
          "registration inputs must share geometry");
  require(search_radius_px >= 0, "search radius must be non-negative");
  if (!has_variance(sar_feature) || !has_variance(radar_mask)) {
    throw NoSignalError("registration input has zero variance");
  }
  const int margin = search_margin(sar_feature, search_radius_px);
  std::optional<Candidate> best;
  for (int dr = -search_radius_px; dr <= search_radius_px; ++dr) {
    for (int dc = -search_radius_px; dc <= search_radius_px; ++dc) {
      const auto score = ncc_at(sar_feature, radar_mask, dr, dc, margin);
      if (!score) continue;
      const Candidate cand{dr, dc, *score};
      if (!best || preferred(cand, *best)) best = cand;
    }
  }
  if (!best) throw NoSignalError("no search offset had a non-degenerate overlap");
  return {best->d_row, best->d_col, std::clamp(best->score, -1.0, 1.0)};
}

namespace {

// Feature thresholded so the fraction of ones matches the radar mask over the pixels
// where both are valid under the given shift.
Grid binarize_to_coverage(const Grid& feature, const Grid& mask, const RegistrationOffset& at) {
  const auto rows = static_cast<long>(feature.rows());
  const auto cols = static_cast<long>(feature.cols());
  std::vector<float> vals;
  vals.reserve(feature.size());
  double ones = 0.0;
  for (long r = 0; r < rows; ++r) {
    const long mr = r + at.d_row;
    if (mr < 0 || mr >= rows) continue;
    for (long c = 0; c < cols; ++c) {
      const long mc = c + at.d_col;
      if (mc < 0 || mc >= cols) continue;
      const float x = feature(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      const float y = mask(static_cast<std::size_t>(mr), static_cast<std::size_t>(mc));
      if (feature.is_nodata(x) || mask.is_nodata(y)) continue;
      vals.push_back(x);
      ones += y >= 0.5f ? 1.0 : 0.0;
    }
  }
  const auto k = static_cast<std::size_t>(std::llround(ones));
  if (vals.empty() || k == 0 || k == vals.size()) {
    throw NoSignalError("radar mask has no rain/no-rain contrast on the overlap");
  }
  std::nth_element(vals.begin(), vals.begin() + static_cast<long>(k - 1), vals.end(), std::greater<>());
  const float thr = vals[k - 1];
  Grid out(feature.geometry(), DType::Float32, 0.0f, feature.nodata(), feature.timestamp());
  for (std::size_t i = 0; i < feature.size(); ++i) {
    const float x = feature.values()[i];
    out.values()[i] = feature.is_nodata(x) ? feature.nodata() : (x >= thr ? 1.0f : 0.0f);
  }
  return out;
}

}  // namespace

RegistrationOffset register_coverage_matched(const Grid& sar_feature, const Grid& radar_mask,
                                             int search_radius_px, int max_rounds) {
  require(sar_feature.rows() == radar_mask.rows() && sar_feature.cols() == radar_mask.cols(),
          "registration inputs must share geometry");
  require(max_rounds >= 1, "at least one registration round is needed");
  auto off = register_translation(binarize_to_coverage(sar_feature, radar_mask, {}), radar_mask,
                                  search_radius_px);
  for (int round = 1; round < max_rounds; ++round) {
    const auto next = register_translation(binarize_to_coverage(sar_feature, radar_mask, off),
                                           radar_mask, search_radius_px);
    if (next.same_shift(off)) break;
    off = next;
  }
  // The threshold is only exact at the true shift, so each neighbour gets its own.
  const int margin = search_margin(sar_feature, search_radius_px);
  std::optional<Candidate> best;
  for (int dr = off.d_row - 1; dr <= off.d_row + 1; ++dr) {
    for (int dc = off.d_col - 1; dc <= off.d_col + 1; ++dc) {
      if (std::abs(dr) > search_radius_px || std::abs(dc) > search_radius_px) continue;
      std::optional<double> score;
      try {
        score = ncc_at(binarize_to_coverage(sar_feature, radar_mask, {dr, dc, 0.0}), radar_mask, dr, dc, margin);
      } catch (const NoSignalError&) {
        continue;
      }
      if (!score) continue;
      const Candidate cand{dr, dc, *score};
      if (!best || preferred(cand, *best)) best = cand;
    }
  }
  if (!best) return off;
  return {best->d_row, best->d_col, std::clamp(best->score, -1.0, 1.0)};
}

Grid apply_offset(const Grid& grid, const RegistrationOffset& offset) {
  require(static_cast<std::size_t>(std::abs(offset.d_row)) <= grid.rows() &&
              static_cast<std::size_t>(std::abs(offset.d_col)) <= grid.cols(),
          "offset exceeds grid dimensions");
  Grid out(grid.geometry(), grid.dtype(), grid.nodata(), grid.nodata(), grid.timestamp());
  const auto rows = static_cast<long>(grid.rows());
  const auto cols = static_cast<long>(grid.cols());
  for (long r = 0; r < rows; ++r) {
    const long sr = r + offset.d_row;
    if (sr < 0 || sr >= rows) continue;
    for (long c = 0; c < cols; ++c) {
      const long sc = c + offset.d_col;
      if (sc < 0 || sc >= cols) continue;
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
          grid(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc));
    }
  }
  return out;
}

OffsetOverrides read_offset_overrides(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto origin = path.string();
  expect_columns(table, {"swath", "patch", "d_row", "d_col"}, origin);
  const auto is = table.column("swath"), ip = table.column("patch");
  const auto ir = table.column("d_row"), ic = table.column("d_col");
  OffsetOverrides out;
  for (const auto& row : table.rows) {
    out[{row[is], row[ip]}] = {static_cast<int>(parse_int(row[ir], origin)),
                               static_cast<int>(parse_int(row[ic], origin)), 1.0};
  }
  return out;
}

}  // namespace sarrain
