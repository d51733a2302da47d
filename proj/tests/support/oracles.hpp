#pragma once

// Brute-force reference implementations the library is checked against.
// They favour obviousness over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sarrain/glm.hpp"
#include "sarrain/raster.hpp"

namespace oracle {

inline std::filesystem::path temp_dir(const std::string& name) {
  const char* base = std::getenv("SARRAIN_TEST_TMP");
  auto dir = std::filesystem::path(base ? base : std::filesystem::temp_directory_path().string()) /
             ("sarrain_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Number of tiles covering each pixel, counted directly from tile origins.
inline std::vector<int> coverage(std::size_t rows, std::size_t cols, std::size_t tile,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& origins) {
  std::vector<int> count(rows * cols, 0);
  for (auto [r0, c0] : origins) {
    for (std::size_t r = r0; r < r0 + tile; ++r) {
      for (std::size_t c = c0; c < c0 + tile; ++c) ++count[r * cols + c];
    }
  }
  return count;
}

// Nearest-land distance in km by scanning every land pixel.
inline std::vector<double> distance_scan(const sarrain::Grid& land, double cap_km) {
  const std::size_t rows = land.rows(), cols = land.cols();
  std::vector<double> out(rows * cols, cap_km);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t lr = 0; lr < rows; ++lr) {
        for (std::size_t lc = 0; lc < cols; ++lc) {
          if (land(lr, lc) != 1.0f) continue;
          const double dr = static_cast<double>(r) - static_cast<double>(lr);
          const double dc = static_cast<double>(c) - static_cast<double>(lc);
          best = std::min(best, dr * dr + dc * dc);
        }
      }
      if (std::isfinite(best)) {
        out[r * cols + c] = std::min(cap_km, std::sqrt(best) * (land.pixel_spacing_m() / 1000.0));
      }
    }
  }
  return out;
}

// Direct convolution with a dense identity-minus-box kernel, mirror-padded
// (edge sample repeated: -1 -> 0, n -> n-1).
inline std::vector<double> highpass_direct(const sarrain::Grid& g, std::size_t w) {
  const long rows = static_cast<long>(g.rows()), cols = static_cast<long>(g.cols());
  auto mirror = [](long i, long n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  const long lo = static_cast<long>((w - 1) / 2), hi = static_cast<long>(w / 2);
  std::vector<double> out(g.size());
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      double mean = 0.0;
      for (long dr = -lo; dr <= hi; ++dr) {
        for (long dc = -lo; dc <= hi; ++dc) {
          mean += g(static_cast<std::size_t>(mirror(r + dr, rows)),
                    static_cast<std::size_t>(mirror(c + dc, cols)));
        }
      }
      mean /= static_cast<double>(w * w);
      out[static_cast<std::size_t>(r * cols + c)] =
          g(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) - mean;
    }
  }
  return out;
}

// counts[t][p] by enumerating every pixel.
inline std::vector<std::vector<std::uint64_t>> confusion_enum(const std::vector<int>& truth,
                                                              const std::vector<int>& pred,
                                                              const std::vector<int>& valid,
                                                              std::size_t n) {
  std::vector<std::vector<std::uint64_t>> cm(n, std::vector<std::uint64_t>(n, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (valid[i]) ++cm[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
  }
  return cm;
}

// Macro F1 straight from the definition: mean recall over rows, mean
// precision over columns, harmonic mean of the two.
inline double macro_f1(const std::vector<std::vector<std::uint64_t>>& cm) {
  const std::size_t n = cm.size();
  double recall = 0.0, precision = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row += static_cast<double>(cm[k][j]);
      col += static_cast<double>(cm[j][k]);
    }
    if (row > 0) recall += static_cast<double>(cm[k][k]) / row;
    if (col > 0) precision += static_cast<double>(cm[k][k]) / col;
  }
  recall /= static_cast<double>(n);
  precision /= static_cast<double>(n);
  return recall + precision > 0 ? 2 * recall * precision / (recall + precision) : 0.0;
}

inline double haversine(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  const double a = std::pow(std::sin((lat2 - lat1) * kDeg / 2), 2) +
                   std::cos(lat1 * kDeg) * std::cos(lat2 * kDeg) *
                       std::pow(std::sin((lon2 - lon1) * kDeg / 2), 2);
  return 2 * 6371.0088 * std::asin(std::min(1.0, std::sqrt(a)));
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Partition as sorted member lists, groups sorted by first member.
inline std::vector<std::vector<std::size_t>> groups(UnionFind& uf) {
  std::vector<std::vector<std::size_t>> by_root(uf.parent.size());
  for (std::size_t i = 0; i < uf.parent.size(); ++i) by_root[uf.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& g : by_root) {
    if (!g.empty()) out.push_back(g);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// All O(n^2) event pairs under the flash rule.
inline std::vector<std::vector<std::size_t>> flashes_pairwise(
    const std::vector<sarrain::LightningEvent>& ev) {
  UnionFind uf(ev.size());
  for (std::size_t i = 0; i < ev.size(); ++i) {
    for (std::size_t j = i + 1; j < ev.size(); ++j) {
      if (std::abs(ev[i].time_s - ev[j].time_s) < 0.33 &&
          haversine(ev[i].lat, ev[i].lon, ev[j].lat, ev[j].lon) < 16.5) {
        uf.unite(i, j);
      }
    }
  }
  return groups(uf);
}

// Pixel components under 4- or 8-adjacency by checking every pixel pair.
inline std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pixel_components(
    std::vector<std::pair<std::size_t, std::size_t>> pixels, bool eight) {
  std::sort(pixels.begin(), pixels.end());
  pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
  UnionFind uf(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    for (std::size_t j = i + 1; j < pixels.size(); ++j) {
      const long dr = std::labs(static_cast<long>(pixels[i].first) - static_cast<long>(pixels[j].first));
      const long dc = std::labs(static_cast<long>(pixels[i].second) - static_cast<long>(pixels[j].second));
      const bool adj = eight ? std::max(dr, dc) == 1 : dr + dc == 1;
      if (adj) uf.unite(i, j);
    }
  }
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out;
  for (const auto& g : groups(uf)) {
    std::vector<std::pair<std::size_t, std::size_t>> comp;
    for (auto k : g) comp.push_back(pixels[k]);
    out.push_back(comp);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Normalized cross-correlation peak over a square window, checked at
// every offset, with the documented tie order.
struct NccPeak {
  int d_row = 0, d_col = 0;
  double score = -2.0;
};
// margin > 0 scores every shift on the SAR window [margin, size - margin)
inline NccPeak ncc_exhaustive(const sarrain::Grid& a, const sarrain::Grid& b, int radius,
                              std::size_t min_overlap, int margin = 0) {
  NccPeak best;
  bool have = false;
  const int rows = static_cast<int>(a.rows()), cols = static_cast<int>(a.cols());
  for (int dr = -radius; dr <= radius; ++dr) {
    for (int dc = -radius; dc <= radius; ++dc) {
      std::vector<double> x, y;
      for (int r = margin; r < rows - margin; ++r) {
        for (int c = margin; c < cols - margin; ++c) {
          if (r + dr < 0 || r + dr >= rows || c + dc < 0 || c + dc >= cols) continue;
          const float xv = a(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
          const float yv = b(static_cast<std::size_t>(r + dr), static_cast<std::size_t>(c + dc));
          if (a.is_nodata(xv) || b.is_nodata(yv)) continue;
          x.push_back(xv);
          y.push_back(yv);
        }
      }
      if (x.size() < min_overlap) continue;
      const double n = static_cast<double>(x.size());
      const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
      const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
      double sxy = 0, sxx = 0, syy = 0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
      }
      if (sxx <= 0 || syy <= 0) continue;
      const double s = sxy / std::sqrt(sxx * syy);
      auto better = [&] {
        if (!have) return true;
        if (s > best.score + 1e-9) return true;
        if (s < best.score - 1e-9) return false;
        const int l1 = std::abs(dr) + std::abs(dc), l0 = std::abs(best.d_row) + std::abs(best.d_col);
        if (l1 != l0) return l1 < l0;
        return dr != best.d_row ? dr < best.d_row : dc < best.d_col;
      };
      if (better()) {
        best = {dr, dc, s};
        have = true;
      }
    }
  }
  return best;
}

inline sarrain::Grid random_grid(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                                 double lo = 0.0, double hi = 1.0, double spacing = 400.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  sarrain::Grid g(sarrain::GridGeometry{rows, cols, spacing, {27.0, -80.0}});
  for (auto& v : g.values()) v = static_cast<float>(u(rng));
  return g;
}

}  // namespace oracle
