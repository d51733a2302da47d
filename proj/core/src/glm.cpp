#include "sarrain/glm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "sarrain/csv.hpp"
#include "sarrain/error.hpp"

namespace sarrain {

namespace {

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned> rank_;
};

}  // namespace

ClusterResult cluster_events(std::span<const LightningEvent> events, const GridGeometry& geometry,
                             Adjacency adjacency) {
  geometry.validate();
  ClusterResult result;
  // pixel -> member events
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> occupied;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (!std::isfinite(e.lat) || !std::isfinite(e.lon) || !std::isfinite(e.time_s)) {
      ++result.rejected;
      continue;
    }
    const auto [fr, fc] = geometry.pixel_of(e.lat, e.lon);
    const auto r = static_cast<std::ptrdiff_t>(std::floor(fr));
    const auto c = static_cast<std::ptrdiff_t>(std::floor(fc));
    if (!geometry.contains(r, c)) {
      ++result.rejected;
      continue;
    }
    occupied[{static_cast<std::size_t>(r), static_cast<std::size_t>(c)}].push_back(i);
  }

  std::vector<std::pair<std::size_t, std::size_t>> pixels;
  pixels.reserve(occupied.size());
  for (const auto& [px, members] : occupied) pixels.push_back(px);
  DisjointSet sets(pixels.size());
  const bool diagonal = adjacency == Adjacency::Eight;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const auto [r, c] = pixels[i];
    // forward neighbours only; the map is row-major ordered
    const std::pair<long, long> steps[] = {{0, 1}, {1, -1}, {1, 0}, {1, 1}};
    for (const auto& [dr, dc] : steps) {
      if (!diagonal && dr != 0 && dc != 0) continue;
      const long nr = static_cast<long>(r) + dr, nc = static_cast<long>(c) + dc;
      if (nr < 0 || nc < 0) continue;
      const std::pair<std::size_t, std::size_t> key{static_cast<std::size_t>(nr),
                                                     static_cast<std::size_t>(nc)};
      const auto it = std::lower_bound(pixels.begin(), pixels.end(), key);
      if (it != pixels.end() && *it == key) {
        sets.unite(i, static_cast<std::size_t>(it - pixels.begin()));
      }
    }
  }

  std::map<std::size_t, std::size_t> cluster_of_root;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const auto root = sets.find(i);
    auto [it, fresh] = cluster_of_root.emplace(root, result.clusters.size());
    if (fresh) result.clusters.emplace_back();
    auto& cl = result.clusters[it->second];
    cl.pixels.push_back(pixels[i]);
    const auto& members = occupied[pixels[i]];
    cl.events.insert(cl.events.end(), members.begin(), members.end());
  }
  for (auto& cl : result.clusters) std::sort(cl.events.begin(), cl.events.end());
  return result;
}

double haversine_km(double lat1, double lon1, double lat2, double lon2) noexcept {
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  const double dlat = (lat2 - lat1) * kDeg;
  const double dlon = (lon2 - lon1) * kDeg;
  const double s = std::sin(dlat / 2.0);
  const double t = std::sin(dlon / 2.0);
  const double h = s * s + std::cos(lat1 * kDeg) * std::cos(lat2 * kDeg) * t * t;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

bool flash_pair(const LightningEvent& a, const LightningEvent& b) noexcept {
  return std::abs(a.time_s - b.time_s) < kFlashMaxDtS &&
         haversine_km(a.lat, a.lon, b.lat, b.lon) < kFlashMaxDistanceKm;
}

std::vector<Flash> group_flashes(std::span<const LightningEvent> events) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    require(events[i - 1].time_s <= events[i].time_s, "lightning events must be time-sorted");
  }
  const std::size_t n = events.size();
  DisjointSet sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n && events[j].time_s - events[i].time_s < kFlashMaxDtS; ++j) {
      if (flash_pair(events[i], events[j])) sets.unite(i, j);
    }
  }
  std::vector<Flash> flashes;
  std::map<std::size_t, std::size_t> flash_of_root;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = events[i];
    auto [it, fresh] = flash_of_root.emplace(sets.find(i), flashes.size());
    if (fresh) {
      flashes.push_back({{}, e.time_s, e.time_s, e.lat, e.lat, e.lon, e.lon});
    }
    auto& f = flashes[it->second];
    f.members.push_back(i);
    f.start_s = std::min(f.start_s, e.time_s);
    f.end_s = std::max(f.end_s, e.time_s);
    f.min_lat = std::min(f.min_lat, e.lat);
    f.max_lat = std::max(f.max_lat, e.lat);
    f.min_lon = std::min(f.min_lon, e.lon);
    f.max_lon = std::max(f.max_lon, e.lon);
  }
  return flashes;
}

Grid rasterize_lightning(const ClusterResult& clusters, std::span<const LightningEvent> events,
                         const GridGeometry& geometry, double acquisition_time_s,
                         double max_dt_s) {
  Grid mask = Grid::mask(geometry);
  mask.set_timestamp(static_cast<std::int64_t>(std::llround(acquisition_time_s)));
  for (const auto& cl : clusters.clusters) {
    const bool in_window = std::any_of(cl.events.begin(), cl.events.end(), [&](std::size_t i) {
      require(i < events.size(), "cluster refers to a missing event");
      return std::abs(events[i].time_s - acquisition_time_s) <= max_dt_s;
    });
    if (!in_window) continue;
    for (const auto& [r, c] : cl.pixels) {
      require(r < geometry.rows && c < geometry.cols, "cluster pixel outside the geometry");
      mask(r, c) = 1.0f;
    }
  }
  return mask;
}

std::vector<LightningEvent> read_events_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto origin = path.string();
  expect_columns(table, {"time_s", "lat", "lon"}, origin);
  const auto it = table.column("time_s"), ia = table.column("lat"), io = table.column("lon");
  std::vector<LightningEvent> events;
  events.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    events.push_back({parse_double(row[it], origin), parse_double(row[ia], origin),
                      parse_double(row[io], origin)});
  }
  return events;
}

}  // namespace sarrain
