#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "sarrain/raster.hpp"

namespace sarrain {

struct LightningEvent {
  double time_s = 0.0;
  double lat = 0.0;
  double lon = 0.0;
};

enum class Adjacency { Four = 4, Eight = 8 };

struct EventCluster {
  std::vector<std::size_t> events;  // indices into the input list
  std::vector<std::pair<std::size_t, std::size_t>> pixels;  // sorted, unique
};

struct ClusterResult {
  std::vector<EventCluster> clusters;
  std::size_t rejected = 0;  // events outside the geometry
};

/// Connected components of event-occupied pixels. Clusters are ordered by
/// their first pixel in row-major order, so the result does not depend on
/// event order apart from the member index lists.
ClusterResult cluster_events(std::span<const LightningEvent> events, const GridGeometry& geometry,
                             Adjacency adjacency = Adjacency::Eight);

inline constexpr double kFlashMaxDtS = 0.33;
inline constexpr double kFlashMaxDistanceKm = 16.5;
inline constexpr double kEarthRadiusKm = 6371.0088;

double haversine_km(double lat1, double lon1, double lat2, double lon2) noexcept;

/// Pairing rule: dt < 0.33 s and great-circle distance < 16.5 km.
bool flash_pair(const LightningEvent& a, const LightningEvent& b) noexcept;

struct Flash {
  std::vector<std::size_t> members;  // ascending
  double start_s = 0.0;
  double end_s = 0.0;
  double min_lat = 0.0, max_lat = 0.0, min_lon = 0.0, max_lon = 0.0;
};

/// Transitive closure of the pairing rule over time-sorted events. Flashes
/// are ordered by their first member.
std::vector<Flash> group_flashes(std::span<const LightningEvent> events);

/// 1 on every pixel of a cluster with at least one member within max_dt_s
/// of the acquisition time.
Grid rasterize_lightning(const ClusterResult& clusters, std::span<const LightningEvent> events,
                         const GridGeometry& geometry, double acquisition_time_s,
                         double max_dt_s = 1200.0);

/// CSV "time_s,lat,lon".
std::vector<LightningEvent> read_events_csv(const std::filesystem::path& path);

}  // namespace sarrain
