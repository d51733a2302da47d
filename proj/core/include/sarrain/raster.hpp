#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace sarrain {

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const GeoPoint&) const = default;
};

/// Georeferencing of a square-pixel raster. The origin is the top-left
/// corner of pixel (0, 0); rows grow southward and columns eastward on a
/// flat local-tangent plane.
struct GridGeometry {
  std::size_t rows = 1;
  std::size_t cols = 1;
  double pixel_spacing_m = 1.0;
  GeoPoint origin;

  std::size_t size() const noexcept { return rows * cols; }
  bool contains(std::ptrdiff_t row, std::ptrdiff_t col) const noexcept {
    return row >= 0 && col >= 0 && static_cast<std::size_t>(row) < rows &&
           static_cast<std::size_t>(col) < cols;
  }
  void validate() const;

  /// Geometry of the sub-window whose top-left pixel is (row, col).
  GridGeometry window(std::size_t row, std::size_t col, std::size_t height,
                      std::size_t width) const;

  /// Fractional (row, col) of a geographic location.
  std::pair<double, double> pixel_of(double lat, double lon) const;
  /// Location of the center of pixel (row, col).
  GeoPoint center_of(std::size_t row, std::size_t col) const;

  bool operator==(const GridGeometry&) const = default;
};

enum class DType : std::uint8_t { Float32 = 0, UInt8 = 1 };

/// Single-band raster. Byte grids (masks, labels) are held as floats in
/// memory and narrowed on write; their values must be integers in [0, 255].
class Grid {
 public:
  static constexpr float kDefaultNodata = -9999.0f;
  static constexpr float kMaskNodata = 255.0f;

  Grid() : Grid(GridGeometry{}) {}
  explicit Grid(const GridGeometry& geometry, DType dtype = DType::Float32,
                float fill = 0.0f, float nodata = kDefaultNodata,
                std::int64_t timestamp = 0);
  Grid(const GridGeometry& geometry, std::vector<float> values,
       DType dtype = DType::Float32, float nodata = kDefaultNodata,
       std::int64_t timestamp = 0);

  static Grid mask(const GridGeometry& geometry, float fill = 0.0f);

  const GridGeometry& geometry() const noexcept { return geometry_; }
  std::size_t rows() const noexcept { return geometry_.rows; }
  std::size_t cols() const noexcept { return geometry_.cols; }
  std::size_t size() const noexcept { return values_.size(); }
  double pixel_spacing_m() const noexcept { return geometry_.pixel_spacing_m; }

  DType dtype() const noexcept { return dtype_; }
  bool is_byte() const noexcept { return dtype_ == DType::UInt8; }
  float nodata() const noexcept { return nodata_; }
  std::int64_t timestamp() const noexcept { return timestamp_; }
  void set_timestamp(std::int64_t t) noexcept { timestamp_ = t; }

  bool is_nodata(float v) const noexcept;
  bool valid_at(std::size_t row, std::size_t col) const noexcept {
    return !is_nodata((*this)(row, col));
  }

  float operator()(std::size_t row, std::size_t col) const noexcept {
    return values_[row * geometry_.cols + col];
  }
  float& operator()(std::size_t row, std::size_t col) noexcept {
    return values_[row * geometry_.cols + col];
  }
  std::span<const float> values() const noexcept { return values_; }
  std::span<float> values() noexcept { return values_; }

  /// True when the grid holds only 0, 1 or nodata.
  bool is_binary() const noexcept;

  /// Header and payload compare bit-for-bit (NaNs included).
  bool identical(const Grid& other) const noexcept;
  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.identical(b);
  }

 private:
  GridGeometry geometry_;
  DType dtype_ = DType::Float32;
  float nodata_ = kDefaultNodata;
  std::int64_t timestamp_ = 0;
  std::vector<float> values_;
};

// ---- SGRID file format -----------------------------------------------------

inline constexpr std::uint32_t kSgridVersion = 1;
inline constexpr std::size_t kSgridHeaderBytes = 53;

void write_grid(const Grid& grid, const std::filesystem::path& path);
Grid read_grid(const std::filesystem::path& path);

/// Encoded SGRID bytes; read_grid/write_grid are thin wrappers around these.
std::vector<std::uint8_t> encode_grid(const Grid& grid);
Grid decode_grid(std::span<const std::uint8_t> bytes,
                 std::string_view origin = {});

/// Writes "<path-without-extension>.json" next to a grid file.
void write_sidecar(const std::filesystem::path& grid_path, std::string_view json);

// ---- resampling, tiling, distances ------------------------------------------

enum class ResampleMethod { BlockMean, Nearest };

Grid resample(const Grid& grid, double target_spacing_m, ResampleMethod method);

Grid crop(const Grid& grid, std::size_t row, std::size_t col, std::size_t height,
          std::size_t width);

/// Tile origins along one axis: advance by stride, then clamp a final tile
/// flush to the far edge when the stride overshoots.
std::vector<std::size_t> tile_offsets(std::size_t extent, std::size_t tile_px,
                                      std::size_t stride_px);

struct Tile {
  std::size_t row_offset = 0;
  std::size_t col_offset = 0;
  Grid grid;
};

/// stride_px == 0 selects the default half-width stride.
std::vector<Tile> tile(const Grid& grid, std::size_t tile_px,
                       std::size_t stride_px = 0);

inline constexpr double kDefaultCoastCapKm = 100.0;

/// Euclidean distance (km) from each pixel to the nearest land pixel
/// (value 1). Exact two-pass squared-distance transform; results are capped.
Grid distance_to_coast(const Grid& land_mask, double cap_km = kDefaultCoastCapKm);

}  // namespace sarrain
