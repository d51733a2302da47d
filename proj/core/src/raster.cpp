#include "sarrain/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "sarrain/error.hpp"

namespace sarrain {

namespace {

constexpr double kMetersPerDegree = 111320.0;
constexpr double kPi = 3.14159265358979323846;
constexpr char kMagic[4] = {'S', 'G', 'R', 'D'};

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    auto bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

bool is_byte_value(float v) {
  return v >= 0.0f && v <= 255.0f && std::floor(v) == v;
}

}  // namespace

// ---- GridGeometry ---------------------------------------------------------

void GridGeometry::validate() const {
  require(rows >= 1 && cols >= 1, "grid dimensions must be positive");
  require(pixel_spacing_m > 0.0 && std::isfinite(pixel_spacing_m),
          "pixel spacing must be positive");
}

GridGeometry GridGeometry::window(std::size_t row, std::size_t col,
                                  std::size_t height, std::size_t width) const {
  GridGeometry out = *this;
  out.rows = height;
  out.cols = width;
  const double dy = static_cast<double>(row) * pixel_spacing_m;
  const double dx = static_cast<double>(col) * pixel_spacing_m;
  out.origin.lat = origin.lat - dy / kMetersPerDegree;
  out.origin.lon =
      origin.lon + dx / (kMetersPerDegree * std::cos(origin.lat * kPi / 180.0));
  return out;
}

std::pair<double, double> GridGeometry::pixel_of(double lat, double lon) const {
  const double row = (origin.lat - lat) * kMetersPerDegree / pixel_spacing_m;
  const double col = (lon - origin.lon) * kMetersPerDegree *
                     std::cos(origin.lat * kPi / 180.0) / pixel_spacing_m;
  return {row, col};
}

GeoPoint GridGeometry::center_of(std::size_t row, std::size_t col) const {
  const double dy = (static_cast<double>(row) + 0.5) * pixel_spacing_m;
  const double dx = (static_cast<double>(col) + 0.5) * pixel_spacing_m;
  return {origin.lat - dy / kMetersPerDegree,
          origin.lon + dx / (kMetersPerDegree * std::cos(origin.lat * kPi / 180.0))};
}

// ---- Grid -------------------------------------------------------------------

Grid::Grid(const GridGeometry& geometry, DType dtype, float fill, float nodata,
           std::int64_t timestamp)
    : geometry_(geometry), dtype_(dtype), nodata_(nodata), timestamp_(timestamp) {
  geometry_.validate();
  values_.assign(geometry_.size(), fill);
}

Grid::Grid(const GridGeometry& geometry, std::vector<float> values, DType dtype,
           float nodata, std::int64_t timestamp)
    : geometry_(geometry),
      dtype_(dtype),
      nodata_(nodata),
      timestamp_(timestamp),
      values_(std::move(values)) {
  geometry_.validate();
  require(values_.size() == geometry_.size(),
          "grid payload length " + std::to_string(values_.size()) +
              " does not match " + std::to_string(geometry_.rows) + "x" +
              std::to_string(geometry_.cols));
}

Grid Grid::mask(const GridGeometry& geometry, float fill) {
  return Grid(geometry, DType::UInt8, fill, kMaskNodata);
}

bool Grid::is_nodata(float v) const noexcept {
  return std::isnan(v) || v == nodata_;
}

bool Grid::is_binary() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [this](float v) {
    return v == 0.0f || v == 1.0f || is_nodata(v);
  });
}

bool Grid::identical(const Grid& other) const noexcept {
  if (!(geometry_ == other.geometry_) || dtype_ != other.dtype_ ||
      timestamp_ != other.timestamp_ ||
      std::bit_cast<std::uint32_t>(nodata_) !=
          std::bit_cast<std::uint32_t>(other.nodata_)) {
    return false;
  }
  return std::memcmp(values_.data(), other.values_.data(),
                     values_.size() * sizeof(float)) == 0;
}

// ---- SGRID I/O --------------------------------------------------------------

std::vector<std::uint8_t> encode_grid(const Grid& grid) {
  std::vector<std::uint8_t> out;
  const std::size_t elem = grid.is_byte() ? 1 : 4;
  out.reserve(kSgridHeaderBytes + grid.size() * elem);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  ByteWriter w(out);
  w.put<std::uint32_t>(kSgridVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(grid.dtype()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(grid.rows()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(grid.cols()));
  w.put<double>(grid.pixel_spacing_m());
  w.put<double>(grid.geometry().origin.lat);
  w.put<double>(grid.geometry().origin.lon);
  w.put<std::int64_t>(grid.timestamp());
  w.put<float>(grid.nodata());
  if (grid.is_byte()) {
    for (float v : grid.values()) {
      if (!is_byte_value(v)) {
        throw PreconditionError("byte grid holds non-byte value " + std::to_string(v));
      }
      out.push_back(static_cast<std::uint8_t>(v));
    }
  } else {
    for (float v : grid.values()) w.put<float>(v);
  }
  return out;
}

Grid decode_grid(std::span<const std::uint8_t> bytes, std::string_view origin) {
  const std::string where(origin);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("missing SGRD magic", where);
  }
  if (bytes.size() < kSgridHeaderBytes) {
    throw CorruptionError("truncated SGRID header", where);
  }
  ByteReader r(bytes.subspan(4));
  const auto version = r.get<std::uint32_t>();
  if (version != kSgridVersion) {
    throw UnsupportedVersionError("SGRID version " + std::to_string(version), where);
  }
  const auto dtype_code = r.get<std::uint8_t>();
  if (dtype_code > 1) {
    throw UnsupportedVersionError("unknown SGRID dtype code " +
                                      std::to_string(dtype_code), where);
  }
  const auto dtype = static_cast<DType>(dtype_code);
  GridGeometry geom;
  geom.rows = r.get<std::uint32_t>();
  geom.cols = r.get<std::uint32_t>();
  geom.pixel_spacing_m = r.get<double>();
  geom.origin.lat = r.get<double>();
  geom.origin.lon = r.get<double>();
  const auto timestamp = r.get<std::int64_t>();
  const auto nodata = r.get<float>();
  if (geom.rows == 0 || geom.cols == 0 || !(geom.pixel_spacing_m > 0.0)) {
    throw CorruptionError("SGRID header has degenerate geometry", where);
  }
  const std::size_t elem = dtype == DType::UInt8 ? 1 : 4;
  const std::size_t expected = geom.size() * elem;
  const std::size_t payload = bytes.size() - kSgridHeaderBytes;
  if (payload != expected) {
    throw CorruptionError("SGRID payload is " + std::to_string(payload) +
                              " bytes, header implies " + std::to_string(expected),
                          where);
  }
  std::vector<float> values(geom.size());
  const auto body = bytes.subspan(kSgridHeaderBytes);
  if (dtype == DType::UInt8) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = body[i];
  } else {
    ByteReader pr(body);
    for (auto& v : values) v = pr.get<float>();
  }
  return Grid(geom, std::move(values), dtype, nodata, timestamp);
}

void write_grid(const Grid& grid, const std::filesystem::path& path) {
  const auto bytes = encode_grid(grid);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed", path.string());
}

Grid read_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open grid file", path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_grid(bytes, path.string());
}

void write_sidecar(const std::filesystem::path& grid_path, std::string_view json) {
  auto side = grid_path;
  side.replace_extension(".json");
  std::ofstream out(side, std::ios::trunc);
  if (!out) throw IoError("cannot open sidecar", side.string());
  out << json << '\n';
}

// ---- resampling -------------------------------------------------------------

Grid resample(const Grid& grid, double target_spacing_m, ResampleMethod method) {
  require(target_spacing_m > 0.0, "target spacing must be positive");
  const double factor = target_spacing_m / grid.pixel_spacing_m();
  require(factor >= 1.0 - 1e-9, "resample only coarsens grids");
  const double rounded = std::round(factor);
  const bool integral = std::abs(factor - rounded) <= 1e-9 * factor;
  if (method == ResampleMethod::BlockMean) {
    require(integral, "block_mean needs an integer resampling factor, got " +
                          std::to_string(factor));
    require(!grid.is_byte(), "mask grids must be resampled with nearest");
  }

  GridGeometry geom = grid.geometry();
  geom.pixel_spacing_m = target_spacing_m;
  geom.rows = static_cast<std::size_t>(std::ceil(static_cast<double>(grid.rows()) / factor - 1e-9));
  geom.cols = static_cast<std::size_t>(std::ceil(static_cast<double>(grid.cols()) / factor - 1e-9));
  Grid out(geom, grid.dtype(), 0.0f, grid.nodata(), grid.timestamp());

  if (method == ResampleMethod::Nearest) {
    for (std::size_t r = 0; r < geom.rows; ++r) {
      const auto sr = std::min(grid.rows() - 1,
                               static_cast<std::size_t>(std::floor(static_cast<double>(r) * factor + 1e-9)));
      for (std::size_t c = 0; c < geom.cols; ++c) {
        const auto sc = std::min(grid.cols() - 1,
                                 static_cast<std::size_t>(std::floor(static_cast<double>(c) * factor + 1e-9)));
        out(r, c) = grid(sr, sc);
      }
    }
    return out;
  }

  const auto f = static_cast<std::size_t>(rounded);
  for (std::size_t r = 0; r < geom.rows; ++r) {
    for (std::size_t c = 0; c < geom.cols; ++c) {
      double sum = 0.0;
      std::size_t n = 0;
      const std::size_t r1 = std::min(grid.rows(), (r + 1) * f);
      const std::size_t c1 = std::min(grid.cols(), (c + 1) * f);
      for (std::size_t sr = r * f; sr < r1; ++sr) {
        for (std::size_t sc = c * f; sc < c1; ++sc) {
          const float v = grid(sr, sc);
          if (grid.is_nodata(v)) continue;
          sum += v;
          ++n;
        }
      }
      out(r, c) = n == 0 ? grid.nodata() : static_cast<float>(sum / static_cast<double>(n));
    }
  }
  return out;
}

// ---- tiling -----------------------------------------------------------------

Grid crop(const Grid& grid, std::size_t row, std::size_t col, std::size_t height,
          std::size_t width) {
  require(row + height <= grid.rows() && col + width <= grid.cols(),
          "crop window exceeds grid bounds");
  std::vector<float> values(height * width);
  for (std::size_t r = 0; r < height; ++r) {
    const auto src = grid.values().subspan((row + r) * grid.cols() + col, width);
    std::copy(src.begin(), src.end(), values.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return Grid(grid.geometry().window(row, col, height, width), std::move(values),
              grid.dtype(), grid.nodata(), grid.timestamp());
}

std::vector<std::size_t> tile_offsets(std::size_t extent, std::size_t tile_px,
                                      std::size_t stride_px) {
  require(tile_px >= 1 && stride_px >= 1, "tile and stride must be positive");
  require(tile_px <= extent, "tile of " + std::to_string(tile_px) +
                                 " px is larger than grid extent " +
                                 std::to_string(extent));
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (; off + tile_px <= extent; off += stride_px) offsets.push_back(off);
  if (offsets.back() + tile_px < extent) offsets.push_back(extent - tile_px);
  return offsets;
}

std::vector<Tile> tile(const Grid& grid, std::size_t tile_px, std::size_t stride_px) {
  if (stride_px == 0) stride_px = std::max<std::size_t>(1, tile_px / 2);
  require(tile_px <= std::min(grid.rows(), grid.cols()),
          "tile larger than grid");
  const auto rows = tile_offsets(grid.rows(), tile_px, stride_px);
  const auto cols = tile_offsets(grid.cols(), tile_px, stride_px);
  std::vector<Tile> tiles;
  tiles.reserve(rows.size() * cols.size());
  for (auto r : rows) {
    for (auto c : cols) {
      tiles.push_back({r, c, crop(grid, r, c, tile_px, tile_px)});
    }
  }
  return tiles;
}

// ---- distance transform -----------------------------------------------------

namespace {

// Lower envelope of parabolas rooted at finite sites (Felzenszwalb &
// Huttenlocher). Entries equal to +inf are not sites.
void squared_distance_1d(std::span<const double> f, std::span<double> d,
                         std::vector<std::size_t>& v, std::vector<double>& z) {
  const std::size_t n = f.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  v.clear();
  z.clear();
  for (std::size_t q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    const double qd = static_cast<double>(q);
    while (!v.empty()) {
      const double vd = static_cast<double>(v.back());
      const double s = ((f[q] + qd * qd) - (f[v.back()] + vd * vd)) / (2.0 * (qd - vd));
      if (s <= z.back()) {
        v.pop_back();
        z.pop_back();
      } else {
        v.push_back(q);
        z.push_back(s);
        break;
      }
    }
    if (v.empty()) {
      v.push_back(q);
      z.push_back(-inf);
    }
  }
  if (v.empty()) {
    std::fill(d.begin(), d.end(), inf);
    return;
  }
  std::size_t k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const double qd = static_cast<double>(q);
    while (k + 1 < v.size() && z[k + 1] < qd) ++k;
    const double dq = qd - static_cast<double>(v[k]);
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

Grid distance_to_coast(const Grid& land_mask, double cap_km) {
  require(land_mask.is_byte() && land_mask.is_binary(),
          "distance_to_coast needs a 0/1 mask grid");
  require(cap_km > 0.0, "coast distance cap must be positive");
  const std::size_t rows = land_mask.rows();
  const std::size_t cols = land_mask.cols();
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<double> d2(rows * cols);
  for (std::size_t i = 0; i < d2.size(); ++i) {
    d2[i] = land_mask.values()[i] == 1.0f ? 0.0 : inf;
  }
  std::vector<std::size_t> v;
  std::vector<double> z;
  std::vector<double> in(std::max(rows, cols)), out(std::max(rows, cols));

  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(d2.begin() + static_cast<std::ptrdiff_t>(r * cols), cols, in.begin());
    squared_distance_1d({in.data(), cols}, {out.data(), cols}, v, z);
    std::copy_n(out.begin(), cols, d2.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) in[r] = d2[r * cols + c];
    squared_distance_1d({in.data(), rows}, {out.data(), rows}, v, z);
    for (std::size_t r = 0; r < rows; ++r) d2[r * cols + c] = out[r];
  }

  Grid out_grid(land_mask.geometry(), DType::Float32, 0.0f, Grid::kDefaultNodata,
                land_mask.timestamp());
  const double km_per_px = land_mask.pixel_spacing_m() / 1000.0;
  for (std::size_t i = 0; i < d2.size(); ++i) {
    const double km = std::isfinite(d2[i]) ? std::sqrt(d2[i]) * km_per_px : inf;
    out_grid.values()[i] = static_cast<float>(std::min(km, cap_km));
  }
  return out_grid;
}

}  // namespace sarrain
