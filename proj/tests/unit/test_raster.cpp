#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "sarrain/error.hpp"
#include "sarrain/raster.hpp"

using namespace sarrain;

namespace {

GridGeometry geom(std::size_t rows, std::size_t cols, double spacing = 400.0) {
  return {rows, cols, spacing, {27.5, -80.25}};
}

Grid from_rows(std::vector<std::vector<float>> rows, double spacing = 400.0) {
  Grid g(geom(rows.size(), rows[0].size(), spacing));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) g(r, c) = rows[r][c];
  }
  return g;
}

}  // namespace

TEST(Sgrid, FloatRoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  Grid g = oracle::random_grid(rng, 17, 23, -5.0, 5.0);
  g.values()[3] = std::numeric_limits<float>::quiet_NaN();
  g.values()[4] = -std::numeric_limits<float>::infinity();
  g.values()[5] = g.nodata();
  g.set_timestamp(1'525'000'123);
  const auto dir = oracle::temp_dir("sgrid_float");
  write_grid(g, dir / "g.sgrd");
  const Grid back = read_grid(dir / "g.sgrd");
  EXPECT_TRUE(back.identical(g));
  EXPECT_EQ(back.timestamp(), 1'525'000'123);
  EXPECT_EQ(back.geometry(), g.geometry());
}

TEST(Sgrid, ByteRoundTripIsBitExact) {
  Grid m = Grid::mask(geom(4, 5));
  for (std::size_t i = 0; i < m.size(); ++i) m.values()[i] = static_cast<float>(i % 2);
  m.values()[7] = m.nodata();
  const auto bytes = encode_grid(m);
  EXPECT_EQ(bytes.size(), kSgridHeaderBytes + m.size());
  EXPECT_TRUE(decode_grid(bytes).identical(m));
}

TEST(Sgrid, HeaderLayout) {
  Grid g(geom(2, 3, 100.0), DType::Float32, 1.5f, -1.0f, 42);
  const auto b = encode_grid(g);
  ASSERT_EQ(b.size(), kSgridHeaderBytes + 2 * 3 * 4);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "SGRD");
  std::uint32_t version, rows, cols;
  std::memcpy(&version, &b[4], 4);
  std::memcpy(&rows, &b[9], 4);
  std::memcpy(&cols, &b[13], 4);
  EXPECT_EQ(version, 1u);
  EXPECT_EQ(b[8], 0);
  EXPECT_EQ(rows, 2u);
  EXPECT_EQ(cols, 3u);
  double spacing;
  std::memcpy(&spacing, &b[17], 8);
  EXPECT_EQ(spacing, 100.0);
  std::int64_t ts;
  std::memcpy(&ts, &b[41], 8);
  EXPECT_EQ(ts, 42);
  float nodata, first;
  std::memcpy(&nodata, &b[49], 4);
  std::memcpy(&first, &b[53], 4);
  EXPECT_EQ(nodata, -1.0f);
  EXPECT_EQ(first, 1.5f);
}

TEST(Sgrid, BadMagicIsFormatError) {
  auto b = encode_grid(Grid(geom(2, 2)));
  std::memcpy(b.data(), "XXXX", 4);
  EXPECT_THROW(decode_grid(b), FormatError);
}

TEST(Sgrid, ShortPayloadIsCorruption) {
  const auto full = encode_grid(Grid(geom(256, 256)));
  const std::vector<std::uint8_t> cut(full.begin(), full.end() - 256 * 4);
  EXPECT_THROW(decode_grid(cut), CorruptionError);
}

TEST(Sgrid, UnknownDtypeIsUnsupportedVersion) {
  auto b = encode_grid(Grid(geom(2, 2)));
  b[8] = 7;
  EXPECT_THROW(decode_grid(b), UnsupportedVersionError);
}

TEST(Sgrid, UnknownVersionIsUnsupportedVersion) {
  auto b = encode_grid(Grid(geom(2, 2)));
  b[4] = 9;
  EXPECT_THROW(decode_grid(b), UnsupportedVersionError);
}

TEST(Sgrid, MissingFileIsIoError) {
  EXPECT_THROW(read_grid(oracle::temp_dir("sgrid_missing") / "none.sgrd"), IoError);
}

TEST(Sgrid, ByteGridRejectsNonByteValues) {
  Grid m = Grid::mask(geom(1, 2));
  m.values()[0] = 0.5f;
  EXPECT_THROW(encode_grid(m), PreconditionError);
}

TEST(Resample, BlockMeanOfTwoByTwo) {
  const Grid g = from_rows({{1, 3}, {5, 7}}, 100.0);
  const Grid r = resample(g, 200.0, ResampleMethod::BlockMean);
  ASSERT_EQ(r.rows(), 1u);
  ASSERT_EQ(r.cols(), 1u);
  EXPECT_FLOAT_EQ(r(0, 0), 4.0f);
  EXPECT_EQ(r.pixel_spacing_m(), 200.0);
}

TEST(Resample, FactorOneIsIdentity) {
  std::mt19937_64 rng(2);
  const Grid g = oracle::random_grid(rng, 9, 7);
  EXPECT_TRUE(resample(g, 400.0, ResampleMethod::BlockMean).identical(g));
  EXPECT_TRUE(resample(g, 400.0, ResampleMethod::Nearest).identical(g));
}

TEST(Resample, MeanSkipsNodata) {
  Grid g(geom(4, 4, 100.0), DType::Float32, Grid::kDefaultNodata);
  g(2, 1) = 8.0f;
  const Grid r = resample(g, 400.0, ResampleMethod::BlockMean);
  EXPECT_EQ(r(0, 0), 8.0f);
}

TEST(Resample, AllNodataBlockStaysNodata) {
  Grid g(geom(2, 4, 100.0), DType::Float32, Grid::kDefaultNodata);
  g(0, 0) = 1.0f;
  const Grid r = resample(g, 200.0, ResampleMethod::BlockMean);
  EXPECT_EQ(r(0, 0), 1.0f);
  EXPECT_TRUE(r.is_nodata(r(0, 1)));
}

TEST(Resample, OutputDimsRoundUp) {
  const Grid g(geom(5, 7, 100.0));
  const Grid r = resample(g, 200.0, ResampleMethod::BlockMean);
  EXPECT_EQ(r.rows(), 3u);
  EXPECT_EQ(r.cols(), 4u);
}

TEST(Resample, NearestTakesTopLeft) {
  Grid m = Grid::mask(geom(4, 4, 100.0));
  m(0, 2) = 1.0f;
  m(1, 1) = 1.0f;
  const Grid r = resample(m, 200.0, ResampleMethod::Nearest);
  EXPECT_EQ(r(0, 0), 0.0f);
  EXPECT_EQ(r(0, 1), 1.0f);
  EXPECT_TRUE(r.is_byte());
}

TEST(Resample, NonIntegerFactorIsPrecondition) {
  EXPECT_THROW(resample(Grid(geom(4, 4, 100.0)), 150.0, ResampleMethod::BlockMean),
               PreconditionError);
}

TEST(Resample, MaskWithBlockMeanIsPrecondition) {
  EXPECT_THROW(resample(Grid::mask(geom(4, 4, 100.0)), 200.0, ResampleMethod::BlockMean),
               PreconditionError);
}

TEST(ResampleProperty, TwoStepsEqualOneStep) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Grid g = oracle::random_grid(rng, 64, 64, 0.0, 10.0, 100.0);
    const Grid two = resample(resample(g, 200.0, ResampleMethod::BlockMean), 400.0,
                              ResampleMethod::BlockMean);
    const Grid one = resample(g, 400.0, ResampleMethod::BlockMean);
    ASSERT_EQ(two.size(), one.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
      EXPECT_NEAR(two.values()[i], one.values()[i], 1e-5 * std::abs(one.values()[i]));
    }
  }
}

TEST(Tile, NineTilesOnFiveTwelve) {
  const auto tiles = tile(Grid(geom(512, 512)), 256, 128);
  ASSERT_EQ(tiles.size(), 9u);
  std::vector<std::pair<std::size_t, std::size_t>> got;
  for (const auto& t : tiles) got.emplace_back(t.row_offset, t.col_offset);
  std::vector<std::pair<std::size_t, std::size_t>> want;
  for (std::size_t r : {0, 128, 256}) {
    for (std::size_t c : {0, 128, 256}) want.emplace_back(r, c);
  }
  EXPECT_EQ(got, want);
}

TEST(Tile, SingleTileWhenTileEqualsGrid) {
  const auto tiles = tile(Grid(geom(256, 256)), 256);
  ASSERT_EQ(tiles.size(), 1u);
  EXPECT_EQ(tiles[0].row_offset, 0u);
  EXPECT_EQ(tiles[0].col_offset, 0u);
}

TEST(Tile, TooLargeIsPrecondition) {
  EXPECT_THROW(tile(Grid(geom(100, 300)), 128), PreconditionError);
}

TEST(Tile, OffsetsClampFlushToEdge) {
  EXPECT_EQ(tile_offsets(300, 256, 128), (std::vector<std::size_t>{0, 44}));
  EXPECT_EQ(tile_offsets(600, 256, 128), (std::vector<std::size_t>{0, 128, 256, 344}));
  EXPECT_EQ(tile_offsets(512, 256, 128), (std::vector<std::size_t>{0, 128, 256}));
}

TEST(Tile, TilesCarryCroppedValuesAndGeometry) {
  std::mt19937_64 rng(4);
  const Grid g = oracle::random_grid(rng, 40, 40);
  for (const auto& t : tile(g, 16, 8)) {
    EXPECT_EQ(t.grid.geometry(), g.geometry().window(t.row_offset, t.col_offset, 16, 16));
    for (std::size_t r = 0; r < 16; ++r) {
      for (std::size_t c = 0; c < 16; ++c) {
        ASSERT_EQ(t.grid(r, c), g(t.row_offset + r, t.col_offset + c));
      }
    }
  }
}

TEST(TileProperty, CoverageMatchesBruteForceCounter) {
  for (std::size_t n : {256u, 300u, 384u, 512u, 700u}) {
    const Grid g(geom(n, n));
    const auto tiles = tile(g, 256, 128);
    std::vector<std::pair<std::size_t, std::size_t>> origins;
    for (const auto& t : tiles) origins.emplace_back(t.row_offset, t.col_offset);
    const auto count = oracle::coverage(n, n, 256, origins);
    const auto offs = tile_offsets(n, 256, 128);
    for (std::size_t k = 1; k < offs.size(); ++k) EXPECT_LT(offs[k - 1], offs[k]);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const auto per_axis = [&](std::size_t x) {
          return std::count_if(offs.begin(), offs.end(),
                               [&](std::size_t o) { return x >= o && x < o + 256; });
        };
        ASSERT_GE(count[r * n + c], 1);
        ASSERT_EQ(count[r * n + c], per_axis(r) * per_axis(c));
        if (r >= 128 && c >= 128 && r + 128 < n && c + 128 < n && (n - 256) % 128 == 0) {
          ASSERT_EQ(count[r * n + c], 4) << "n=" << n << " at " << r << "," << c;
        }
      }
    }
  }
}

TEST(TileProperty, SiblingsShareHalf) {
  const auto offs = tile_offsets(1024, 256, 128);
  for (std::size_t k = 1; k + 1 < offs.size(); ++k) EXPECT_EQ(offs[k] - offs[k - 1], 128u);
}

TEST(Crop, Bounds) {
  EXPECT_THROW(crop(Grid(geom(4, 4)), 2, 2, 3, 3), PreconditionError);
}

TEST(DistanceToCoast, ThreeFourFive) {
  Grid land = Grid::mask(geom(8, 8, 1000.0));
  land(0, 0) = 1.0f;
  const Grid d = distance_to_coast(land);
  EXPECT_FLOAT_EQ(d(3, 4), 5.0f);
  EXPECT_EQ(d(0, 0), 0.0f);
}

TEST(DistanceToCoast, AllOceanIsCap) {
  const Grid d = distance_to_coast(Grid::mask(geom(5, 6)), 42.0);
  for (float v : d.values()) EXPECT_EQ(v, 42.0f);
}

TEST(DistanceToCoast, NonMaskIsPrecondition) {
  EXPECT_THROW(distance_to_coast(Grid(geom(3, 3))), PreconditionError);
}

TEST(DistanceToCoastProperty, MatchesBruteForceScan) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.03);
  std::uniform_int_distribution<std::size_t> dim(1, 64);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t rows = dim(rng), cols = dim(rng);
    Grid land = Grid::mask(geom(rows, cols, 250.0));
    for (auto& v : land.values()) v = coin(rng) ? 1.0f : 0.0f;
    const Grid d = distance_to_coast(land, 100.0);
    const auto want = oracle::distance_scan(land, 100.0);
    for (std::size_t i = 0; i < want.size(); ++i) {
      ASSERT_EQ(d.values()[i], static_cast<float>(want[i])) << "trial " << trial << " px " << i;
    }
  }
}

TEST(Geometry, PixelRoundTrip) {
  const GridGeometry g = geom(100, 100);
  const auto c = g.center_of(10, 20);
  const auto [r, cc] = g.pixel_of(c.lat, c.lon);
  EXPECT_NEAR(r, 10.5, 1e-9);
  EXPECT_NEAR(cc, 20.5, 1e-9);
}

TEST(Geometry, WindowMovesOrigin) {
  const GridGeometry g = geom(100, 100);
  const auto w = g.window(10, 20, 5, 5);
  const auto a = g.center_of(10, 20);
  const auto b = w.center_of(0, 0);
  EXPECT_NEAR(a.lat, b.lat, 1e-12);
  // the window re-centres the tangent plane, so longitude scale shifts slightly (~1 m)
  EXPECT_NEAR(a.lon, b.lon, 1e-5);
}
