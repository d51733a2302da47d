#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "sarrain/error.hpp"
#include "sarrain/gmf.hpp"
#include "sarrain/synth.hpp"

using namespace sarrain;

namespace {

GmfSpec constant(double v) {
  GmfSpec s;
  s.name = "constant";
  s.coefficients = {v};
  return s;
}

Sigma0Grid swath(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Sigma0Grid s{oracle::random_grid(rng, rows, cols, 0.0, 0.2), {}};
  for (std::size_t c = 0; c < cols; ++c) {
    s.incidence_deg.push_back(29.0 + 17.0 * static_cast<double>(c) / static_cast<double>(cols));
  }
  return s;
}

}  // namespace

TEST(Gmf, BuiltInTableHasPublishedArity) {
  const auto spec = cmod5n();
  EXPECT_EQ(spec.coefficients.size(), 28u);
  EXPECT_EQ(gmf_arity("cmod5n"), 28u);
  EXPECT_EQ(spec.reference_wind_mps, 10.0);
  EXPECT_EQ(spec.reference_direction_deg, 45.0);
  EXPECT_NO_THROW(spec.validate());
}

TEST(Gmf, ShippedFileMatchesBuiltIn) {
  const auto file = load_gmf(std::filesystem::path(SARRAIN_SOURCE_DIR) / "core/data/cmod5n.txt");
  EXPECT_EQ(file.coefficients, cmod5n().coefficients);
  EXPECT_EQ(file.name, "cmod5n");
}

TEST(Gmf, DecreasesWithIncidence) {
  const auto spec = cmod5n();
  EXPECT_GT(gmf_eval(spec, 25.0, 10.0, 45.0), gmf_eval(spec, 45.0, 10.0, 45.0));
}

TEST(Gmf, IncreasesWithWind) {
  const auto spec = cmod5n();
  EXPECT_LE(gmf_eval(spec, 35.0, 0.0, 45.0), gmf_eval(spec, 35.0, 15.0, 45.0));
  double prev = 0.0;
  for (double w = 1.0; w <= 20.0; w += 1.0) {
    const double v = gmf_eval(spec, 35.0, w, 45.0);
    EXPECT_GT(v, prev) << w;
    prev = v;
  }
}

TEST(Gmf, PositiveOverValidRange) {
  const auto spec = cmod5n();
  for (double inc = 16.0; inc <= 66.0; inc += 5.0) {
    for (double w = 0.5; w <= 25.0; w += 2.5) {
      for (double dir = 0.0; dir < 360.0; dir += 45.0) {
        EXPECT_GT(gmf_eval(spec, inc, w, dir), 0.0) << inc << " " << w << " " << dir;
      }
    }
  }
}

TEST(Gmf, Deterministic) {
  const auto spec = cmod5n();
  const double a = gmf_eval(spec, 33.3, 7.7, 45.0);
  const double b = gmf_eval(spec, 33.3, 7.7, 45.0);
  EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
}

TEST(Gmf, TypicalMagnitude) {
  // VV ocean backscatter at mid incidence and 10 m/s sits near -15 dB
  const double db = 10.0 * std::log10(gmf_eval(cmod5n(), 35.0, 10.0, 45.0));
  EXPECT_GT(db, -20.0);
  EXPECT_LT(db, -10.0);
}

TEST(Gmf, IncidenceOutsideValidityIsRangeError) {
  EXPECT_THROW(gmf_eval(cmod5n(), 15.0, 10.0, 45.0), RangeError);
  EXPECT_THROW(gmf_eval(cmod5n(), 67.0, 10.0, 45.0), RangeError);
  EXPECT_THROW(gmf_eval(cmod5n(), 35.0, -1.0, 45.0), RangeError);
}

TEST(Gmf, ParseCoefficientText) {
  const auto spec = parse_gmf("# name: constant\n# a stub\n2.5\n\n");
  EXPECT_EQ(spec.name, "constant");
  EXPECT_EQ(spec.coefficients, std::vector<double>{2.5});
  EXPECT_EQ(gmf_eval(spec, 30.0, 3.0, 0.0), 2.5);
}

TEST(Gmf, WrongArityIsRejected) {
  EXPECT_THROW(parse_gmf("1\n2\n3\n"), PreconditionError);
}

TEST(Gmf, BadLineIsFormatError) {
  EXPECT_THROW(parse_gmf("# name: constant\n1.0abc\n"), FormatError);
}

TEST(Normalize, UnitStubIsIdentity) {
  const auto s = swath(6, 9, 1);
  EXPECT_TRUE(incidence_normalize(s, constant(1.0)).identical(s.sigma0));
}

TEST(Normalize, StubOfTwoHalves) {
  const auto s = swath(6, 9, 2);
  const Grid out = incidence_normalize(s, constant(2.0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out.values()[i], s.sigma0.values()[i] / 2.0f);
  }
}

TEST(Normalize, NodataPropagates) {
  auto s = swath(3, 4, 3);
  s.sigma0(1, 2) = s.sigma0.nodata();
  const Grid out = incidence_normalize(s, cmod5n());
  EXPECT_TRUE(out.is_nodata(out(1, 2)));
  EXPECT_FALSE(out.is_nodata(out(1, 1)));
}

TEST(Normalize, ColumnCountMismatchIsPrecondition) {
  auto s = swath(3, 4, 4);
  s.incidence_deg.pop_back();
  EXPECT_THROW(incidence_normalize(s, cmod5n()), PreconditionError);
}

TEST(Normalize, BadIncidenceNamesColumn) {
  auto s = swath(3, 4, 5);
  s.incidence_deg[2] = 80.0;
  try {
    incidence_normalize(s, cmod5n());
    FAIL();
  } catch (const RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("column 2"), std::string::npos);
  }
}

TEST(NormalizeProperty, InvertibleGivenGmf) {
  const auto spec = cmod5n();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = swath(8, 16, seed);
    const Grid out = incidence_normalize(s, spec);
    for (std::size_t r = 0; r < out.rows(); ++r) {
      for (std::size_t c = 0; c < out.cols(); ++c) {
        const double ref = gmf_eval(spec, s.incidence_deg[c], 10.0, 45.0);
        // the output is stored as float32, so the product is exact up to that rounding
        EXPECT_NEAR(out(r, c) * ref, s.sigma0(r, c), 1e-7 * s.sigma0(r, c) + 1e-12);
        EXPECT_GE(out(r, c), 0.0f);
      }
    }
  }
}

TEST(NormalizeProperty, RainFreeSwathIsFlatAcrossRange) {
  for (double wind : {5.0, 7.0, 10.0, 13.0}) {
    SceneConfig cfg;
    cfg.n_cells = 0;
    cfg.speckle_looks = 0;
    cfg.wind_mps = wind;
    cfg.wind_ramp_mps = 0.0;
    cfg.size_px = 64;
    const auto scene = gen_scene(cfg);
    const Grid out = incidence_normalize({scene.sigma0, scene.incidence_deg}, cmod5n());
    // residual = largest deviation from the row mean, relative to it
    double mean = 0.0;
    for (std::size_t c = 0; c < out.cols(); ++c) mean += out(10, c);
    mean /= static_cast<double>(out.cols());
    double residual = 0.0;
    for (std::size_t c = 0; c < out.cols(); ++c) residual = std::max(residual, std::abs(out(10, c) / mean - 1.0));
    EXPECT_LT(residual, 0.20) << "wind " << wind;
  }
}

TEST(WindResidual, RainFreeSceneIsOne) {
  for (double wind : {4.0, 8.0, 14.0}) {
    SceneConfig cfg;
    cfg.n_cells = 0;
    cfg.speckle_looks = 0;
    cfg.wind_mps = wind;
    cfg.wind_direction_deg = cmod5n().reference_direction_deg;
    cfg.size_px = 48;
    const auto scene = gen_scene(cfg);
    const auto layers = swath_layers(scene, cfg, cmod5n(), "w");
    const Grid res = wind_residual(layers.sigma0_norm, layers.incidence_deg, layers.wind_mps, cmod5n());
    for (float v : res.values()) EXPECT_NEAR(v, 1.0, 1e-5) << wind;
  }
}

TEST(WindResidual, NodataAndShapeChecks) {
  const GridGeometry g{2, 3, 400.0, {27.0, -80.0}};
  Grid s0(g, DType::Float32, 1.0f);
  Grid w(g, DType::Float32, 8.0f);
  s0(0, 1) = s0.nodata();
  w(1, 2) = w.nodata();
  w(1, 0) = 0.0f;
  const std::vector<double> inc{30.0, 35.0, 40.0};
  const Grid out = wind_residual(s0, inc, w, cmod5n());
  EXPECT_TRUE(out.is_nodata(out(0, 1)));
  EXPECT_TRUE(out.is_nodata(out(1, 2)));
  EXPECT_TRUE(out.is_nodata(out(1, 0)));
  EXPECT_GT(out(0, 0), 1.0f);
  EXPECT_THROW(wind_residual(s0, {30.0}, w, cmod5n()), PreconditionError);
  EXPECT_THROW(wind_residual(s0, inc, Grid(GridGeometry{3, 3, 400.0, {27.0, -80.0}}), cmod5n()), PreconditionError);
}
