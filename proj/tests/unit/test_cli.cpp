#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "oracles.hpp"
#include "sarrain/csv.hpp"
#include "sarrain/dataset.hpp"
#include "sarrain/glm.hpp"

using namespace sarrain;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result sarrain_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path corpus_config(const fs::path& dir) {
  const auto path = dir / "corpus.json";
  std::ofstream(path) << R"({"scene":{"seed":5,"size_px":64,"speckle_looks":256,"bright_gain":2.0,)"
                      << R"("cell_radius_min_px":2.0,"cell_radius_max_px":4.0},)"
                      << R"("n_swaths":6,"cells_min":3,"cells_max":6,"wind_min_mps":5,"wind_max_mps":12,)"
                      << R"("rules":{"tile_px":32,"stride_px":32}})";
  return path;
}

}  // namespace

TEST(Cli, NoArgumentsIsUsageError) {
  const auto r = sarrain_run({});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, UnknownFlagIsUsageError) {
  const auto r = sarrain_run({"report", "--data", ".", "--bogus"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("usage error"), std::string::npos);
}

TEST(Cli, HelpAndVersionSucceed) {
  EXPECT_EQ(sarrain_run({"--help"}).code, cli::kExitOk);
  const auto v = sarrain_run({"--version"});
  EXPECT_EQ(v.code, cli::kExitOk);
  EXPECT_FALSE(v.out.empty());
}

TEST(Cli, KochBelowTwoHundredMetresIsUsageError) {
  const auto dir = oracle::temp_dir("cli_res");
  const auto r = sarrain_run({"train-koch", "--data", dir.string(), "--out", (dir / "k.json").string(),
                              "--resolution", "100"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("200"), std::string::npos);
}

TEST(Cli, UnsupportedResolutionIsUsageError) {
  const auto dir = oracle::temp_dir("cli_res300");
  const auto r = sarrain_run({"train-koch", "--data", dir.string(), "--out", (dir / "k.json").string(),
                              "--resolution", "300"});
  EXPECT_EQ(r.code, cli::kExitUsage);
}

TEST(Cli, DataErrorPrintsJsonLine) {
  const auto dir = oracle::temp_dir("cli_data_err");
  std::ofstream(dir / "manifest.csv") << kManifestHeader << "\nS,r00000c00000,none,0,0,0,0,30\n";
  auto r = sarrain_run({"train-koch", "--data", dir.string(), "--out", (dir / "k.json").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_EQ(r.err.rfind("{\"error\":\"data\"", 0), 0u) << r.err;
  EXPECT_NE(r.err.find("\"path\""), std::string::npos);
  EXPECT_NE(r.err.find("manifest.csv"), std::string::npos);

  std::ofstream(dir / "manifest.csv") << kManifestHeader << "\nS,r00000c00000,holdout,0,0,0,0,30\n";
  r = sarrain_run({"train-koch", "--data", dir.string(), "--out", (dir / "k.json").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_EQ(r.err.rfind("{\"error\":\"format\"", 0), 0u) << r.err;
  EXPECT_NE(r.err.find("manifest.csv"), std::string::npos) << r.err;
}

TEST(Cli, MissingInputIsIoError) {
  const auto dir = oracle::temp_dir("cli_io_err");
  const auto r = sarrain_run({"report", "--data", (dir / "nope").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("\"error\":\"io\""), std::string::npos) << r.err;
}

TEST(Cli, SceneSynthThenExtract) {
  const auto dir = oracle::temp_dir("cli_scene");
  std::ofstream(dir / "scene.json") << R"({"seed":9,"size_px":96,"n_cells":8,"cell_rate_min_mmh":8.0})";
  auto r = sarrain_run({"synth", "--config", (dir / "scene.json").string(), "--out", (dir / "raw").string(),
                        "--id", "S1A_T"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* layer : {"s0", "inc", "refl", "wind", "land"}) {
    EXPECT_TRUE(fs::exists(dir / "raw" / (std::string("S1A_T.") + layer + ".sgrd"))) << layer;
  }
  EXPECT_TRUE(fs::exists(dir / "raw" / "run_manifest.json"));
  r = sarrain_run({"extract", "--input", (dir / "raw").string(), "--out", (dir / "ds").string(), "--tile", "32"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_manifest(dir / "ds" / "manifest.csv");
  ASSERT_FALSE(rows.empty());
  for (const auto& row : rows) {
    EXPECT_EQ(row.swath, "S1A_T");
    EXPECT_GE(row.max_dbz, 25.0);
    EXPECT_LE(row.land_frac, 0.5);
  }
}

TEST(Cli, PipelineRoundTrip) {
  const auto dir = oracle::temp_dir("cli_pipeline");
  const auto ds = dir / "ds";
  auto r = sarrain_run({"synth", "--config", corpus_config(dir).string(), "--out", ds.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  r = sarrain_run({"split", "--data", ds.string(), "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(ds / "split_report.csv"));
  const auto rows = read_manifest(ds / "manifest.csv");
  for (const auto& row : rows) EXPECT_NE(row.subset, Subset::Unassigned);

  r = sarrain_run({"train-koch", "--data", ds.string(), "--out", (dir / "model" / "koch.json").string(),
                   "--runs", "2", "--epochs", "2", "--lr", "0.01"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("("), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "model" / "koch_run1.json"));
  const auto hist = read_csv(dir / "model" / "koch.history.csv");
  EXPECT_EQ(hist.header, (std::vector<std::string>{"epoch", "train_loss", "val_loss"}));

  r = sarrain_run({"predict", "--model", (dir / "model" / "koch.json").string(), "--data", ds.string(),
                   "--out", (dir / "pred").string(), "--subset", "all"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = sarrain_run({"eval", "--pred", (dir / "pred").string(), "--truth", ds.string(), "--subset", "all",
                   "--strat", "wind"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("multiclass_f1"), std::string::npos) << r.out;
  const auto metrics = read_csv(dir / "pred" / "metrics.csv");
  EXPECT_EQ(metrics.header,
            (std::vector<std::string>{"model", "resolution_m", "metric", "threshold", "mean", "std"}));
  EXPECT_EQ(metrics.rows.size(), 4u);
  for (const auto& row : metrics.rows) {
    const double v = parse_double(row[4]);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_TRUE(fs::exists(dir / "pred" / "strat_wind.csv"));

  r = sarrain_run({"predict", "--baseline", "--data", ds.string(), "--out", (dir / "base").string(),
                   "--subset", "test"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = sarrain_run({"eval", "--pred", (dir / "base").string(), "--truth", ds.string(), "--subset", "test"});
  ASSERT_EQ(r.code, 0) << r.err;
  // one binary mask scored against each truth class
  const auto base = read_csv(dir / "base" / "metrics.csv");
  ASSERT_EQ(base.rows.size(), 3u);
  for (const auto& row : base.rows) EXPECT_EQ(row[2], "binary_f1");

  r = sarrain_run({"report", "--data", ds.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(ds / "report.csv"));
}

TEST(Cli, RunManifestRecordsConfigHash) {
  const auto dir = oracle::temp_dir("cli_manifest");
  const auto r = sarrain_run({"synth", "--config", corpus_config(dir).string(), "--out", (dir / "ds").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = slurp(dir / "ds" / "run_manifest.json");
  for (const char* key : {"\"config_hash\"", "\"version\"", "\"seeds\"", "\"args\"", "\"command\""}) {
    EXPECT_NE(m.find(key), std::string::npos) << key;
  }
}

TEST(Cli, RerunIsBitIdentical) {
  const auto dir = oracle::temp_dir("cli_rerun");
  const auto cfg = corpus_config(dir);
  ASSERT_EQ(sarrain_run({"synth", "--config", cfg.string(), "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(sarrain_run({"synth", "--config", cfg.string(), "--out", (dir / "b").string(), "--workers", "3"}).code, 0);
  EXPECT_EQ(slurp(dir / "a" / "manifest.csv"), slurp(dir / "b" / "manifest.csv"));
  const auto rows = read_manifest(dir / "a" / "manifest.csv");
  ASSERT_FALSE(rows.empty());
  const auto stem = patch_stem(dir / "a", rows.back().swath, rows.back().patch).filename().string();
  const auto rel = fs::path(rows.back().swath) / stem;
  EXPECT_EQ(slurp(dir / "a" / (rel.string() + ".s0.sgrd")), slurp(dir / "b" / (rel.string() + ".s0.sgrd")));
  for (const auto& sub : {"a", "b"}) {
    ASSERT_EQ(sarrain_run({"split", "--data", (dir / sub).string()}).code, 0);
    ASSERT_EQ(sarrain_run({"train-koch", "--data", (dir / sub).string(), "--out",
                           (dir / sub / "k.json").string(), "--runs", "1", "--epochs", "2"})
                  .code,
              0);
  }
  EXPECT_EQ(slurp(dir / "a" / "k.json"), slurp(dir / "b" / "k.json"));
}

TEST(Cli, RegisterRecoversInjectedShifts) {
  const auto dir = oracle::temp_dir("cli_register");
  std::ofstream(dir / "corpus.json")
      << R"({"scene":{"seed":11,"size_px":128,"speckle_looks":0,"bright_gain":2.0,)"
      << R"("cell_radius_min_px":3.0,"cell_radius_max_px":6.0},"n_swaths":4,"cells_min":4,"cells_max":8,)"
      << R"("wind_min_mps":5,"wind_max_mps":12,"max_shift_px":3,"rules":{"tile_px":64,"stride_px":32}})";
  const auto ds = dir / "ds";
  ASSERT_EQ(sarrain_run({"synth", "--config", (dir / "corpus.json").string(), "--out", ds.string()}).code, 0);
  const auto r = sarrain_run({"register", "--data", ds.string(), "--radius", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto injected = read_csv(ds / "injected_shifts.csv");
  const auto found = read_csv(ds / "offsets.csv");
  ASSERT_EQ(injected.rows.size(), found.rows.size());
  std::size_t with_signal = 0, exact = 0;
  for (std::size_t k = 0; k < found.rows.size(); ++k) {
    ASSERT_EQ(injected.rows[k][1], found.rows[k][1]);
    if (found.rows[k][5] != "ok") continue;
    ++with_signal;
    exact += injected.rows[k][2] == found.rows[k][2] && injected.rows[k][3] == found.rows[k][3] ? 1 : 0;
  }
  ASSERT_GT(with_signal, 10u);
  EXPECT_GE(exact * 10, with_signal * 9);
  // the manifest now records the applied offsets
  const auto rows = read_manifest(ds / "manifest.csv");
  EXPECT_EQ(std::to_string(rows[0].d_row), found.rows[0][2]);
}

TEST(Cli, GlmCluster) {
  const auto dir = oracle::temp_dir("cli_glm");
  const GridGeometry g{30, 30, 2000.0, {29.0, -85.0}};
  write_grid(Grid(g, DType::Float32, 0.0f, Grid::kDefaultNodata, 5000), dir / "ref.sgrd");
  const auto a = g.center_of(4, 4), b = g.center_of(5, 5), c = g.center_of(20, 20);
  std::ofstream(dir / "ev.csv") << "time_s,lat,lon\n"
                                << 4900 << ',' << a.lat << ',' << a.lon << '\n'
                                << 4900.2 << ',' << b.lat << ',' << b.lon << '\n'
                                << 1000 << ',' << c.lat << ',' << c.lon << '\n';
  const auto r = sarrain_run({"glm-cluster", "--events", (dir / "ev.csv").string(), "--grid",
                              (dir / "ref.sgrd").string(), "--out", (dir / "glm.sgrd").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Grid m = read_grid(dir / "glm.sgrd");
  EXPECT_EQ(m(4, 4), 1.0f);
  EXPECT_EQ(m(5, 5), 1.0f);
  EXPECT_EQ(m(20, 20), 0.0f);
  EXPECT_TRUE(fs::exists(dir / "glm.flashes.csv"));
}
