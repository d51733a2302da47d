#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "sarrain/glm.hpp"
#include "sarrain/koch.hpp"
#include "sarrain/rain_label.hpp"
#include "sarrain/raster.hpp"
#include "sarrain/synth.hpp"
#include "sarrain/train.hpp"

using namespace sarrain;

namespace {

Grid noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.5f, 1.5f);
  Grid g(GridGeometry{n, n, 400.0, {27.0, -80.0}});
  for (auto& v : g.values()) v = u(rng);
  return g;
}

void BM_FilterResponses(benchmark::State& state) {
  const Grid g = noise(static_cast<std::size_t>(state.range(0)), 1);
  const FilterBankSpec bank;
  for (auto _ : state) benchmark::DoNotOptimize(filter_responses(g, bank));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_FilterResponses)->Arg(64)->Arg(256);

void BM_KochForward(benchmark::State& state) {
  const Grid g = noise(static_cast<std::size_t>(state.range(0)), 2);
  const auto resp = filter_responses(g, FilterBankSpec{});
  const auto p = KochParams::reference();
  std::vector<double> y(3 * resp.size());
  for (auto _ : state) {
    koch_forward(resp, p, Activation::Sigmoid, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_KochForward)->Arg(64)->Arg(256);

void BM_SampleTerms(benchmark::State& state) {
  const Grid g = noise(static_cast<std::size_t>(state.range(0)), 3);
  Grid z(g.geometry(), DType::Float32, 10.0f);
  z(5, 5) = 40.0f;
  const auto sample = make_sample(g, class_masks(z), FilterBankSpec{});
  const auto p = KochParams::reference();
  for (auto _ : state) benchmark::DoNotOptimize(sample_terms(sample, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_SampleTerms)->Arg(32)->Arg(64);

void BM_DistanceToCoast(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Grid land = Grid::mask(GridGeometry{n, n, 400.0, {27.0, -80.0}});
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> pos(0, n - 1);
  for (int k = 0; k < 20; ++k) land(pos(rng), pos(rng)) = 1.0f;
  for (std::size_t r = 0; r < n; ++r) land(r, 0) = 1.0f;
  for (auto _ : state) benchmark::DoNotOptimize(distance_to_coast(land));
}
BENCHMARK(BM_DistanceToCoast)->Arg(256)->Arg(1024);

void BM_GroupFlashes(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> t(0.0, 60.0), lat(28.0, 30.0), lon(-86.0, -84.0);
  std::vector<LightningEvent> ev(static_cast<std::size_t>(state.range(0)));
  for (auto& e : ev) e = {t(rng), lat(rng), lon(rng)};
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) { return a.time_s < b.time_s; });
  for (auto _ : state) benchmark::DoNotOptimize(group_flashes(ev));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GroupFlashes)->Arg(1000)->Arg(20000);

void BM_Register(benchmark::State& state) {
  SceneConfig cfg;
  cfg.size_px = 96;
  cfg.n_cells = 8;
  cfg.bright_gain = 2.0;
  const auto scene = gen_scene(cfg);
  const auto layers = swath_layers(scene, cfg, cmod5n(), "bench");
  const Grid radar = class_masks(apply_offset(scene.reflectivity, {-3, 2, 0.0})).m1;
  const int radius = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(register_translation(layers.sigma0_norm, radar, radius));
}
BENCHMARK(BM_Register)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
