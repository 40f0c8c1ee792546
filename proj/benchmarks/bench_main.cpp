#include <benchmark/benchmark.h>

#include <random>

#include "anomalyhop/imageio.hpp"
#include "anomalyhop/normality.hpp"
#include "anomalyhop/runner.hpp"
#include "anomalyhop/saab.hpp"

using namespace anomalyhop;

namespace {

ClassConfig bench_config(int size) {
  ClassConfig cfg;
  cfg.class_name = "bench";
  cfg.color_mode = imageio::ColorMode::gray;
  cfg.resize = size;
  cfg.hop_specs = {{3, 3, true}, {3, 3, true}, {2, 2, false}};
  cfg.model_kind = normality::ModelKind::location_independent;
  cfg.hops_used = {1, 2, 3};
  cfg.fusion.target_size = size;
  cfg.fusion.normalize_per_hop = true;
  return cfg;
}

std::vector<ImageTensor> bench_train(int n, int size) {
  std::vector<ImageTensor> out;
  for (int i = 0; i < n; ++i)
    out.push_back(
        imageio::synth_texture(imageio::TextureKind::sinusoid, size, 10 + i));
  return out;
}

void BM_extract_patches(benchmark::State& state) {
  auto img = imageio::synth_texture(imageio::TextureKind::sinusoid, 224, 1);
  Eigen::MatrixXd plane(224, 224);
  for (int r = 0; r < 224; ++r)
    for (int c = 0; c < 224; ++c) plane(r, c) = img.at(r, c, 0);
  for (auto _ : state)
    benchmark::DoNotOptimize(saab::extract_patches(plane, 5));
}
BENCHMARK(BM_extract_patches);

void BM_mahalanobis(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  std::mt19937 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd rows(256, dim);
  for (long i = 0; i < rows.size(); ++i) rows.data()[i] = g(rng);
  saab::HopFeatureMap m;
  m.hop_index = 1;
  m.height = 16;
  m.width = 16;
  m.dim = dim;
  m.data.assign(rows.data(), rows.data() + rows.size());
  auto model = normality::fit_location_independent({m}, 0.01);
  Eigen::VectorXd x = Eigen::VectorXd::Random(dim);
  for (auto _ : state)
    benchmark::DoNotOptimize(normality::mahalanobis(x, model.params[0]));
}
BENCHMARK(BM_mahalanobis)->Arg(8)->Arg(32)->Arg(128);

void BM_train_model(benchmark::State& state) {
  ClassConfig cfg = bench_config(64);
  auto train = bench_train(8, 64);
  for (auto _ : state) benchmark::DoNotOptimize(train_model(cfg, train));
}
BENCHMARK(BM_train_model)->Unit(benchmark::kMillisecond);

void BM_score_image(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  ClassConfig cfg = bench_config(size);
  ModelBundle bundle = train_model(cfg, bench_train(8, size));
  auto probe = imageio::synth_texture(imageio::TextureKind::sinusoid, size, 99);
  for (auto _ : state) benchmark::DoNotOptimize(score_image(bundle, probe));
}
BENCHMARK(BM_score_image)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
