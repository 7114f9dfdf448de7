#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "chaneff/metrics.hpp"
#include "chaneff/png_codec.hpp"
#include "chaneff/stimulus.hpp"

namespace {

using chaneff::metrics::Rows;
using chaneff::stimulus::ChannelId;

Rows random_rows(std::size_t n, std::size_t dim, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Rows rows(n, std::vector<double>(dim));
  for (auto& r : rows)
    for (double& v : r) v = g(rng);
  return rows;
}

std::vector<double> bumpy_signal(std::size_t n) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    s[i] = std::exp(-(x - n / 3.0) * (x - n / 3.0) / 200.0) +
           0.6 * std::exp(-(x - 2.0 * n / 3.0) * (x - 2.0 * n / 3.0) / 200.0) + 0.01 * std::sin(x);
  }
  return s;
}

void BM_Render(benchmark::State& state) {
  const auto channel = static_cast<ChannelId>(state.range(0));
  const auto params = chaneff::stimulus::params_for(channel, 0.5, chaneff::stimulus::default_params());
  chaneff::stimulus::RenderConfig cfg;
  cfg.canvas_px = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(chaneff::stimulus::render(params, cfg));
  state.SetLabel(std::string(chaneff::stimulus::channel_name(channel)));
}
BENCHMARK(BM_Render)->ArgsProduct({{0, 1, 2, 3, 4, 5}, {224, 336}})->Unit(benchmark::kMicrosecond);

void BM_EncodePng(benchmark::State& state) {
  const auto img = chaneff::stimulus::render(chaneff::stimulus::default_params());
  for (auto _ : state) benchmark::DoNotOptimize(chaneff::stimulus::encode_png(img));
}
BENCHMARK(BM_EncodePng)->Unit(benchmark::kMicrosecond);

// n x dim; exercises both the covariance and the Gram path.
void BM_Linearity(benchmark::State& state) {
  const Rows rows = random_rows(state.range(0), state.range(1), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(chaneff::metrics::explained_variance_ratio(rows));
  }
}
BENCHMARK(BM_Linearity)
    ->Args({200, 768})
    ->Args({1000, 768})
    ->Args({1000, 64})
    ->Args({4096, 512})
    ->Unit(benchmark::kMillisecond);

void BM_Smooth(benchmark::State& state) {
  const auto s = bumpy_signal(state.range(0));
  const double sigma = chaneff::metrics::auto_sigma(s.size());
  for (auto _ : state) benchmark::DoNotOptimize(chaneff::metrics::smooth(s, sigma));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Smooth)->Arg(200)->Arg(1000)->Arg(10000);

void BM_DetectPeaks(benchmark::State& state) {
  const auto s = chaneff::metrics::smooth(bumpy_signal(state.range(0)), 4.0);
  for (auto _ : state) benchmark::DoNotOptimize(chaneff::metrics::detect_peaks(s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DetectPeaks)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
