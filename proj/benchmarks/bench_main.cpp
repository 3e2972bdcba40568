#include <benchmark/benchmark.h>

#include "d3d/nn_ops.hpp"
#include "d3d/oracle.hpp"
#include "d3d/stream.hpp"
#include "d3d/verify.hpp"
#include "d3d/weights.hpp"

using namespace d3d;

namespace {

std::shared_ptr<const Network> net_for(int depth) {
  const ModelSpec spec = build_dissected(depth, SkipKind::Concatenation, 0.125);
  return Network::bind(spec, init_weights(spec, 1));
}

void BM_Conv3d(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  const std::size_t size = 28;
  ConvGeometry g;
  g.in_channels = channels;
  g.out_channels = channels;
  g.kernel = {2, 3, 3};
  g.stride = {1, 1, 1};
  g.padding = {0, 1, 1};
  ConvParams p;
  p.geometry = g;
  p.weights = uniform_values(channels * channels * 18, 0.1f, 2);
  const Tensor x({channels, 2, size, size}, uniform_values(channels * 2 * size * size, 1.0f, 3));
  for (auto _ : state) benchmark::DoNotOptimize(conv3d(x, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(channels * channels * 18 * size * size));
}
BENCHMARK(BM_Conv3d)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_PushFrame(benchmark::State& state) {
  const auto net = net_for(static_cast<int>(state.range(0)));
  const Tensor clip = random_frames(8, 64, 64, 4);
  StreamSession session(net);
  std::size_t t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(session.push_frame(clip.slice_time(t % 8, 1)));
    ++t;
  }
}
BENCHMARK(BM_PushFrame)->Arg(18)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_RunOffline(benchmark::State& state) {
  const auto net = net_for(18);
  const Tensor clip = random_frames(static_cast<std::size_t>(state.range(0)), 64, 64, 5);
  for (auto _ : state) benchmark::DoNotOptimize(run_offline(*net, clip));
}
BENCHMARK(BM_RunOffline)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
