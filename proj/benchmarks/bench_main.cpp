#include <benchmark/benchmark.h>

#include "gswm/attacks.hpp"
#include "gswm/codec.hpp"
#include "gswm/rasterizer.hpp"
#include "gswm/spectral.hpp"
#include "gswm/synth.hpp"

namespace {

using namespace gswm;

const SynthResult& desk() {
  static const SynthResult s = synth_scene(SynthKind::kBlobs, 500, 1);
  return s;
}

void BM_Render(benchmark::State& state) {
  const auto& s = desk();
  for (auto _ : state) benchmark::DoNotOptimize(render(s.scene, s.cameras[0]));
}
BENCHMARK(BM_Render)->Unit(benchmark::kMillisecond);

void BM_RenderReference(benchmark::State& state) {
  const auto& s = desk();
  for (auto _ : state) benchmark::DoNotOptimize(render_reference(s.scene, s.cameras[0]));
}
BENCHMARK(BM_RenderReference)->Unit(benchmark::kMillisecond);

void BM_RenderBackward(benchmark::State& state) {
  const auto& s = desk();
  const ImageBuffer up(s.cameras[0].width, s.cameras[0].height, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(render_backward(s.scene, s.cameras[0], {}, up));
}
BENCHMARK(BM_RenderBackward)->Unit(benchmark::kMillisecond);

void BM_DecoderForwardBackward(benchmark::State& state) {
  const auto d = DecoderModel::initialized(1);
  const int n = static_cast<int>(state.range(0));
  const ImageBuffer img(n, n, 0.5);
  const std::vector<double> up(kMessageBits, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(decoder_backward(d, img, up, true));
}
BENCHMARK(BM_DecoderForwardBackward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Attack(benchmark::State& state) {
  const auto kind = kAllAttacks[static_cast<std::size_t>(state.range(0))];
  const auto img = render(desk().scene, desk().cameras[0]);
  state.SetLabel(std::string(attack_name(kind)));
  for (auto _ : state) benchmark::DoNotOptimize(apply({kind, 3, std::nullopt, 1}, img));
}
BENCHMARK(BM_Attack)->DenseRange(0, static_cast<int>(kAllAttacks.size()) - 1)->Unit(benchmark::kMicrosecond);

void BM_BandEnergy(benchmark::State& state) {
  const auto img = render(desk().scene, desk().cameras[0]);
  for (auto _ : state) benchmark::DoNotOptimize(band_energy(img));
}
BENCHMARK(BM_BandEnergy)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
