#include <benchmark/benchmark.h>

#include "chartlink/anchor.hpp"
#include "chartlink/crop_estimator.hpp"
#include "chartlink/steg_flow.hpp"

using namespace chartlink;

static void BM_EstimateCrop(benchmark::State& state) {
  auto anchor = make_anchor(96, 96);
  auto target = crop_resize(anchor, CropParams{0.4, 0.6, 0.5, 0.7});
  MatchConfig cfg;
  cfg.steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_crop(target, anchor, cfg));
}
BENCHMARK(BM_EstimateCrop)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

static void BM_CouplingConcealReveal(benchmark::State& state) {
  torch::NoGradGuard no_grad;
  TacbStack stack(2, 192, 4, 2.0);
  auto host = torch::randn({1, 256, 192});
  auto data = torch::randn({1, 256, 192});
  for (auto _ : state) {
    auto [h, t] = stack->conceal(host, data);
    benchmark::DoNotOptimize(stack->reveal_from(h, t));
  }
}
BENCHMARK(BM_CouplingConcealReveal)->Unit(benchmark::kMillisecond);
