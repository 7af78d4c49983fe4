#include <benchmark/benchmark.h>

#include <random>

#include "chartlink/bch.hpp"
#include "chartlink/payload.hpp"
#include "chartlink/rdt.hpp"

using namespace chartlink;

static void BM_BchDecode(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int t = static_cast<int>(state.range(1));
  BchCode code(m, t);
  std::mt19937 rng(1);
  std::vector<uint8_t> msg(code.data_bits());
  for (auto& b : msg) b = rng() & 1;
  auto word = code.encode(msg);
  for (int i = 0; i < t; ++i) word[(i * 7919) % word.size()] ^= 1;
  for (auto _ : state) benchmark::DoNotOptimize(code.decode(word));
}
BENCHMARK(BM_BchDecode)->Args({5, 3})->Args({8, 8});

static void BM_PayloadRoundTrip(benchmark::State& state) {
  PayloadCodec codec(18, 18);
  const std::string link = "https://ex.am/ple?q=12";
  for (auto _ : state) benchmark::DoNotOptimize(codec.decode(codec.encode(link)));
}
BENCHMARK(BM_PayloadRoundTrip);

static void BM_RdtTileAverage(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  RdtConfig cfg{18, 18, 2, 2, size, size};
  auto modules = torch::randint(0, 2, {8, 18, 18}).to(torch::kFloat32);
  for (auto _ : state) benchmark::DoNotOptimize(rdt_average(rdt_tile(modules, cfg), cfg));
}
BENCHMARK(BM_RdtTileAverage)->Arg(96)->Arg(384);
