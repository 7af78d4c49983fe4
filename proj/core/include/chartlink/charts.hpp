#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace chartlink {

enum class ChartKind { Bar, Line, Scatter };

/// RGB chart rasters ([3, H, W] in [0, 1]) plus their file stems.
struct ChartCorpus {
  std::vector<torch::Tensor> images;
  std::vector<std::string> names;

  size_t size() const noexcept { return images.size(); }
  bool empty() const noexcept { return images.empty(); }
};

struct CorpusSplit {
  ChartCorpus train;
  ChartCorpus test;
};

/// One procedural chart: solid background, gridlines, axes, a bar/line/scatter
/// series in a random palette and a few glyph blocks standing in for labels.
torch::Tensor generate_chart(int height, int width, std::mt19937_64& rng, ChartKind kind);
/// n charts of mixed kinds, deterministic under seed.
ChartCorpus generate_charts(int n, int height, int width, uint64_t seed);

void save_corpus(const std::filesystem::path& dir, const ChartCorpus& corpus);
/// Loads every PNG/JPEG in dir (sorted by name). Images smaller than
/// min_height x min_width are rejected. Throws EmptyCorpus.
ChartCorpus load_corpus(const std::filesystem::path& dir, int min_height, int min_width);

/// Deterministic 5:1 split: every sixth image goes to the test side.
CorpusSplit split_corpus(const ChartCorpus& corpus, int ratio = 5);

/// Fraction of pixels sharing the most common 8-bit colour.
double background_fraction(const torch::Tensor& image);

}  // namespace chartlink
