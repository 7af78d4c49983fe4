#include <gtest/gtest.h>

#include <filesystem>

#include "chartlink/charts.hpp"
#include "chartlink/errors.hpp"

using namespace chartlink;

TEST(Charts, ShapeRangeAndDeterminism) {
  auto a = generate_charts(6, 64, 80, 3);
  auto b = generate_charts(6, 64, 80, 3);
  ASSERT_EQ(a.size(), 6u);
  EXPECT_EQ(a.names[0], "chart_00000");
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.images[i].sizes(), (std::vector<int64_t>{3, 64, 80}));
    EXPECT_GE(a.images[i].min().item<float>(), 0.0f);
    EXPECT_LE(a.images[i].max().item<float>(), 1.0f);
    EXPECT_TRUE(torch::equal(a.images[i], b.images[i]));
  }
  EXPECT_FALSE(torch::equal(a.images[0], generate_charts(1, 64, 80, 4).images[0]));
}

TEST(Charts, ZeroCountIsEmpty) {
  EXPECT_TRUE(generate_charts(0, 64, 64, 1).empty());
  EXPECT_THROW(generate_charts(-1, 64, 64, 1), InvalidParams);
}

TEST(Charts, BackgroundDominates) {
  auto corpus = generate_charts(30, 96, 96, 5);
  double total = 0;
  for (const auto& img : corpus.images) total += background_fraction(img);
  EXPECT_GE(total / corpus.size(), 0.4);
}

TEST(Charts, EveryKindRenders) {
  std::mt19937_64 rng(1);
  for (auto kind : {ChartKind::Bar, ChartKind::Line, ChartKind::Scatter}) {
    auto img = generate_chart(48, 48, rng, kind);
    EXPECT_GT(img.std().item<float>(), 0.01f);
  }
  EXPECT_THROW(generate_chart(8, 48, rng, ChartKind::Bar), InvalidParams);
}

TEST(Charts, SplitFiveToOne) {
  auto corpus = generate_charts(12, 32, 32, 2);
  auto split = split_corpus(corpus);
  EXPECT_EQ(split.train.size(), 10u);
  EXPECT_EQ(split.test.size(), 2u);
  EXPECT_EQ(split.test.names[0], "chart_00005");
}

TEST(Charts, SaveLoadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "chartlink_corpus_test";
  std::filesystem::remove_all(dir);
  auto corpus = generate_charts(3, 40, 40, 9);
  save_corpus(dir, corpus);
  auto loaded = load_corpus(dir, 32, 32);
  ASSERT_EQ(loaded.size(), 3u);
  EXPECT_EQ(loaded.names, corpus.names);
  // Stored as 8-bit PNG.
  EXPECT_LE((loaded.images[1] - corpus.images[1]).abs().max().item<float>(), 0.5f / 255 + 1e-6f);
  EXPECT_THROW(load_corpus(dir, 64, 64), InvalidParams);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_corpus(dir, 32, 32), EmptyCorpus);
  std::filesystem::create_directories(dir);
  EXPECT_THROW(load_corpus(dir, 32, 32), EmptyCorpus);
  std::filesystem::remove_all(dir);
}
