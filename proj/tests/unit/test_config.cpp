#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "chartlink/config.hpp"
#include "chartlink/errors.hpp"

using namespace chartlink;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalUsesDefaults) {
  auto cfg = parse_config(R"({"schema_version": 1})");
  EXPECT_EQ(cfg.train.network, NetworkConfig::toy());
  EXPECT_EQ(cfg.train.weights, LossWeights{});
  EXPECT_DOUBLE_EQ(cfg.train.learning_rate, 1e-4);
  EXPECT_EQ(cfg.corpus.generate, 16);
}

TEST(Config, DefaultTemplateParsesBack) {
  const auto text = default_config_json().dump(2);
  auto cfg = parse_config(text);
  const AppConfig defaults;
  EXPECT_EQ(cfg.train.network, defaults.train.network);
  EXPECT_EQ(cfg.train.iterations, defaults.train.iterations);
  EXPECT_EQ(cfg.evaluate.mask_rates, defaults.evaluate.mask_rates);
  EXPECT_DOUBLE_EQ(cfg.train.tamper.tau, defaults.train.tamper.tau);
}

TEST(Config, OverridesAndProfiles) {
  auto cfg = parse_config(R"({
    "schema_version": 1,
    "network": {"profile": "full"},
    "train": {"iterations": 12, "seed": 3},
    "tamper": {"tau": 0.0},
    "evaluate": {"mask_rates": [0, 0.5]}
  })");
  EXPECT_EQ(cfg.train.network, NetworkConfig::full());
  EXPECT_EQ(cfg.train.iterations, 12);
  EXPECT_EQ(cfg.train.seed, 3u);
  EXPECT_EQ(cfg.train.tamper.tau, 0.0);
  EXPECT_EQ(cfg.evaluate.mask_rates, (std::vector<double>{0, 0.5}));
}

TEST(Config, UnknownFieldReportsLineAndPath) {
  const auto msg = error_of("{\n  \"schema_version\": 1,\n  \"train\": {\n    \"iteratons\": 5\n  }\n}");
  EXPECT_NE(msg.find("cfg.json:4"), std::string::npos) << msg;
  EXPECT_NE(msg.find("train.iteratons"), std::string::npos) << msg;
}

TEST(Config, TypeErrorReportsField) {
  const auto msg = error_of("{\"schema_version\": 1,\n\"weights\": {\"data\": \"high\"}}");
  EXPECT_NE(msg.find("cfg.json:2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("weights.data"), std::string::npos) << msg;
}

TEST(Config, SchemaVersionAndSyntax) {
  EXPECT_NE(error_of("{}").find("schema_version"), std::string::npos);
  EXPECT_NE(error_of(R"({"schema_version": 2})").find("unsupported"), std::string::npos);
  EXPECT_NE(error_of("{\n\"schema_version\": 1,,\n}").find("cfg.json:2"), std::string::npos);
  EXPECT_NE(error_of(R"({"schema_version": 1, "weights": {"anchor": -1}})").find("weights.anchor"), std::string::npos);
}

TEST(Config, RelativePathsResolveAgainstFile) {
  const auto dir = std::filesystem::temp_directory_path() / "chartlink_cfg_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "c.json";
  std::ofstream(path) << R"({"schema_version": 1, "corpus": {"dir": "charts"}, "pipeline": {"checkpoint": "/abs/m.ckpt"}})";
  auto cfg = load_config(path);
  EXPECT_EQ(cfg.corpus.dir, dir / "charts");
  EXPECT_EQ(cfg.evaluate.pipeline.checkpoint, std::filesystem::path("/abs/m.ckpt"));
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Config, CorpusGeneration) {
  auto cfg = parse_config(R"({"schema_version": 1, "corpus": {"generate": 3, "image_size": 128}})");
  auto corpus = load_config_corpus(cfg);
  ASSERT_EQ(corpus.size(), 3u);
  EXPECT_EQ(corpus.images[0].size(1), 128);
}
