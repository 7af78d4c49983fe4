#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

#include "chartlink/evaluate.hpp"
#include "chartlink/pipeline.hpp"
#include "chartlink/trainer.hpp"

namespace chartlink {

inline constexpr int kConfigSchemaVersion = 1;

struct CorpusConfig {
  std::filesystem::path dir;  // empty: generate procedurally
  int generate = 16;
  uint64_t seed = 1;
  int image_size = 0;  // generated chart side; 0 uses the network size
};

/// Everything a config file can set. Sections: network, train, weights,
/// tamper, corpus, match, pipeline, evaluate.
struct AppConfig {
  TrainConfig train;
  CorpusConfig corpus;
  EvalConfig evaluate;
};

/// Parses JSON text. Unknown fields, wrong types and a missing or newer
/// schema_version throw ConfigError naming the field and its line.
AppConfig parse_config(const std::string& text, const std::string& source = "<config>");
/// Relative paths inside the file resolve against the file's directory.
AppConfig load_config(const std::filesystem::path& path);

/// A complete config with every field at its default, for use as a template.
nlohmann::json default_config_json();

/// Generates or loads the corpus a config describes.
ChartCorpus load_config_corpus(const AppConfig& cfg);

}  // namespace chartlink
