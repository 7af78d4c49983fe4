#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "chartlink/checkpoint.hpp"
#include "chartlink/config.hpp"
#include "chartlink/errors.hpp"
#include "chartlink/evaluate.hpp"
#include "chartlink/image.hpp"
#include "chartlink/pipeline.hpp"
#include "chartlink/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace chartlink;

namespace {

constexpr const char* kCheckpointDirEnv = "CHARTLINK_CHECKPOINT_DIR";

void log_event(const std::string& level, const std::string& event, json fields = json::object()) {
  fields["level"] = level;
  fields["event"] = event;
  std::cerr << fields.dump() << std::endl;
}

/// Explicit path first; otherwise look in the checkpoint cache directory.
fs::path resolve_checkpoint(const std::string& given) {
  const char* cache = std::getenv(kCheckpointDirEnv);
  if (given.empty()) {
    if (!cache) throw CheckpointError(std::string("no --checkpoint given and ") + kCheckpointDirEnv + " is not set");
    return fs::path(cache) / "model.ckpt";
  }
  fs::path p(given);
  if (!fs::exists(p) && cache && p.is_relative() && fs::exists(fs::path(cache) / p)) return fs::path(cache) / p;
  return p;
}

std::string bits_string(const std::vector<uint8_t>& bits) {
  std::string s;
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

struct Options {
  uint64_t seed = 0;
  // embed
  std::string host, link, out, checkpoint;
  // decode / detect
  std::string in, ref;
  bool json_output = false;
  double threshold = -1.0;
  // train / evaluate
  std::string config, report;
  int iterations = -1;
};

int run_embed(const Options& o) {
  auto loaded = load_network(resolve_checkpoint(o.checkpoint));
  auto host = load_image(o.host);
  if (fs::path(o.out).extension() != ".png") throw InvalidParams("stego output must be a lossless .png file");
  auto result = embed(*loaded.network, host, o.link);
  save_png(o.out, result.stego);
  log_event("info", "embed", {{"out", o.out}, {"height", host.size(1)}, {"width", host.size(2)}, {"bytes", o.link.size()}});
  return 0;
}

int run_decode(const Options& o) {
  auto loaded = load_network(resolve_checkpoint(o.checkpoint));
  auto image = load_image(o.in);
  PipelineConfig cfg;
  cfg.seed = o.seed;
  try {
    const auto r = decode(*loaded.network, image, cfg);
    if (o.json_output) {
      std::cout << json{{"link", r.link},
                        {"crop", r.crop},
                        {"cropped", r.cropped},
                        {"confidence", r.confidence},
                        {"corrected_bits", r.corrected_bits}}
                       .dump()
                << std::endl;
    } else {
      std::cout << r.link << std::endl;
    }
    return 0;
  } catch (const EccFailure& e) {
    if (o.json_output) std::cout << json{{"error", e.what()}, {"raw_bits", bits_string(e.raw_bits())}}.dump() << std::endl;
    throw;
  }
}

int run_detect(const Options& o) {
  auto image = load_image(o.in);
  auto reference = load_image(o.ref);
  PipelineConfig cfg;
  cfg.seed = o.seed;
  CropParams alignment = CropParams::full_frame();
  if (!o.checkpoint.empty() || std::getenv(kCheckpointDirEnv)) {
    // Align through the anchor when a model is available.
    auto loaded = load_network(resolve_checkpoint(o.checkpoint));
    const auto& n = loaded.network->config();
    torch::NoGradGuard no_grad;
    auto gen = make_generator(cfg.seed);
    auto est = loaded.network->decode_anchor(resize(image, n.height, n.width).unsqueeze(0), gen, cfg.anchor_noise_std);
    const auto crop = estimate_crop(est.squeeze(0), loaded.network->anchor(), cfg.match);
    if (accept_crop(crop, cfg)) alignment = crop.params;
  } else if (image.size(1) != reference.size(1) || image.size(2) != reference.size(2)) {
    log_event("warning", "detect_unaligned", {{"message", "sizes differ and no checkpoint was given; resizing"}});
  }
  const double threshold = o.threshold > 0 ? o.threshold : cfg.detect_threshold;
  auto r = detect(image, reference, alignment, threshold, cfg.detect_min_area);
  const fs::path out(o.out);
  save_png(out, r.overlay);
  auto heat_path = out;
  heat_path.replace_filename(out.stem().string() + "_heatmap.png");
  save_png(heat_path, (r.heatmap / std::max(threshold, 1e-6)).clamp(0, 1).unsqueeze(0).expand({3, -1, -1}));
  json regions = json::array();
  for (const auto& b : r.regions) regions.push_back({b.x0, b.y0, b.x1, b.y1});
  std::cout << json{{"regions", regions}, {"alignment", r.alignment}, {"overlay", out.string()}, {"heatmap", heat_path.string()}}
                   .dump()
            << std::endl;
  return 0;
}

int run_train(const Options& o) {
  auto cfg = load_config(o.config);
  if (o.seed) cfg.train.seed = o.seed;
  if (o.iterations >= 0) cfg.train.iterations = o.iterations;
  auto corpus = load_config_corpus(cfg);
  auto split = split_corpus(corpus);
  const auto& train_side = cfg.corpus.dir.empty() ? corpus : split.train;
  log_event("info", "train_start", {{"images", train_side.size()}, {"iterations", cfg.train.iterations}});
  const auto start = std::chrono::steady_clock::now();
  train_loop(cfg.train, train_side, nullptr, [&](const TrainRecord& r) {
    json j = r;
    j["elapsed_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log_event("info", "train_step", j);
  });
  log_event("info", "train_done", {{"checkpoint", cfg.train.checkpoint_path.string()}});
  return 0;
}

int run_evaluate(const Options& o) {
  auto cfg = load_config(o.config);
  if (o.seed) cfg.evaluate.seed = o.seed;
  const fs::path ckpt = resolve_checkpoint(!o.checkpoint.empty() ? o.checkpoint
                                           : !cfg.evaluate.pipeline.checkpoint.empty()
                                               ? cfg.evaluate.pipeline.checkpoint.string()
                                               : cfg.train.checkpoint_path.string());
  auto loaded = load_network(ckpt);
  auto corpus = load_config_corpus(cfg);
  auto split = split_corpus(corpus);
  const auto& test = (cfg.corpus.dir.empty() || split.test.empty()) ? corpus : split.test;
  auto report = run_grid(*loaded.network, test, cfg.evaluate);
  const auto text = format_report(report);
  std::cout << text;
  if (!o.report.empty()) {
    fs::path json_path(o.report);
    if (json_path.has_parent_path()) fs::create_directories(json_path.parent_path());
    std::ofstream(json_path) << json(report).dump(2) << '\n';
    auto txt = json_path;
    txt.replace_extension(".txt");
    std::ofstream(txt) << text;
    log_event("info", "report_written", {{"json", json_path.string()}, {"text", txt.string()}});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hide links in chart images and recover them after tampering"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--seed", o.seed, "Seed for every stochastic step")->capture_default_str();

  auto* embed_cmd = app.add_subcommand("embed", "Embed a link into a host image");
  embed_cmd->add_option("--host", o.host, "Host image")->required()->check(CLI::ExistingFile);
  embed_cmd->add_option("--link", o.link, "Link text to hide")->required();
  embed_cmd->add_option("--out", o.out, "Stego PNG to write")->required();
  embed_cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint");

  auto* decode_cmd = app.add_subcommand("decode", "Recover the link from a (possibly tampered) image");
  decode_cmd->add_option("--in", o.in, "Received image")->required()->check(CLI::ExistingFile);
  decode_cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint");
  decode_cmd->add_flag("--json", o.json_output, "Print a JSON record");

  auto* detect_cmd = app.add_subcommand("detect", "Localize edits against a reference image");
  detect_cmd->add_option("--in", o.in, "Received image")->required()->check(CLI::ExistingFile);
  detect_cmd->add_option("--ref", o.ref, "Reference (original stego) image")->required()->check(CLI::ExistingFile);
  detect_cmd->add_option("--out", o.out, "Overlay PNG to write")->required();
  detect_cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint used to undo cropping");
  detect_cmd->add_option("--threshold", o.threshold, "Absolute difference threshold");

  auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
  train_cmd->add_option("--config", o.config, "JSON config")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--iterations", o.iterations, "Override the iteration count");

  auto* eval_cmd = app.add_subcommand("evaluate", "Run the tamper grids and write a report");
  eval_cmd->add_option("--config", o.config, "JSON config")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--report", o.report, "Report path (.json; a .txt table is written alongside)");
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint (defaults to the config's)");

  auto* config_cmd = app.add_subcommand("config", "Print a config file with every field at its default");

  CLI11_PARSE(app, argc, argv);

  torch::manual_seed(o.seed);
  try {
    if (*embed_cmd) return run_embed(o);
    if (*decode_cmd) return run_decode(o);
    if (*detect_cmd) return run_detect(o);
    if (*train_cmd) return run_train(o);
    if (*eval_cmd) return run_evaluate(o);
    if (*config_cmd) {
      std::cout << default_config_json().dump(2) << std::endl;
      return 0;
    }
  } catch (const ConfigError& e) {
    log_event("error", "config", {{"message", e.what()}});
    return 2;
  } catch (const EccFailure& e) {
    log_event("error", "ecc_failure", {{"message", e.what()}});
    return 3;
  } catch (const std::exception& e) {
    log_event("error", "failure", {{"message", e.what()}});
    return 1;
  }
  return 0;
}
