#include "chartlink/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "chartlink/errors.hpp"

namespace chartlink {

namespace {

using nlohmann::json;

int line_of(const std::string& text, size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Reads one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const json& node, std::string path, const std::string& text, const std::string& source)
      : node_(node), path_(std::move(path)), text_(text), source_(source) {
    if (!node_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] void fail(const std::string& field, const std::string& message) const {
    std::string where = source_;
    // Best-effort position: first occurrence of the key in the text.
    const auto dot = field.find_last_of('.');
    const auto key = "\"" + (dot == std::string::npos ? field : field.substr(dot + 1)) + "\"";
    const auto pos = text_.find(key);
    if (pos != std::string::npos) where += ":" + std::to_string(line_of(text_, pos));
    throw ConfigError(where + ": field '" + field + "': " + message);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return node_.contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!node_.contains(key)) return;
    seen_.insert(key);
    const auto& v = node_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(field(key), "expected true or false");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(field(key), "expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<int64_t>() < 0) {
        fail(field(key), "expected a non-negative integer");
      }
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(field(key), "expected a number");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(field(key), "expected a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
      if (!v.is_string()) fail(field(key), "expected a path string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) fail(field(key), "expected an array of numbers");
      out.clear();
      for (const auto& x : v) {
        if (!x.is_number()) fail(field(key), "expected an array of numbers");
        out.push_back(x.get<double>());
      }
    } else if constexpr (std::is_same_v<T, std::vector<std::array<double, 2>>>) {
      if (!v.is_array()) fail(field(key), "expected an array of [crop, mask] pairs");
      out.clear();
      for (const auto& x : v) {
        if (!x.is_array() || x.size() != 2 || !x[0].is_number() || !x[1].is_number()) {
          fail(field(key), "expected an array of [crop, mask] pairs");
        }
        out.push_back({x[0].get<double>(), x[1].get<double>()});
      }
    } else {
      static_assert(sizeof(T) == 0, "unsupported config field type");
    }
  }

  std::optional<Section> child(const std::string& key) {
    if (!node_.contains(key)) return std::nullopt;
    seen_.insert(key);
    return Section(node_.at(key), field(key), text_, source_);
  }

  /// Rejects keys nobody read.
  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) fail(field(key), "unknown field");
    }
  }

 private:
  const json& node_;
  std::string path_;
  const std::string& text_;
  const std::string& source_;
  std::set<std::string> seen_;
};

void read_network(Section s, NetworkConfig& c) {
  std::string profile = c.profile;
  s.read("profile", profile);
  if (profile == "full") {
    c = NetworkConfig::full();
  } else if (profile == "toy") {
    c = NetworkConfig::toy();
  } else {
    s.fail(s.field("profile"), "expected \"toy\" or \"full\"");
  }
  s.read("height", c.height);
  s.read("width", c.width);
  s.read("patch", c.patch);
  s.read("dim", c.dim);
  s.read("heads", c.heads);
  s.read("tokenizer_depth", c.tokenizer_depth);
  s.read("detokenizer_depth", c.detokenizer_depth);
  s.read("tacb_blocks", c.tacb_blocks);
  s.read("rho_max", c.rho_max);
  s.read("condition_cap", c.condition_cap);
  s.read("fen_width", c.fen_width);
  s.read("fen_scales", c.fen_scales);
  s.read("anchor_blocks", c.anchor_blocks);
  s.read("anchor_width", c.anchor_width);
  s.read("anchor_rho_max", c.anchor_rho_max);
  s.read("init_seed", c.init_seed);
  if (auto r = s.child("rdt")) {
    r->read("rows", c.rdt.rows);
    r->read("cols", c.rdt.cols);
    r->read("rep_rows", c.rdt.rep_rows);
    r->read("rep_cols", c.rdt.rep_cols);
    r->finish();
    c.bch = BchParams::for_capacity(c.rdt.rows * c.rdt.cols);
  }
  c.rdt.height = c.height;
  c.rdt.width = c.width;
  if (auto b = s.child("bch")) {
    b->read("m", c.bch.m);
    b->read("t", c.bch.t);
    b->finish();
  }
  s.finish();
  try {
    c.validate();
    codec_for(c);
  } catch (const Error& e) {
    s.fail(s.field("network"), e.what());
  }
}

void read_distortion(Section s, DistortionConfig& d) {
  s.read("noise", d.noise);
  s.read("noise_std", d.noise_std);
  s.read("jpeg", d.jpeg);
  s.read("jpeg_quality", d.jpeg_quality);
  s.read("brightness", d.brightness);
  s.read("brightness_max", d.brightness_max);
  s.read("hue", d.hue);
  s.read("hue_max", d.hue_max);
  s.read("contrast", d.contrast);
  s.read("contrast_min", d.contrast_min);
  s.read("contrast_max", d.contrast_max);
  s.finish();
}

void read_tamper(Section s, TamperPolicy& p) {
  s.read("min_unmasked", p.min_unmasked);
  s.read("min_masks", p.min_masks);
  s.read("max_masks", p.max_masks);
  s.read("min_crop_area", p.min_crop_area);
  s.read("tau", p.tau);
  s.read("mask_probability", p.mask_probability);
  s.read("crop_probability", p.crop_probability);
  s.read("transition_probability", p.transition_probability);
  s.read("distortion_probability", p.distortion_probability);
  if (auto d = s.child("distortion")) read_distortion(*d, p.distortion);
  s.finish();
  if (p.min_masks < 1 || p.max_masks < p.min_masks) s.fail(s.field("max_masks"), "mask count range must satisfy 1 <= min <= max");
  if (!(p.min_crop_area > 0 && p.min_crop_area < 1)) s.fail(s.field("min_crop_area"), "must lie in (0, 1)");
  if (p.min_unmasked < 0 || p.min_unmasked >= 1) s.fail(s.field("min_unmasked"), "must lie in [0, 1)");
}

void read_match(Section s, MatchConfig& m) {
  s.read("ssim_weight", m.ssim_weight);
  s.read("steps", m.steps);
  s.read("learning_rate", m.learning_rate);
  s.read("center_grid", m.center_grid);
  s.read("initial_scales", m.initial_scales);
  s.read("min_scale", m.min_scale);
  s.read("max_resolution", m.max_resolution);
  s.read("degenerate_std", m.degenerate_std);
  s.finish();
}

void resolve(std::filesystem::path& p, const std::filesystem::path& base) {
  if (!p.empty() && p.is_relative()) p = base / p;
}

}  // namespace

AppConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) +
                      ": syntax error: " + e.what());
  }
  AppConfig cfg;
  Section s(root, "", text, source);
  if (!s.has("schema_version")) s.fail("schema_version", "missing; this build reads version " + std::to_string(kConfigSchemaVersion));
  int version = 0;
  s.read("schema_version", version);
  if (version != kConfigSchemaVersion) {
    s.fail("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                 std::to_string(kConfigSchemaVersion) + ")");
  }
  if (auto n = s.child("network")) read_network(*n, cfg.train.network);
  if (auto t = s.child("train")) {
    auto& c = cfg.train;
    t->read("iterations", c.iterations);
    t->read("batch_size", c.batch_size);
    t->read("learning_rate", c.learning_rate);
    t->read("lr_decay", c.lr_decay);
    t->read("epoch_iterations", c.epoch_iterations);
    t->read("weight_decay", c.weight_decay);
    t->read("grad_clip", c.grad_clip);
    t->read("condition_penalty", c.condition_penalty);
    t->read("decode_noise_std", c.decode_noise_std);
    t->read("anchor_noise_std", c.anchor_noise_std);
    t->read("steg_warmup", c.steg_warmup);
    t->read("seed", c.seed);
    t->read("log_every", c.log_every);
    t->read("log_path", c.log_path);
    t->read("checkpoint_path", c.checkpoint_path);
    t->read("checkpoint_every", c.checkpoint_every);
    t->finish();
    if (!(c.learning_rate > 0)) t->fail("train.learning_rate", "must be positive");
    if (c.iterations < 0 || c.batch_size < 1 || c.epoch_iterations < 1) t->fail("train.batch_size", "counts must be positive");
  }
  if (auto w = s.child("weights")) {
    auto& c = cfg.train.weights;
    w->read("l1", c.l1);
    w->read("ssim", c.ssim);
    w->read("lpips", c.lpips);
    w->read("data", c.data);
    w->read("anchor", c.anchor);
    w->finish();
    for (const auto* name : {"l1", "ssim", "lpips", "data", "anchor"}) {
      const double v = root["weights"].value(name, 0.0);
      if (v < 0) w->fail(std::string("weights.") + name, "must be >= 0");
    }
  }
  if (auto t = s.child("tamper")) read_tamper(*t, cfg.train.tamper);
  if (auto c = s.child("corpus")) {
    c->read("dir", cfg.corpus.dir);
    c->read("generate", cfg.corpus.generate);
    c->read("seed", cfg.corpus.seed);
    c->read("image_size", cfg.corpus.image_size);
    c->finish();
  }
  auto& pipe = cfg.evaluate.pipeline;
  if (auto m = s.child("match")) read_match(*m, pipe.match);
  if (auto p = s.child("pipeline")) {
    p->read("checkpoint", pipe.checkpoint);
    p->read("crop_threshold", pipe.crop_threshold);
    p->read("crop_gain", pipe.crop_gain);
    p->read("decode_noise_std", pipe.decode_noise_std);
    p->read("anchor_noise_std", pipe.anchor_noise_std);
    p->read("detect_threshold", pipe.detect_threshold);
    p->read("detect_min_area", pipe.detect_min_area);
    p->read("seed", pipe.seed);
    p->finish();
  }
  if (auto e = s.child("evaluate")) {
    auto& c = cfg.evaluate;
    e->read("mask_rates", c.mask_rates);
    e->read("crop_rates", c.crop_rates);
    e->read("mixed", c.mixed);
    e->read("distortions", c.distortions);
    e->read("max_images", c.max_images);
    e->read("seed", c.seed);
    if (auto d = e->child("distortion")) read_distortion(*d, c.distortion);
    e->finish();
  }
  s.finish();
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  auto cfg = parse_config(ss.str(), path.string());
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  resolve(cfg.train.log_path, base);
  resolve(cfg.train.checkpoint_path, base);
  resolve(cfg.corpus.dir, base);
  resolve(cfg.evaluate.pipeline.checkpoint, base);
  return cfg;
}

nlohmann::json default_config_json() {
  const AppConfig cfg;
  const auto& t = cfg.train;
  const auto& n = t.network;
  const auto& p = t.tamper;
  const auto& d = p.distortion;
  const auto& m = cfg.evaluate.pipeline.match;
  const auto& e = cfg.evaluate;
  const auto distortion = json{{"noise", d.noise},
                               {"noise_std", d.noise_std},
                               {"jpeg", d.jpeg},
                               {"jpeg_quality", d.jpeg_quality},
                               {"brightness", d.brightness},
                               {"brightness_max", d.brightness_max},
                               {"hue", d.hue},
                               {"hue_max", d.hue_max},
                               {"contrast", d.contrast},
                               {"contrast_min", d.contrast_min},
                               {"contrast_max", d.contrast_max}};
  json mixed = json::array();
  for (const auto& [c, k] : e.mixed) mixed.push_back({c, k});
  return json{
      {"schema_version", kConfigSchemaVersion},
      {"network",
       {{"profile", n.profile},
        {"height", n.height},
        {"width", n.width},
        {"patch", n.patch},
        {"dim", n.dim},
        {"heads", n.heads},
        {"tokenizer_depth", n.tokenizer_depth},
        {"detokenizer_depth", n.detokenizer_depth},
        {"tacb_blocks", n.tacb_blocks},
        {"rho_max", n.rho_max},
        {"condition_cap", n.condition_cap},
        {"fen_width", n.fen_width},
        {"fen_scales", n.fen_scales},
        {"anchor_blocks", n.anchor_blocks},
        {"anchor_width", n.anchor_width},
        {"anchor_rho_max", n.anchor_rho_max},
        {"init_seed", n.init_seed},
        {"rdt", {{"rows", n.rdt.rows}, {"cols", n.rdt.cols}, {"rep_rows", n.rdt.rep_rows}, {"rep_cols", n.rdt.rep_cols}}},
        {"bch", {{"m", n.bch.m}, {"t", n.bch.t}}}}},
      {"train",
       {{"iterations", t.iterations},
        {"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"lr_decay", t.lr_decay},
        {"epoch_iterations", t.epoch_iterations},
        {"weight_decay", t.weight_decay},
        {"grad_clip", t.grad_clip},
        {"condition_penalty", t.condition_penalty},
        {"decode_noise_std", t.decode_noise_std},
        {"anchor_noise_std", t.anchor_noise_std},
        {"steg_warmup", t.steg_warmup},
        {"seed", t.seed},
        {"log_every", t.log_every},
        {"log_path", "train_log.jsonl"},
        {"checkpoint_path", "model.ckpt"},
        {"checkpoint_every", t.checkpoint_every}}},
      {"weights",
       {{"l1", t.weights.l1},
        {"ssim", t.weights.ssim},
        {"lpips", t.weights.lpips},
        {"data", t.weights.data},
        {"anchor", t.weights.anchor}}},
      {"tamper",
       {{"min_unmasked", p.min_unmasked},
        {"min_masks", p.min_masks},
        {"max_masks", p.max_masks},
        {"min_crop_area", p.min_crop_area},
        {"tau", p.tau},
        {"mask_probability", p.mask_probability},
        {"crop_probability", p.crop_probability},
        {"transition_probability", p.transition_probability},
        {"distortion_probability", p.distortion_probability},
        {"distortion", distortion}}},
      {"corpus", {{"dir", ""}, {"generate", cfg.corpus.generate}, {"seed", cfg.corpus.seed}, {"image_size", 0}}},
      {"match",
       {{"ssim_weight", m.ssim_weight},
        {"steps", m.steps},
        {"learning_rate", m.learning_rate},
        {"center_grid", m.center_grid},
        {"initial_scales", m.initial_scales},
        {"min_scale", m.min_scale},
        {"max_resolution", m.max_resolution},
        {"degenerate_std", m.degenerate_std}}},
      {"pipeline",
       {{"checkpoint", "model.ckpt"},
        {"crop_threshold", e.pipeline.crop_threshold},
        {"crop_gain", e.pipeline.crop_gain},
        {"decode_noise_std", e.pipeline.decode_noise_std},
        {"anchor_noise_std", e.pipeline.anchor_noise_std},
        {"detect_threshold", e.pipeline.detect_threshold},
        {"detect_min_area", e.pipeline.detect_min_area},
        {"seed", e.pipeline.seed}}},
      {"evaluate",
       {{"mask_rates", e.mask_rates},
        {"crop_rates", e.crop_rates},
        {"mixed", mixed},
        {"distortions", e.distortions},
        {"max_images", e.max_images},
        {"seed", e.seed},
        {"distortion", distortion}}}};
}

ChartCorpus load_config_corpus(const AppConfig& cfg) {
  const auto& n = cfg.train.network;
  if (!cfg.corpus.dir.empty()) return load_corpus(cfg.corpus.dir, n.height, n.width);
  const int size = cfg.corpus.image_size > 0 ? cfg.corpus.image_size : n.height;
  if (size < n.height || size < n.width) throw ConfigError("corpus.image_size is smaller than the network input");
  return generate_charts(cfg.corpus.generate, size, size, cfg.corpus.seed);
}

}  // namespace chartlink
