#include "chartlink/model.hpp"

#include "chartlink/errors.hpp"

namespace chartlink {

NetworkConfig NetworkConfig::toy() { return NetworkConfig{}; }

NetworkConfig NetworkConfig::full() {
  NetworkConfig c;
  c.profile = "full";
  c.height = c.width = 384;
  c.patch = 16;
  c.dim = 768;
  c.heads = 8;
  c.tokenizer_depth = 2;
  c.detokenizer_depth = 2;
  c.tacb_blocks = 4;
  c.fen_width = 32;
  c.fen_scales = 4;
  c.anchor_blocks = 4;
  c.anchor_width = 64;
  c.rdt = RdtConfig{18, 18, 2, 2, 384, 384};
  c.bch = BchParams::for_capacity(c.rdt.capacity());
  return c;
}

TokenGeometry NetworkConfig::tokenizer_geometry() const {
  return TokenGeometry{height, width, patch, dim, heads, tokenizer_depth};
}

TokenGeometry NetworkConfig::detokenizer_geometry() const {
  return TokenGeometry{height, width, patch, dim, heads, detokenizer_depth};
}

void NetworkConfig::validate() const {
  tokenizer_geometry().validate();
  detokenizer_geometry().validate();
  rdt.validate();
  if (rdt.height != height || rdt.width != width) throw InvalidParams("RDT raster size must equal the network size");
  if (height % 2 || width % 2) throw InvalidParams("network size must be even for the Haar transform");
  if (tacb_blocks < 1 || anchor_blocks < 1) throw InvalidParams("flows need at least one block");
  if (!(rho_max > 0) || !(anchor_rho_max > 0)) throw InvalidParams("rho clamp must be positive");
  if (!(condition_cap > 1)) throw InvalidParams("condition cap must exceed 1");
  if (fen_width < 1 || fen_scales < 1 || anchor_width < 1) throw InvalidParams("network widths must be positive");
  if (3 * patch * patch > dim) throw InvalidParams("token dimension must hold a full RGB patch (3*p*p <= D)");
}

void to_json(nlohmann::json& j, const RdtConfig& c) {
  j = nlohmann::json{{"rows", c.rows},         {"cols", c.cols},     {"rep_rows", c.rep_rows},
                     {"rep_cols", c.rep_cols}, {"height", c.height}, {"width", c.width}};
}

void from_json(const nlohmann::json& j, RdtConfig& c) {
  j.at("rows").get_to(c.rows);
  j.at("cols").get_to(c.cols);
  j.at("rep_rows").get_to(c.rep_rows);
  j.at("rep_cols").get_to(c.rep_cols);
  j.at("height").get_to(c.height);
  j.at("width").get_to(c.width);
}

void to_json(nlohmann::json& j, const NetworkConfig& c) {
  j = nlohmann::json{{"profile", c.profile},
                     {"height", c.height},
                     {"width", c.width},
                     {"patch", c.patch},
                     {"dim", c.dim},
                     {"heads", c.heads},
                     {"tokenizer_depth", c.tokenizer_depth},
                     {"detokenizer_depth", c.detokenizer_depth},
                     {"tacb_blocks", c.tacb_blocks},
                     {"rho_max", c.rho_max},
                     {"condition_cap", c.condition_cap},
                     {"fen_width", c.fen_width},
                     {"fen_scales", c.fen_scales},
                     {"anchor_blocks", c.anchor_blocks},
                     {"anchor_width", c.anchor_width},
                     {"anchor_rho_max", c.anchor_rho_max},
                     {"rdt", c.rdt},
                     {"bch", {{"m", c.bch.m}, {"t", c.bch.t}}},
                     {"init_seed", c.init_seed}};
}

void from_json(const nlohmann::json& j, NetworkConfig& c) {
  const NetworkConfig base = j.value("profile", std::string("toy")) == "full" ? NetworkConfig::full() : NetworkConfig::toy();
  c = base;
  c.profile = j.value("profile", base.profile);
  c.height = j.value("height", base.height);
  c.width = j.value("width", base.width);
  c.patch = j.value("patch", base.patch);
  c.dim = j.value("dim", base.dim);
  c.heads = j.value("heads", base.heads);
  c.tokenizer_depth = j.value("tokenizer_depth", base.tokenizer_depth);
  c.detokenizer_depth = j.value("detokenizer_depth", base.detokenizer_depth);
  c.tacb_blocks = j.value("tacb_blocks", base.tacb_blocks);
  c.rho_max = j.value("rho_max", base.rho_max);
  c.condition_cap = j.value("condition_cap", base.condition_cap);
  c.fen_width = j.value("fen_width", base.fen_width);
  c.fen_scales = j.value("fen_scales", base.fen_scales);
  c.anchor_blocks = j.value("anchor_blocks", base.anchor_blocks);
  c.anchor_width = j.value("anchor_width", base.anchor_width);
  c.anchor_rho_max = j.value("anchor_rho_max", base.anchor_rho_max);
  if (j.contains("rdt")) {
    j.at("rdt").get_to(c.rdt);
  }
  if (j.contains("bch")) {
    c.bch.m = j.at("bch").at("m").get<int>();
    c.bch.t = j.at("bch").at("t").get<int>();
  } else if (j.contains("rdt")) {
    c.bch = BchParams::for_capacity(c.rdt.capacity());
  }
  c.init_seed = j.value("init_seed", base.init_seed);
}

torch::Tensor quantize_ste(const torch::Tensor& x) {
  auto q = torch::round(torch::clamp(x, 0.0, 1.0) * 255.0) / 255.0;
  return x + (q - x).detach();
}

StegoNetworkImpl::StegoNetworkImpl(NetworkConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  auto gen = make_generator(cfg_.init_seed);
  const auto tok = cfg_.tokenizer_geometry();
  const auto detok = cfg_.detokenizer_geometry();

  host_tokenizer = register_module("host_tokenizer", PatchTokenizer(3, tok));
  data_tokenizer = register_module("data_tokenizer", PatchTokenizer(1, tok));
  broadcast = register_module("broadcast", BroadcastMatrix(tok.tokens(), cfg_.condition_cap, gen));
  coupling = register_module("coupling", TacbStack(cfg_.tacb_blocks, cfg_.dim, cfg_.heads, cfg_.rho_max));
  host_detokenizer = register_module("host_detokenizer", Detokenizer(3, detok, false));
  data_detokenizer = register_module("data_detokenizer", Detokenizer(1, detok, true));
  fen = register_module("fen", Fen(3, cfg_.fen_width, cfg_.fen_scales));
  anchor_flow = register_module("anchor_flow", AnchorFlow(cfg_.anchor_blocks, cfg_.anchor_width, cfg_.anchor_rho_max));
  anchor_ = register_buffer("anchor", make_anchor(cfg_.height, cfg_.width));

  // Orthogonal patch embeddings make tokenization lossless at initialization,
  // and the host readout starts as its exact inverse.
  host_tokenizer->init_orthogonal(gen);
  data_tokenizer->init_orthogonal(gen);
  host_detokenizer->init_as_inverse_of(*host_tokenizer);
  data_detokenizer->init_as_inverse_of(*data_tokenizer);
}

EncodeResult StegoNetworkImpl::encode(const torch::Tensor& host, const torch::Tensor& modules) {
  if (host.dim() != 4 || host.size(1) != 3 || host.size(2) != cfg_.height || host.size(3) != cfg_.width) {
    throw ShapeMismatch("encode expects hosts of shape [B, 3, " + std::to_string(cfg_.height) + ", " +
                        std::to_string(cfg_.width) + "]");
  }
  if (modules.dim() != 3 || modules.size(0) != host.size(0) || modules.size(1) != cfg_.rdt.rows ||
      modules.size(2) != cfg_.rdt.cols) {
    throw ShapeMismatch("encode expects modules of shape [B, " + std::to_string(cfg_.rdt.rows) + ", " +
                        std::to_string(cfg_.rdt.cols) + "]");
  }
  auto raster = rdt_tile(modules.to(host.dtype()), cfg_.rdt);
  auto host_tokens = host_tokenizer->forward(host);
  auto data_tokens = broadcast->broadcast(data_tokenizer->forward(raster));
  auto [stego_tokens, residual] = coupling->conceal(host_tokens, data_tokens);
  EncodeResult out;
  out.encoded = host_detokenizer->forward(stego_tokens);
  out.data_residual = residual;
  auto [stego, anchor_residual] =
      anchor_flow->embed(out.encoded, anchor_.unsqueeze(0).expand({host.size(0), -1, -1, -1}));
  out.stego_float = stego;
  out.anchor_residual = anchor_residual;
  out.stego = quantize_ste(stego);
  return out;
}

torch::Tensor StegoNetworkImpl::decode_raster(const torch::Tensor& received, torch::Generator gen, double noise_std) {
  if (received.dim() != 4 || received.size(1) != 3 || received.size(2) != cfg_.height ||
      received.size(3) != cfg_.width) {
    throw ShapeMismatch("decode expects images of shape [B, 3, " + std::to_string(cfg_.height) + ", " +
                        std::to_string(cfg_.width) + "]");
  }
  auto tokens = host_tokenizer->forward(fen->forward(received));
  auto data_tokens = broadcast->unbroadcast(coupling->reveal(tokens, gen, noise_std));
  return data_detokenizer->forward(data_tokens);
}

torch::Tensor StegoNetworkImpl::decode_data(const torch::Tensor& received, torch::Generator gen, double noise_std) {
  return rdt_average(decode_raster(received, gen, noise_std), cfg_.rdt);
}

torch::Tensor StegoNetworkImpl::decode_anchor(const torch::Tensor& received, torch::Generator gen, double noise_std) {
  if (received.dim() != 4 || received.size(2) != cfg_.height || received.size(3) != cfg_.width) {
    throw ShapeMismatch("anchor decode expects net-size images");
  }
  return anchor_flow->decode(received, gen, noise_std);
}

}  // namespace chartlink
