#pragma once

#include <torch/torch.h>

#include <nlohmann/json.hpp>

#include <string>

#include "chartlink/anchor.hpp"
#include "chartlink/iib.hpp"
#include "chartlink/payload.hpp"
#include "chartlink/rdt.hpp"
#include "chartlink/steg_flow.hpp"

namespace chartlink {

struct NetworkConfig {
  std::string profile = "toy";
  int height = 96;
  int width = 96;
  int patch = 6;  // one token per RDT module cell at 96x96
  int dim = 192;
  int heads = 4;
  int tokenizer_depth = 2;
  int detokenizer_depth = 1;
  int tacb_blocks = 2;
  double rho_max = 2.0;
  double condition_cap = 1000.0;
  int fen_width = 8;
  int fen_scales = 3;
  int anchor_blocks = 2;
  int anchor_width = 16;
  double anchor_rho_max = 2.0;
  RdtConfig rdt{4, 8, 4, 2, 96, 96};
  BchParams bch = BchParams::for_capacity(32);
  uint64_t init_seed = 0;

  /// 96x96, patch 6, two coupling blocks, RDT(4, 8, 4, 2): 32 payload bits.
  static NetworkConfig toy();
  /// 384x384, patch 16, four coupling blocks, RDT(18, 18, 2, 2): 324 payload bits.
  static NetworkConfig full();

  TokenGeometry tokenizer_geometry() const;
  TokenGeometry detokenizer_geometry() const;
  /// Throws InvalidParams.
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

void to_json(nlohmann::json& j, const NetworkConfig& c);
void from_json(const nlohmann::json& j, NetworkConfig& c);
void to_json(nlohmann::json& j, const RdtConfig& c);
void from_json(const nlohmann::json& j, RdtConfig& c);

struct EncodeResult {
  torch::Tensor stego;          // [B, 3, H, W], clamped and 8-bit quantized (straight-through gradient)
  torch::Tensor stego_float;    // same before quantization
  torch::Tensor encoded;        // data-path output before the anchor is embedded
  torch::Tensor data_residual;  // lost coupling output, [B, N, D]
  torch::Tensor anchor_residual;
};

/// Straight-through 8-bit quantization: forward rounds and clamps, backward is identity.
torch::Tensor quantize_ste(const torch::Tensor& x);

/// Host and data tokenizers, the broadcast matrix, coupling blocks, the
/// enhancement network and the anchor flow, wired for embedding and decoding.
class StegoNetworkImpl : public torch::nn::Module {
 public:
  explicit StegoNetworkImpl(NetworkConfig cfg);

  const NetworkConfig& config() const noexcept { return cfg_; }

  /// host [B, 3, H, W] in [0, 1], modules [B, rows, cols] of 0/1.
  EncodeResult encode(const torch::Tensor& host, const torch::Tensor& modules);

  /// Per-module means in (0, 1), [B, rows, cols]. `received` is at net size and aligned to the frame.
  torch::Tensor decode_data(const torch::Tensor& received, torch::Generator gen, double noise_std = 1.0);
  /// Decoded data raster before averaging, [B, 1, H, W].
  torch::Tensor decode_raster(const torch::Tensor& received, torch::Generator gen, double noise_std = 1.0);

  /// Anchor estimate [B, 3, H, W] from a received image resized to net size.
  torch::Tensor decode_anchor(const torch::Tensor& received, torch::Generator gen, double noise_std = 0.0);

  const torch::Tensor& anchor() const noexcept { return anchor_; }

  PatchTokenizer host_tokenizer{nullptr};
  PatchTokenizer data_tokenizer{nullptr};
  BroadcastMatrix broadcast{nullptr};
  TacbStack coupling{nullptr};
  Detokenizer host_detokenizer{nullptr};
  Detokenizer data_detokenizer{nullptr};
  Fen fen{nullptr};
  AnchorFlow anchor_flow{nullptr};

 private:
  NetworkConfig cfg_;
  torch::Tensor anchor_;
};
TORCH_MODULE(StegoNetwork);

}  // namespace chartlink
