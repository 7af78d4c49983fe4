#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chartlink/crop_estimator.hpp"
#include "chartlink/model.hpp"
#include "chartlink/payload.hpp"

namespace chartlink {

struct PipelineConfig {
  std::filesystem::path checkpoint;
  double crop_threshold = 0.02;
  /// A crop is accepted only when its objective is below crop_gain times the
  /// full-frame objective. Masked regions otherwise pull the estimate inward.
  double crop_gain = 0.85;
  double decode_noise_std = 1.0;
  double anchor_noise_std = 0.0;
  MatchConfig match;
  double detect_threshold = 0.08;
  int detect_min_area = 6;
  uint64_t seed = 0;
};

/// Payload codec matching a network's RDT grid and BCH parameters.
PayloadCodec codec_for(const NetworkConfig& cfg);

struct EmbedResult {
  torch::Tensor stego;      // host + watermark at host resolution, unclamped
  torch::Tensor watermark;  // net-scale (stego - host) resized to the host
  torch::Tensor net_stego;  // network output at net size
};

/// Additive watermark embedding for a [3, h, w] host of any resolution.
/// Throws PayloadTooLong.
EmbedResult embed(StegoNetworkImpl& net, const torch::Tensor& host, const std::string& link);

struct DecodedBits {
  DataImage bits;
  torch::Tensor means;  // [rows, cols]
  CropEstimate crop;
  bool cropped = false;
};

/// Crop decision: departs from the full frame and explains the anchor clearly better.
bool accept_crop(const CropEstimate& estimate, const PipelineConfig& cfg);

/// resize -> anchor decode -> crop estimate -> rectify when cropped -> data decode -> average.
DecodedBits decode_bits(StegoNetworkImpl& net, const torch::Tensor& image, const PipelineConfig& cfg);

struct DecodeResult {
  std::string link;
  CropParams crop;
  double confidence = 0.0;  // template-matching objective, lower is better
  int corrected_bits = 0;
  bool cropped = false;
};

/// Full decode. Throws EccFailure (raw bits attached), FramingError or DegenerateInput.
DecodeResult decode(StegoNetworkImpl& net, const torch::Tensor& image, const PipelineConfig& cfg);

struct DetectResult {
  torch::Tensor heatmap;     // [H, W] max-channel absolute difference
  torch::Tensor overlay;     // [3, H, W] aligned image with flagged regions outlined
  std::vector<Box> regions;  // normalized boxes of connected regions above threshold
  CropParams alignment;
};

/// Compares `image` to `reference` after placing it at `alignment` inside the
/// reference frame. Regions outside the aligned rectangle are not flagged.
DetectResult detect(const torch::Tensor& image, const torch::Tensor& reference, const CropParams& alignment,
                    double threshold, int min_area);

}  // namespace chartlink
