#pragma once

#include <torch/torch.h>

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "chartlink/crop_estimator.hpp"

namespace chartlink {

using Rng = std::mt19937_64;

/// One overlaid texture: a target rectangle in pixels, filled with the
/// normalized source rectangle of texture image `source`, resized to fit.
struct MaskPatch {
  int x0 = 0, y0 = 0, width = 0, height = 0;
  int source = 0;
  CropParams source_rect;
};

struct DistortionSpec {
  double noise_std = 0.0;
  uint64_t noise_seed = 0;
  int jpeg_quality = 0;  // 0 disables
  double brightness = 0.0;
  std::array<double, 3> hue{0.0, 0.0, 0.0};  // per-channel offsets
  double contrast = 1.0;

  bool identity() const;
};

/// Declarative record of everything done to one image. Replaying a spec on
/// the same input reproduces the tampered image exactly.
struct TamperSpec {
  int height = 0;
  int width = 0;
  std::vector<MaskPatch> masks;
  std::optional<CropParams> crop;
  std::optional<std::array<double, 2>> shift;  // (dx, dy) in pixels
  std::optional<DistortionSpec> distortion;
  uint64_t seed = 0;

  bool noop() const;
  /// Fraction of the frame covered by the union of mask rectangles.
  double masked_fraction() const;
};

void to_json(nlohmann::json& j, const TamperSpec& s);
void from_json(const nlohmann::json& j, TamperSpec& s);

struct DistortionConfig {
  bool noise = true;
  double noise_std = 0.02;
  bool jpeg = true;
  int jpeg_quality = 60;
  bool brightness = true;
  double brightness_max = 0.1;
  bool hue = true;
  double hue_max = 0.1;
  bool contrast = true;
  double contrast_min = 0.8;
  double contrast_max = 1.2;
};

/// Constraint bounds and category probabilities for random tampering.
struct TamperPolicy {
  double min_unmasked = 0.2;   // epsilon_m
  int min_masks = 1;
  int max_masks = 4;
  double min_crop_area = 0.1;  // epsilon_c
  double tau = 0.01;           // transition factor
  double mask_probability = 0.5;
  double crop_probability = 0.5;
  double transition_probability = 0.5;
  double distortion_probability = 0.0;
  DistortionConfig distortion;
};

enum class JpegMode { Differentiable, Real };

/// Samples k in [min_masks, max_masks] rectangles leaving >= min_unmasked of the frame untouched.
std::vector<MaskPatch> sample_masks(int height, int width, int textures, const TamperPolicy& policy, Rng& rng);
/// One rectangle covering `rate` of the frame (evaluation grids).
std::vector<MaskPatch> masks_with_rate(int height, int width, int textures, double rate, Rng& rng);
/// Axis-aligned crop of area >= min_crop_area, never the full frame; pixel-exact params.
CropParams sample_crop(int height, int width, double min_area, Rng& rng);
/// Crop keeping `area` of the frame with a random aspect and position (evaluation grids).
CropParams crop_with_area(int height, int width, double area, Rng& rng);
std::array<double, 2> sample_transition(int height, int width, double tau, Rng& rng);
DistortionSpec sample_distortion(const DistortionConfig& cfg, Rng& rng);

/// Pixel rectangle of a crop: {x0, y0, width, height}.
std::array<int, 4> crop_pixels(const CropParams& p, int height, int width);

/// Replays a spec: mask -> crop -> transition -> distort. `image` is [C, H, W];
/// the result has the crop's pixel size when a crop is present.
torch::Tensor apply_tamper(const TamperSpec& spec, const torch::Tensor& image, std::span<const torch::Tensor> textures,
                           JpegMode jpeg = JpegMode::Real);

// Individual stages, usable on [C,H,W] or [B,C,H,W].
torch::Tensor apply_masks(const torch::Tensor& image, std::span<const MaskPatch> masks,
                          std::span<const torch::Tensor> textures);
torch::Tensor apply_crop(const torch::Tensor& image, const CropParams& crop);
torch::Tensor apply_shift(const torch::Tensor& image, double dx, double dy);
torch::Tensor apply_distortion(const torch::Tensor& image, const DistortionSpec& d, JpegMode jpeg);

/// Differentiable JPEG stand-in: 8x8 DCT quantization with cubic soft rounding.
torch::Tensor jpeg_approx(const torch::Tensor& image, int quality);

struct TamperedImage {
  torch::Tensor image;
  TamperSpec spec;
};

TamperedImage random_mask(const torch::Tensor& image, std::span<const torch::Tensor> textures,
                          const TamperPolicy& policy, Rng& rng);
TamperedImage random_crop(const torch::Tensor& image, const TamperPolicy& policy, Rng& rng);
TamperedImage random_transition(const torch::Tensor& image, double tau, Rng& rng);
TamperedImage distort(const torch::Tensor& image, const DistortionConfig& cfg, Rng& rng, JpegMode jpeg);

/// Samples each category independently with the policy's probabilities
/// (all four off is the no-op branch) and applies them in fixed order.
TamperSpec sample_spec(int height, int width, int textures, const TamperPolicy& policy, Rng& rng);
TamperedImage compose(const torch::Tensor& image, std::span<const torch::Tensor> textures, const TamperPolicy& policy,
                      Rng& rng, JpegMode jpeg = JpegMode::Real);

/// Mixed-tampering bookkeeping: crop rate plus the local rate applied to what
/// the crop rate covers (60% crop + 20% mask -> 72%).
double cumulative_tamper_ratio(double crop_rate, double mask_rate);

}  // namespace chartlink
