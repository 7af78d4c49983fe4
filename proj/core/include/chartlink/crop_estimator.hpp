#pragma once

#include <torch/torch.h>

#include <nlohmann/json.hpp>

#include "chartlink/metrics.hpp"

namespace chartlink {

/// Crop rectangle in normalized frame coordinates: center (cx, cy) and
/// extent (sx, sy), all relative to the uncropped frame.
struct CropParams {
  double cx = 0.5;
  double cy = 0.5;
  double sx = 1.0;
  double sy = 1.0;

  static CropParams full_frame() { return {}; }
  /// Rectangle lies inside the unit frame with positive extent.
  bool valid(double tolerance = 1e-9) const;
  Box box() const;
  bool operator==(const CropParams&) const = default;
};

void to_json(nlohmann::json& j, const CropParams& p);
void from_json(const nlohmann::json& j, CropParams& p);

struct MatchConfig {
  double ssim_weight = 0.1;  // lambda
  int steps = 300;
  double learning_rate = 0.05;
  /// Restart grid: centers on a grid x grid lattice, each at every initial scale.
  int center_grid = 3;
  std::vector<double> initial_scales{0.8, 0.45};
  double min_scale = 0.05;
  /// Matching runs on images downsampled to at most this many pixels per side.
  int max_resolution = 64;
  /// The first coarse_steps run every start on the L1 term alone; the
  /// refine_starts best then continue on the full objective.
  int coarse_steps = 100;
  int refine_starts = 3;
  /// Anchor estimates whose std falls below this are rejected.
  double degenerate_std = 1e-3;
};

struct CropEstimate {
  CropParams params;
  double loss = 0.0;
  double full_frame_loss = 0.0;  // objective of the uncropped frame, same resolution
};

/// Differentiable Rs(I^[crop]): bilinear sample of the crop rectangle of
/// `image` ([B, C, H, W]) at the output size. `params` is [B, 4] = (cx, cy, sx, sy).
torch::Tensor crop_resize(const torch::Tensor& image, const torch::Tensor& params, int64_t out_h, int64_t out_w);
torch::Tensor crop_resize(const torch::Tensor& image, const CropParams& params);

/// Template-matching objective ||est - Rs(anchor^[p])||_1 + lambda (1 - ssim),
/// evaluated per batch row of `params`. Returns [B].
torch::Tensor match_objective(const torch::Tensor& estimate, const torch::Tensor& anchor, const torch::Tensor& params,
                              double ssim_weight);
double match_objective(const torch::Tensor& estimate, const torch::Tensor& anchor, const CropParams& params,
                       double ssim_weight);

/// Multi-start projected Adam over (cx, cy, sx, sy). Throws DegenerateInput.
CropEstimate estimate_crop(const torch::Tensor& anchor_estimate, const torch::Tensor& anchor, const MatchConfig& cfg = {});

/// Places `received` (any size, [C, h, w]) into its rectangle of an
/// out_h x out_w canvas filled with `fill`. Throws InvalidParams when the
/// rectangle is under 4 pixels on a side.
torch::Tensor rectify(const torch::Tensor& received, const CropParams& params, int64_t out_h, int64_t out_w,
                      double fill = 0.5);

/// True when the estimate departs from the full frame by more than threshold.
bool is_cropped(const CropParams& params, double threshold = 0.02);

}  // namespace chartlink
