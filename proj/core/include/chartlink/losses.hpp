#pragma once

#include <torch/torch.h>

#include <functional>

namespace chartlink {

/// Loss weights. `l1`, `ssim` and `lpips` weight the stego-quality terms,
/// `data` the module cross-entropy and `anchor` the anchor reconstruction.
struct LossWeights {
  double l1 = 1.0;
  double ssim = 0.01;
  double lpips = 0.1;
  double data = 0.6;
  double anchor = 0.025;

  /// Throws InvalidParams on a negative weight.
  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

/// Optional perceptual distance, returning a scalar tensor.
using PerceptualDistance = std::function<torch::Tensor(const torch::Tensor&, const torch::Tensor&)>;

/// l1 * |host - stego|_1 + ssim * (1 - SSIM) + lpips * perceptual. Without a
/// perceptual backend the lpips weight is spread proportionally over the other two.
torch::Tensor loss_steg(const torch::Tensor& host, const torch::Tensor& stego, const LossWeights& w,
                        const PerceptualDistance& perceptual = nullptr);

/// data * BCE(decoded, truth).
torch::Tensor loss_data(const torch::Tensor& decoded, const torch::Tensor& truth, const LossWeights& w);

/// anchor * |estimate - Rs(anchor[crop])|_1. `crops` is [B, 4] (cx, cy, sx, sy).
torch::Tensor loss_anchor(const torch::Tensor& estimate, const torch::Tensor& anchor, const torch::Tensor& crops,
                          const LossWeights& w);

struct LossTerms {
  torch::Tensor steg;
  torch::Tensor data;  // may be undefined on cropped batches
  torch::Tensor anchor;
  torch::Tensor penalty;  // may be undefined
};

/// steg + gate * data + anchor (+ penalty). gate is 0 for cropped batches, in
/// which case the data term is left out of the graph entirely.
torch::Tensor total_loss(const LossTerms& terms, bool cropped);

}  // namespace chartlink
