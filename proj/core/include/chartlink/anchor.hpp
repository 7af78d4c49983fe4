#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <utility>

namespace chartlink {

/// The constant anchor pattern at the given size, [3, H, W] in [0, 1]:
/// red and green are monotone sinusoidal ramps along x and y, blue is a
/// fine cosine grid.
torch::Tensor make_anchor(int64_t height, int64_t width);

/// Analytic anchor value at normalized coordinates (u, v) in [0, 1].
std::array<double, 3> anchor_value(double u, double v);

/// FNV-1a over the float bytes; used to check anchor constancy.
uint64_t tensor_fingerprint(const torch::Tensor& t);

/// Orthonormal one-level Haar transform: [B, C, H, W] -> [B, 4C, H/2, W/2].
torch::Tensor haar_forward(const torch::Tensor& x);
torch::Tensor haar_inverse(const torch::Tensor& x);

/// Dense convolutional function learner with a zero-initialized output conv
/// that sees both the input and every intermediate feature map.
class DenseLearnerImpl : public torch::nn::Module {
 public:
  DenseLearnerImpl(int64_t channels, int64_t width);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr};
  torch::nn::Conv2d conv2_{nullptr};
  torch::nn::Conv2d out_{nullptr};
};
TORCH_MODULE(DenseLearner);

class AnchorCouplingImpl : public torch::nn::Module {
 public:
  AnchorCouplingImpl(int64_t channels, int64_t width, double rho_max);
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& image, const torch::Tensor& anchor);
  std::pair<torch::Tensor, torch::Tensor> inverse(const torch::Tensor& image, const torch::Tensor& anchor);

  DenseLearner phi{nullptr};
  DenseLearner eta{nullptr};
  DenseLearner rho{nullptr};

 private:
  torch::Tensor clamped_rho(const torch::Tensor& x);
  double rho_max_;
};
TORCH_MODULE(AnchorCoupling);

/// Channelwise coupling flow hiding the anchor in the encoded image, applied
/// in the Haar domain so spatial positions are preserved.
class AnchorFlowImpl : public torch::nn::Module {
 public:
  AnchorFlowImpl(int64_t blocks, int64_t width, double rho_max);

  /// Returns (stego image, residual anchor stream in the Haar domain).
  std::pair<torch::Tensor, torch::Tensor> embed(const torch::Tensor& encoded, const torch::Tensor& anchor);

  /// Exact inverse of embed given its residual. Returns (encoded, anchor).
  std::pair<torch::Tensor, torch::Tensor> invert(const torch::Tensor& stego, const torch::Tensor& residual);

  /// Anchor estimate with the lost residual drawn from N(0, noise_std^2).
  torch::Tensor decode(const torch::Tensor& received, torch::Generator gen, double noise_std = 1.0);

  int64_t size() const noexcept { return static_cast<int64_t>(blocks_->size()); }
  AnchorCoupling block(int64_t i) const { return AnchorCoupling(blocks_->ptr<AnchorCouplingImpl>(i)); }

 private:
  torch::nn::ModuleList blocks_;
};
TORCH_MODULE(AnchorFlow);

}  // namespace chartlink
