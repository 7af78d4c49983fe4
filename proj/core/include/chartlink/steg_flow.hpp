#pragma once

#include <torch/torch.h>

#include <utility>

#include "chartlink/iib.hpp"

namespace chartlink {

/// Attention-based function learner used for phi, eta and rho: one
/// self-attention block followed by a zero-initialized linear head.
class TokenLearnerImpl : public torch::nn::Module {
 public:
  TokenLearnerImpl(int64_t dim, int64_t heads);
  torch::Tensor forward(const torch::Tensor& tokens);

 private:
  TransformerBlock block_{nullptr};
  torch::nn::LayerNorm norm_{nullptr};
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(TokenLearner);

/// One token affine coupling block.
///   h' = h + phi(t)
///   t' = eta(h') + t * exp(rho(h'))
/// rho is squashed into [-rho_max, rho_max].
class TacbImpl : public torch::nn::Module {
 public:
  TacbImpl(int64_t dim, int64_t heads, double rho_max);

  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& host, const torch::Tensor& data);
  std::pair<torch::Tensor, torch::Tensor> inverse(const torch::Tensor& host, const torch::Tensor& data);

  torch::Tensor clamped_rho(const torch::Tensor& host);

  TokenLearner phi{nullptr};
  TokenLearner eta{nullptr};
  TokenLearner rho{nullptr};

 private:
  double rho_max_;
};
TORCH_MODULE(Tacb);

class TacbStackImpl : public torch::nn::Module {
 public:
  TacbStackImpl(int64_t blocks, int64_t dim, int64_t heads, double rho_max);

  /// Runs every block forward. Returns (stego tokens, residual data tokens).
  std::pair<torch::Tensor, torch::Tensor> conceal(const torch::Tensor& host, const torch::Tensor& data);

  /// Runs every block backward starting from the given residual. Returns
  /// (recovered host tokens, recovered data tokens).
  std::pair<torch::Tensor, torch::Tensor> reveal_from(const torch::Tensor& stego, const torch::Tensor& residual);

  /// Backward pass with the residual drawn from N(0, noise_std^2).
  torch::Tensor reveal(const torch::Tensor& stego, torch::Generator gen, double noise_std = 1.0);

  int64_t size() const noexcept { return static_cast<int64_t>(blocks_->size()); }
  Tacb block(int64_t i) const { return Tacb(blocks_->ptr<TacbImpl>(i)); }

 private:
  torch::nn::ModuleList blocks_;
};
TORCH_MODULE(TacbStack);

/// Nested-skip encoder-decoder (UNet++ style) applied to the received image.
/// The output is the input plus a learned correction whose head starts at zero.
class FenImpl : public torch::nn::Module {
 public:
  FenImpl(int64_t channels, int64_t width, int64_t scales);
  torch::Tensor forward(const torch::Tensor& image);

 private:
  int64_t scales_;
  // nodes_[i][j] is X(i, j) in the nested grid.
  std::vector<std::vector<torch::nn::Sequential>> nodes_;
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(Fen);

}  // namespace chartlink
