#pragma once

#include <torch/torch.h>

namespace chartlink {

/// Pre-norm multi-head self-attention block over [B, N, D] tokens.
/// With `zero_init` the residual branches start at zero so the block is the
/// identity at initialization.
class TransformerBlockImpl : public torch::nn::Module {
 public:
  TransformerBlockImpl(int64_t dim, int64_t heads, int64_t mlp_ratio = 2, bool zero_init = true);

  torch::Tensor forward(const torch::Tensor& x);

 private:
  int64_t heads_;
  torch::nn::LayerNorm norm1_{nullptr};
  torch::nn::Linear qkv_{nullptr};
  torch::nn::Linear proj_{nullptr};
  torch::nn::LayerNorm norm2_{nullptr};
  torch::nn::Linear fc1_{nullptr};
  torch::nn::Linear fc2_{nullptr};
};
TORCH_MODULE(TransformerBlock);

/// Random orthogonal matrix (QR of a Gaussian draw with sign correction).
torch::Tensor random_orthogonal(int64_t n, torch::Generator gen);

}  // namespace chartlink
