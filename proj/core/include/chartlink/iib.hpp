#pragma once

#include <torch/torch.h>

#include <cstdint>

#include "chartlink/transformer.hpp"

namespace chartlink {

/// Token grid geometry shared by the tokenizers and the broadcast matrix.
struct TokenGeometry {
  int64_t height = 384;
  int64_t width = 384;
  int64_t patch = 16;
  int64_t dim = 768;
  int64_t heads = 4;
  int64_t depth = 2;

  int64_t grid_rows() const noexcept { return height / patch; }
  int64_t grid_cols() const noexcept { return width / patch; }
  int64_t tokens() const noexcept { return grid_rows() * grid_cols(); }
  void validate() const;
};

/// Patch-attention image encoder: [B, C, H, W] -> [B, N, D].
class PatchTokenizerImpl : public torch::nn::Module {
 public:
  PatchTokenizerImpl(int64_t channels, TokenGeometry geometry);

  torch::Tensor forward(const torch::Tensor& image);

  /// Patch embedding as a [D, C*p*p] matrix.
  torch::Tensor embedding_matrix() const;
  /// Sets the patch embedding to orthonormal columns so a transposed linear
  /// readout inverts it exactly (requires C*p*p <= D).
  void init_orthogonal(torch::Generator gen);
  const TokenGeometry& geometry() const noexcept { return geometry_; }

 private:
  int64_t channels_;
  TokenGeometry geometry_;
  torch::nn::Conv2d embed_{nullptr};
  torch::Tensor position_;
  torch::nn::ModuleList blocks_;
};
TORCH_MODULE(PatchTokenizer);

/// Transformer decoder back to pixels: [B, N, D] -> [B, C, H, W].
class DetokenizerImpl : public torch::nn::Module {
 public:
  DetokenizerImpl(int64_t channels, TokenGeometry geometry, bool sigmoid_output);

  torch::Tensor forward(const torch::Tensor& tokens);

  /// Readout = transpose of the tokenizer's patch embedding.
  void init_as_inverse_of(const PatchTokenizerImpl& tokenizer);

 private:
  int64_t channels_;
  TokenGeometry geometry_;
  bool sigmoid_output_;
  torch::nn::ModuleList blocks_;
  torch::nn::Linear readout_{nullptr};
};
TORCH_MODULE(Detokenizer);

/// Learnable invertible N x N token mixer, M = Q * L with Q a fixed random
/// orthogonal matrix and L learnable (initialized to I). The condition number
/// of M is kept below `condition_cap` by projection after each update.
class BroadcastMatrixImpl : public torch::nn::Module {
 public:
  BroadcastMatrixImpl(int64_t tokens, double condition_cap, torch::Generator gen);

  torch::Tensor matrix() const;
  /// M * T for T shaped [B, N, D] or [N, D].
  torch::Tensor broadcast(const torch::Tensor& tokens) const;
  /// M^-1 * T. Throws SingularMatrix when cond(M) exceeds the cap.
  torch::Tensor unbroadcast(const torch::Tensor& tokens) const;

  double condition_number() const;
  double condition_cap() const noexcept { return condition_cap_; }
  /// Soft penalty pushing cond(M) below half the cap; differentiable.
  torch::Tensor condition_penalty() const;
  /// Clips the singular values of L so cond(M) <= cap. Call after optimizer steps.
  void project();

  /// Overrides L directly (tests and checkpoint loading).
  void set_learnable(const torch::Tensor& value);

 private:
  int64_t tokens_;
  double condition_cap_;
  torch::Tensor basis_;      // Q, buffer
  torch::Tensor learnable_;  // L, parameter
  mutable torch::Tensor cached_inverse_;
  mutable int64_t cached_version_ = -1;
};
TORCH_MODULE(BroadcastMatrix);

torch::Generator make_generator(uint64_t seed);

}  // namespace chartlink
