#include "chartlink/iib.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>
#include <mutex>
#include <string>

#include "chartlink/errors.hpp"

namespace chartlink {

torch::Generator make_generator(uint64_t seed) { return at::detail::createCPUGenerator(seed); }

void TokenGeometry::validate() const {
  if (patch < 1 || height % patch != 0 || width % patch != 0) {
    throw InvalidParams("image size " + std::to_string(height) + "x" + std::to_string(width) +
                        " is not a multiple of the patch size " + std::to_string(patch));
  }
  if (dim < 1 || heads < 1 || dim % heads != 0) throw InvalidParams("token dimension must be divisible by heads");
  if (depth < 0) throw InvalidParams("tokenizer depth must be >= 0");
}

PatchTokenizerImpl::PatchTokenizerImpl(int64_t channels, TokenGeometry geometry)
    : channels_(channels), geometry_(geometry) {
  geometry_.validate();
  embed_ = register_module(
      "embed", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, geometry_.dim, geometry_.patch).stride(geometry_.patch)));
  position_ = register_parameter("position", torch::zeros({1, geometry_.tokens(), geometry_.dim}));
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int64_t i = 0; i < geometry_.depth; ++i) blocks_->push_back(TransformerBlock(geometry_.dim, geometry_.heads));
}

torch::Tensor PatchTokenizerImpl::forward(const torch::Tensor& image) {
  if (image.dim() != 4 || image.size(1) != channels_ || image.size(2) != geometry_.height ||
      image.size(3) != geometry_.width) {
    throw ShapeMismatch("tokenizer expects [B, " + std::to_string(channels_) + ", " +
                        std::to_string(geometry_.height) + ", " + std::to_string(geometry_.width) + "]");
  }
  auto x = embed_(image).flatten(2).transpose(1, 2) + position_;
  for (auto& block : *blocks_) x = block->as<TransformerBlock>()->forward(x);
  return x;
}

torch::Tensor PatchTokenizerImpl::embedding_matrix() const { return embed_->weight.reshape({geometry_.dim, -1}); }

void PatchTokenizerImpl::init_orthogonal(torch::Generator gen) {
  const int64_t patch_dim = channels_ * geometry_.patch * geometry_.patch;
  if (patch_dim > geometry_.dim) {
    throw InvalidParams("orthogonal patch embedding needs C*p*p <= D");
  }
  torch::NoGradGuard no_grad;
  auto q = random_orthogonal(geometry_.dim, gen).narrow(1, 0, patch_dim);
  embed_->weight.copy_(q.reshape(embed_->weight.sizes()));
  embed_->bias.zero_();
}

DetokenizerImpl::DetokenizerImpl(int64_t channels, TokenGeometry geometry, bool sigmoid_output)
    : channels_(channels), geometry_(geometry), sigmoid_output_(sigmoid_output) {
  geometry_.validate();
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int64_t i = 0; i < geometry_.depth; ++i) blocks_->push_back(TransformerBlock(geometry_.dim, geometry_.heads));
  readout_ = register_module("readout",
                             torch::nn::Linear(geometry_.dim, channels * geometry_.patch * geometry_.patch));
}

torch::Tensor DetokenizerImpl::forward(const torch::Tensor& tokens) {
  if (tokens.dim() != 3 || tokens.size(1) != geometry_.tokens() || tokens.size(2) != geometry_.dim) {
    throw ShapeMismatch("detokenizer expects [B, " + std::to_string(geometry_.tokens()) + ", " +
                        std::to_string(geometry_.dim) + "] tokens");
  }
  auto x = tokens;
  for (auto& block : *blocks_) x = block->as<TransformerBlock>()->forward(x);
  const int64_t b = x.size(0);
  const int64_t p = geometry_.patch;
  auto patches = readout_(x).reshape({b, geometry_.grid_rows(), geometry_.grid_cols(), channels_, p, p});
  auto image = patches.permute({0, 3, 1, 4, 2, 5}).reshape({b, channels_, geometry_.height, geometry_.width});
  return sigmoid_output_ ? torch::sigmoid(image) : image;
}

void DetokenizerImpl::init_as_inverse_of(const PatchTokenizerImpl& tokenizer) {
  torch::NoGradGuard no_grad;
  readout_->weight.copy_(tokenizer.embedding_matrix().t());
  readout_->bias.zero_();
}

namespace {
std::mutex& inverse_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

BroadcastMatrixImpl::BroadcastMatrixImpl(int64_t tokens, double condition_cap, torch::Generator gen)
    : tokens_(tokens), condition_cap_(condition_cap) {
  if (tokens < 1) throw InvalidParams("broadcast matrix needs at least one token");
  if (!(condition_cap > 1.0)) throw InvalidParams("condition cap must exceed 1");
  basis_ = register_buffer("basis", random_orthogonal(tokens, gen));
  learnable_ = register_parameter("learnable", torch::eye(tokens));
}

torch::Tensor BroadcastMatrixImpl::matrix() const { return torch::matmul(basis_, learnable_); }

torch::Tensor BroadcastMatrixImpl::broadcast(const torch::Tensor& tokens) const {
  if (tokens.dim() < 2 || tokens.size(-2) != tokens_) {
    throw ShapeMismatch("broadcast expects " + std::to_string(tokens_) + " tokens");
  }
  return torch::matmul(matrix(), tokens);
}

torch::Tensor BroadcastMatrixImpl::unbroadcast(const torch::Tensor& tokens) const {
  if (tokens.dim() < 2 || tokens.size(-2) != tokens_) {
    throw ShapeMismatch("unbroadcast expects " + std::to_string(tokens_) + " tokens");
  }
  if (torch::GradMode::is_enabled() && learnable_.requires_grad()) {
    if (condition_number() > condition_cap_) throw SingularMatrix("broadcast matrix exceeds its condition cap");
    auto m = matrix();
    return torch::linalg_solve(m.dim() < tokens.dim() ? m.expand({tokens.size(0), tokens_, tokens_}) : m, tokens);
  }
  torch::Tensor inverse;
  {
    std::lock_guard<std::mutex> lock(inverse_mutex());
    const int64_t version = static_cast<int64_t>(learnable_._version()) ^
                            static_cast<int64_t>(reinterpret_cast<uintptr_t>(learnable_.data_ptr()));
    if (!cached_inverse_.defined() || version != cached_version_) {
      torch::NoGradGuard no_grad;
      if (condition_number() > condition_cap_) throw SingularMatrix("broadcast matrix exceeds its condition cap");
      // M^-1 = L^-1 Q^T, computed in double for a clean cache.
      auto l_inv = torch::linalg_inv(learnable_.to(torch::kFloat64));
      cached_inverse_ = torch::matmul(l_inv, basis_.to(torch::kFloat64).t()).to(torch::kFloat32);
      cached_version_ = version;
    }
    inverse = cached_inverse_;
  }
  return torch::matmul(inverse, tokens);
}

double BroadcastMatrixImpl::condition_number() const {
  torch::NoGradGuard no_grad;
  auto s = torch::linalg_svdvals(learnable_.to(torch::kFloat64));
  const double smin = s.min().item<double>();
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s.max().item<double>() / smin;
}

torch::Tensor BroadcastMatrixImpl::condition_penalty() const {
  auto s = torch::linalg_svdvals(learnable_);
  auto log_cond = torch::log(s.max()) - torch::log(s.min());
  return torch::relu(log_cond - std::log(condition_cap_ / 2.0)).pow(2);
}

void BroadcastMatrixImpl::project() {
  if (condition_number() <= condition_cap_) return;
  torch::NoGradGuard no_grad;
  auto [u, s, vh] = torch::linalg_svd(learnable_.to(torch::kFloat64), false);
  // Keep a small margin below the cap so float32 round-off cannot exceed it.
  const double floor = s.max().item<double>() / (condition_cap_ * 0.99);
  s = s.clamp_min(floor);
  learnable_.copy_(torch::matmul(u * s.unsqueeze(0), vh).to(torch::kFloat32));
}

void BroadcastMatrixImpl::set_learnable(const torch::Tensor& value) {
  if (value.sizes() != learnable_.sizes()) throw ShapeMismatch("learnable broadcast factor must be N x N");
  torch::NoGradGuard no_grad;
  learnable_.copy_(value);
}

}  // namespace chartlink
