#include "chartlink/steg_flow.hpp"

#include <string>

#include "chartlink/errors.hpp"

namespace chartlink {

TokenLearnerImpl::TokenLearnerImpl(int64_t dim, int64_t heads) {
  block_ = register_module("block", TransformerBlock(dim, heads, 2, /*zero_init=*/false));
  norm_ = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  head_ = register_module("head", torch::nn::Linear(dim, dim));
  torch::NoGradGuard no_grad;
  head_->weight.zero_();
  head_->bias.zero_();
}

torch::Tensor TokenLearnerImpl::forward(const torch::Tensor& tokens) { return head_(norm_(block_(tokens))); }

TacbImpl::TacbImpl(int64_t dim, int64_t heads, double rho_max) : rho_max_(rho_max) {
  if (!(rho_max > 0)) throw InvalidParams("rho clamp must be positive");
  phi = register_module("phi", TokenLearner(dim, heads));
  eta = register_module("eta", TokenLearner(dim, heads));
  rho = register_module("rho", TokenLearner(dim, heads));
}

torch::Tensor TacbImpl::clamped_rho(const torch::Tensor& host) {
  return rho_max_ * torch::tanh(rho(host) / rho_max_);
}

std::pair<torch::Tensor, torch::Tensor> TacbImpl::forward(const torch::Tensor& host, const torch::Tensor& data) {
  auto h = host + phi(data);
  auto t = eta(h) + data * torch::exp(clamped_rho(h));
  return {h, t};
}

std::pair<torch::Tensor, torch::Tensor> TacbImpl::inverse(const torch::Tensor& host, const torch::Tensor& data) {
  auto t = (data - eta(host)) * torch::exp(-clamped_rho(host));
  auto h = host - phi(t);
  return {h, t};
}

TacbStackImpl::TacbStackImpl(int64_t blocks, int64_t dim, int64_t heads, double rho_max) {
  if (blocks < 0) throw InvalidParams("TACB count must be >= 0");
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int64_t i = 0; i < blocks; ++i) blocks_->push_back(Tacb(dim, heads, rho_max));
}

namespace {
void check_pair(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes() || a.dim() != 3) throw ShapeMismatch("TACB streams must both be [B, N, D]");
}
}  // namespace

std::pair<torch::Tensor, torch::Tensor> TacbStackImpl::conceal(const torch::Tensor& host, const torch::Tensor& data) {
  check_pair(host, data);
  auto h = host;
  auto t = data;
  for (size_t i = 0; i < blocks_->size(); ++i) std::tie(h, t) = blocks_->ptr<TacbImpl>(i)->forward(h, t);
  return {h, t};
}

std::pair<torch::Tensor, torch::Tensor> TacbStackImpl::reveal_from(const torch::Tensor& stego,
                                                                   const torch::Tensor& residual) {
  check_pair(stego, residual);
  auto h = stego;
  auto t = residual;
  for (size_t i = blocks_->size(); i-- > 0;) std::tie(h, t) = blocks_->ptr<TacbImpl>(i)->inverse(h, t);
  return {h, t};
}

torch::Tensor TacbStackImpl::reveal(const torch::Tensor& stego, torch::Generator gen, double noise_std) {
  auto noise = torch::randn(stego.sizes(), gen, stego.options().requires_grad(false)) * noise_std;
  return reveal_from(stego, noise).second;
}

namespace {

torch::nn::Sequential conv_block(int64_t in, int64_t out) {
  return torch::nn::Sequential(
      torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1)),
      torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)),
      torch::nn::Conv2d(torch::nn::Conv2dOptions(out, out, 3).padding(1)),
      torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)));
}

}  // namespace

FenImpl::FenImpl(int64_t channels, int64_t width, int64_t scales) : scales_(scales) {
  if (scales < 1) throw InvalidParams("FEN needs at least one scale");
  nodes_.resize(scales);
  for (int64_t i = 0; i < scales; ++i) {
    const int64_t w = width << i;
    for (int64_t j = 0; i + j < scales; ++j) {
      int64_t in = 0;
      if (j == 0) {
        in = i == 0 ? channels : (width << (i - 1));
      } else {
        in = j * w + (width << (i + 1));
      }
      nodes_[i].push_back(register_module("x" + std::to_string(i) + "_" + std::to_string(j), conv_block(in, w)));
    }
  }
  head_ = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(width, channels, 1)));
  torch::NoGradGuard no_grad;
  head_->weight.zero_();
  head_->bias.zero_();
}

torch::Tensor FenImpl::forward(const torch::Tensor& image) {
  if (image.dim() != 4) throw ShapeMismatch("FEN expects [B, C, H, W]");
  const int64_t factor = int64_t{1} << (scales_ - 1);
  if (image.size(2) % factor != 0 || image.size(3) % factor != 0) {
    throw ShapeMismatch("FEN input size must be divisible by 2^(scales-1)");
  }
  namespace F = torch::nn::functional;
  std::vector<std::vector<torch::Tensor>> x(scales_);
  for (int64_t i = 0; i < scales_; ++i) {
    auto in = i == 0 ? image : F::avg_pool2d(x[i - 1][0], F::AvgPool2dFuncOptions(2));
    x[i].push_back(nodes_[i][0]->forward(in));
  }
  for (int64_t j = 1; j < scales_; ++j) {
    for (int64_t i = 0; i + j < scales_; ++i) {
      std::vector<torch::Tensor> inputs(x[i].begin(), x[i].begin() + j);
      inputs.push_back(F::interpolate(x[i + 1][j - 1], F::InterpolateFuncOptions()
                                                           .scale_factor(std::vector<double>{2.0, 2.0})
                                                           .mode(torch::kNearest)));
      x[i].push_back(nodes_[i][j]->forward(torch::cat(inputs, 1)));
    }
  }
  return image + head_(x[0][scales_ - 1]);
}

}  // namespace chartlink
