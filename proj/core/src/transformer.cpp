#include "chartlink/transformer.hpp"

#include "chartlink/errors.hpp"

namespace chartlink {

TransformerBlockImpl::TransformerBlockImpl(int64_t dim, int64_t heads, int64_t mlp_ratio, bool zero_init)
    : heads_(heads) {
  if (dim % heads != 0) throw InvalidParams("token dimension must be divisible by the head count");
  norm1_ = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  qkv_ = register_module("qkv", torch::nn::Linear(dim, 3 * dim));
  proj_ = register_module("proj", torch::nn::Linear(dim, dim));
  norm2_ = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  fc1_ = register_module("fc1", torch::nn::Linear(dim, mlp_ratio * dim));
  fc2_ = register_module("fc2", torch::nn::Linear(mlp_ratio * dim, dim));
  if (zero_init) {
    torch::NoGradGuard no_grad;
    proj_->weight.zero_();
    proj_->bias.zero_();
    fc2_->weight.zero_();
    fc2_->bias.zero_();
  }
}

torch::Tensor TransformerBlockImpl::forward(const torch::Tensor& x) {
  const int64_t b = x.size(0);
  const int64_t n = x.size(1);
  const int64_t d = x.size(2);
  const int64_t head_dim = d / heads_;

  auto qkv = qkv_(norm1_(x)).reshape({b, n, 3, heads_, head_dim}).permute({2, 0, 3, 1, 4});
  auto attn = at::scaled_dot_product_attention(qkv[0], qkv[1], qkv[2]);
  auto h = x + proj_(attn.transpose(1, 2).reshape({b, n, d}));
  return h + fc2_(torch::gelu(fc1_(norm2_(h))));
}

torch::Tensor random_orthogonal(int64_t n, torch::Generator gen) {
  auto a = torch::randn({n, n}, gen, torch::kFloat64);
  auto [q, r] = torch::linalg_qr(a);
  q = q * torch::sign(torch::diagonal(r)).unsqueeze(0);
  return q.to(torch::kFloat32);
}

}  // namespace chartlink
