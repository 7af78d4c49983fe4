#include "chartlink/anchor.hpp"

#include <cmath>
#include <numbers>

#include "chartlink/errors.hpp"

namespace chartlink {

std::array<double, 3> anchor_value(double u, double v) {
  constexpr double pi = std::numbers::pi;
  constexpr double kGridPeriods = 6.0;
  return {
      0.5 + 0.45 * std::sin(pi * (u - 0.5)),
      0.5 + 0.45 * std::sin(pi * (v - 0.5)),
      0.5 + 0.2 * std::cos(2 * pi * kGridPeriods * u) + 0.2 * std::cos(2 * pi * kGridPeriods * v),
  };
}

torch::Tensor make_anchor(int64_t height, int64_t width) {
  auto anchor = torch::empty({3, height, width}, torch::kFloat32);
  auto acc = anchor.accessor<float, 3>();
  for (int64_t y = 0; y < height; ++y) {
    const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(height);
    for (int64_t x = 0; x < width; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(width);
      const auto value = anchor_value(u, v);
      for (int c = 0; c < 3; ++c) acc[c][y][x] = static_cast<float>(value[c]);
    }
  }
  return anchor;
}

uint64_t tensor_fingerprint(const torch::Tensor& t) {
  const auto cpu = t.detach().to(torch::kCPU).contiguous();
  const auto* bytes = static_cast<const uint8_t*>(cpu.data_ptr());
  const size_t n = cpu.numel() * cpu.element_size();
  uint64_t hash = 1469598103934665603ull;
  for (size_t i = 0; i < n; ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ull;
  }
  return hash;
}

torch::Tensor haar_forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(2) % 2 != 0 || x.size(3) % 2 != 0) {
    throw ShapeMismatch("Haar transform needs [B, C, H, W] with even H and W");
  }
  using torch::indexing::None;
  using torch::indexing::Slice;
  auto a = x.index({Slice(), Slice(), Slice(0, None, 2), Slice(0, None, 2)});
  auto b = x.index({Slice(), Slice(), Slice(0, None, 2), Slice(1, None, 2)});
  auto c = x.index({Slice(), Slice(), Slice(1, None, 2), Slice(0, None, 2)});
  auto d = x.index({Slice(), Slice(), Slice(1, None, 2), Slice(1, None, 2)});
  return torch::cat({(a + b + c + d) * 0.5, (a - b + c - d) * 0.5, (a + b - c - d) * 0.5, (a - b - c + d) * 0.5}, 1);
}

torch::Tensor haar_inverse(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) % 4 != 0) throw ShapeMismatch("inverse Haar needs [B, 4C, H, W]");
  auto parts = x.chunk(4, 1);
  const auto& ll = parts[0];
  const auto& hl = parts[1];
  const auto& lh = parts[2];
  const auto& hh = parts[3];
  auto a = (ll + hl + lh + hh) * 0.5;
  auto b = (ll - hl + lh - hh) * 0.5;
  auto c = (ll + hl - lh - hh) * 0.5;
  auto d = (ll - hl - lh + hh) * 0.5;
  // Interleave back to full resolution.
  auto top = torch::stack({a, b}, -1).flatten(-2);
  auto bottom = torch::stack({c, d}, -1).flatten(-2);
  return torch::stack({top, bottom}, -2).flatten(-3, -2);
}

DenseLearnerImpl::DenseLearnerImpl(int64_t channels, int64_t width) {
  conv1_ = register_module("conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, width, 3).padding(1)));
  conv2_ = register_module("conv2",
                           torch::nn::Conv2d(torch::nn::Conv2dOptions(channels + width, width, 3).padding(1)));
  out_ = register_module("out",
                         torch::nn::Conv2d(torch::nn::Conv2dOptions(channels + 2 * width, channels, 3).padding(1)));
  torch::NoGradGuard no_grad;
  out_->weight.zero_();
  out_->bias.zero_();
}

torch::Tensor DenseLearnerImpl::forward(const torch::Tensor& x) {
  namespace F = torch::nn::functional;
  const auto act = [](const torch::Tensor& t) { return F::leaky_relu(t, F::LeakyReLUFuncOptions().negative_slope(0.2)); };
  auto f1 = act(conv1_(x));
  auto f2 = act(conv2_(torch::cat({x, f1}, 1)));
  return out_(torch::cat({x, f1, f2}, 1));
}

AnchorCouplingImpl::AnchorCouplingImpl(int64_t channels, int64_t width, double rho_max) : rho_max_(rho_max) {
  phi = register_module("phi", DenseLearner(channels, width));
  eta = register_module("eta", DenseLearner(channels, width));
  rho = register_module("rho", DenseLearner(channels, width));
}

torch::Tensor AnchorCouplingImpl::clamped_rho(const torch::Tensor& x) { return rho_max_ * torch::tanh(rho(x) / rho_max_); }

std::pair<torch::Tensor, torch::Tensor> AnchorCouplingImpl::forward(const torch::Tensor& image, const torch::Tensor& anchor) {
  auto x = image + phi(anchor);
  auto y = eta(x) + anchor * torch::exp(clamped_rho(x));
  return {x, y};
}

std::pair<torch::Tensor, torch::Tensor> AnchorCouplingImpl::inverse(const torch::Tensor& image, const torch::Tensor& anchor) {
  auto y = (anchor - eta(image)) * torch::exp(-clamped_rho(image));
  auto x = image - phi(y);
  return {x, y};
}

AnchorFlowImpl::AnchorFlowImpl(int64_t blocks, int64_t width, double rho_max) {
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int64_t i = 0; i < blocks; ++i) blocks_->push_back(AnchorCoupling(12, width, rho_max));
}

std::pair<torch::Tensor, torch::Tensor> AnchorFlowImpl::embed(const torch::Tensor& encoded, const torch::Tensor& anchor) {
  if (encoded.dim() != 4 || encoded.size(1) != 3) throw ShapeMismatch("anchor embed expects [B, 3, H, W]");
  auto a = anchor.dim() == 3 ? anchor.unsqueeze(0) : anchor;
  if (a.size(1) != 3 || a.size(2) != encoded.size(2) || a.size(3) != encoded.size(3)) {
    throw ShapeMismatch("anchor and encoded image differ in size");
  }
  auto x = haar_forward(encoded);
  auto y = haar_forward(a.expand_as(encoded));
  for (size_t i = 0; i < blocks_->size(); ++i) std::tie(x, y) = blocks_->ptr<AnchorCouplingImpl>(i)->forward(x, y);
  return {haar_inverse(x), y};
}

std::pair<torch::Tensor, torch::Tensor> AnchorFlowImpl::invert(const torch::Tensor& stego, const torch::Tensor& residual) {
  auto x = haar_forward(stego);
  if (residual.sizes() != x.sizes()) throw ShapeMismatch("anchor residual does not match the stego image");
  auto y = residual;
  for (size_t i = blocks_->size(); i-- > 0;) std::tie(x, y) = blocks_->ptr<AnchorCouplingImpl>(i)->inverse(x, y);
  return {haar_inverse(x), haar_inverse(y)};
}

torch::Tensor AnchorFlowImpl::decode(const torch::Tensor& received, torch::Generator gen, double noise_std) {
  if (received.dim() != 4 || received.size(1) != 3) throw ShapeMismatch("anchor decode expects [B, 3, H, W]");
  auto x = haar_forward(received);
  auto noise = torch::randn(x.sizes(), gen, x.options().requires_grad(false)) * noise_std;
  return invert(received, noise).second;
}

}  // namespace chartlink
