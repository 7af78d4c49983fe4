#include "chartlink/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "chartlink/errors.hpp"

namespace chartlink {

namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) throw ShapeMismatch(std::string(what) + ": operands differ in shape");
}

torch::Tensor gaussian_kernel(int size, double sigma, const torch::TensorOptions& opts) {
  auto coords = torch::arange(size, opts.dtype(torch::kFloat64)) - (size - 1) / 2.0;
  auto g = torch::exp(-(coords * coords) / (2.0 * sigma * sigma));
  return (g / g.sum()).to(opts.dtype());
}

}  // namespace

double psnr(const torch::Tensor& a, const torch::Tensor& b) {
  require_same_shape(a, b, "psnr");
  const double mse = (a.to(torch::kFloat64) - b.to(torch::kFloat64)).pow(2).mean().item<double>();
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

torch::Tensor ssim(const torch::Tensor& a, const torch::Tensor& b) { return ssim_per_image(a, b).mean(); }

torch::Tensor ssim_per_image(const torch::Tensor& a, const torch::Tensor& b) {
  require_same_shape(a, b, "ssim");
  auto x = a.dim() == 3 ? a.unsqueeze(0) : a;
  auto y = b.dim() == 3 ? b.unsqueeze(0) : b;
  if (x.dim() != 4) throw ShapeMismatch("ssim expects [C,H,W] or [B,C,H,W]");
  const int64_t channels = x.size(1);
  constexpr int kWindow = 11;
  // The Gaussian window is separable: one vertical and one horizontal pass.
  const auto g1 = gaussian_kernel(kWindow, 1.5, x.options());
  // Zero-padded separable Gaussian as two banded matrix products; depthwise
  // convolution is far slower on CPU.
  const auto band = [&](int64_t n) {
    auto idx = torch::arange(n, torch::kLong);
    auto offset = idx.unsqueeze(0) - idx.unsqueeze(1) + kWindow / 2;  // j - i + r
    auto inside = (offset >= 0) & (offset < kWindow);
    return torch::where(inside, g1.index({offset.clamp(0, kWindow - 1)}), torch::zeros({}, x.options()));
  };
  const auto rows = band(x.size(2));
  const auto cols_t = band(x.size(3)).t();
  const auto filter = [&](const torch::Tensor& t) { return torch::matmul(torch::matmul(rows, t), cols_t); };
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  auto stats = filter(torch::cat({x, y, x * x, y * y, x * y}, 1)).chunk(5, 1);
  const auto& mu_x = stats[0];
  const auto& mu_y = stats[1];
  auto sigma_x = stats[2] - mu_x * mu_x;
  auto sigma_y = stats[3] - mu_y * mu_y;
  auto sigma_xy = stats[4] - mu_x * mu_y;
  auto map = ((2 * mu_x * mu_y + c1) * (2 * sigma_xy + c2)) /
             ((mu_x * mu_x + mu_y * mu_y + c1) * (sigma_x + sigma_y + c2));
  return map.flatten(1).mean(1);
}

torch::Tensor l1(const torch::Tensor& a, const torch::Tensor& b) {
  require_same_shape(a, b, "l1");
  return (a - b).abs().mean();
}

torch::Tensor bce(const torch::Tensor& predictions, const torch::Tensor& targets) {
  require_same_shape(predictions, targets, "bce");
  constexpr double kEps = 1e-7;
  auto p = predictions.clamp(kEps, 1.0 - kEps);
  return -(targets * torch::log(p) + (1 - targets) * torch::log(1 - p)).mean();
}

double bit_accuracy(std::span<const uint8_t> decoded, std::span<const uint8_t> truth) {
  if (decoded.size() != truth.size()) throw ShapeMismatch("bit_accuracy: length mismatch");
  if (truth.empty()) return 100.0;
  size_t correct = 0;
  for (size_t i = 0; i < truth.size(); ++i) correct += (decoded[i] & 1u) == (truth[i] & 1u);
  return 100.0 * static_cast<double>(correct) / static_cast<double>(truth.size());
}

double Box::area() const noexcept { return std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0); }

double iou(const Box& a, const Box& b) {
  const Box inter{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
  const double i = inter.area();
  const double u = a.area() + b.area() - i;
  return u > 0 ? i / u : 0.0;
}

double bits_per_pixel(int capacity_bits, int height, int width) {
  return static_cast<double>(capacity_bits) / (static_cast<double>(height) * width);
}

}  // namespace chartlink
