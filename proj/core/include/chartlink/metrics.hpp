#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <span>

namespace chartlink {

/// PSNR cap reported for identical images.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) over images in [0, 1]; kPsnrCap when MSE is zero.
double psnr(const torch::Tensor& a, const torch::Tensor& b);

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), zero-padded to the
/// input size, K1 = 0.01, K2 = 0.03, dynamic range 1. Accepts [C,H,W] or
/// [B,C,H,W]; the result is a differentiable scalar tensor.
torch::Tensor ssim(const torch::Tensor& a, const torch::Tensor& b);
/// Same statistic averaged per batch item: [B].
torch::Tensor ssim_per_image(const torch::Tensor& a, const torch::Tensor& b);

/// Mean absolute error.
torch::Tensor l1(const torch::Tensor& a, const torch::Tensor& b);

/// Mean binary cross-entropy of predictions in (0, 1) against 0/1 targets.
torch::Tensor bce(const torch::Tensor& predictions, const torch::Tensor& targets);

/// Percentage of matching bits.
double bit_accuracy(std::span<const uint8_t> decoded, std::span<const uint8_t> truth);

/// Axis-aligned box in normalized frame coordinates.
struct Box {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
  double area() const noexcept;
};
double iou(const Box& a, const Box& b);

/// Capacity normalized by image area.
double bits_per_pixel(int capacity_bits, int height, int width);

}  // namespace chartlink
