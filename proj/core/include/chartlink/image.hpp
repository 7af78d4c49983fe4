#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace chartlink {

// Images are float tensors shaped [C, H, W] (or [B, C, H, W]) with values in [0, 1].

/// Reads any OpenCV-supported file as RGB. Throws UnreadableImage.
torch::Tensor load_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG. Any extension other than .png is rejected.
void save_png(const std::filesystem::path& path, const torch::Tensor& image);

/// Bilinear resize, antialiased when shrinking. Accepts [C,H,W] or [B,C,H,W].
torch::Tensor resize(const torch::Tensor& image, int64_t height, int64_t width);

/// Round to the nearest 8-bit level, clamped to [0, 1].
torch::Tensor quantize_u8(const torch::Tensor& image);

/// Encodes and decodes with the real JPEG codec at the given quality.
torch::Tensor jpeg_roundtrip(const torch::Tensor& image, int quality);

/// Encoded PNG bytes of an image, used for byte-identity checks.
std::vector<uint8_t> encode_png(const torch::Tensor& image);

}  // namespace chartlink
