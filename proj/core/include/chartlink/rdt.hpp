#pragma once

#include <torch/torch.h>

#include "chartlink/payload.hpp"

namespace chartlink {

/// RDT(rows, cols, rep_rows, rep_cols) rendered onto a height x width raster.
struct RdtConfig {
  int rows = 18;
  int cols = 18;
  int rep_rows = 2;
  int rep_cols = 2;
  int height = 384;
  int width = 384;

  int tiled_rows() const noexcept { return rows * rep_rows; }
  int tiled_cols() const noexcept { return cols * rep_cols; }
  int capacity() const noexcept { return rows * cols; }
  int copies() const noexcept { return rep_rows * rep_cols; }

  /// Throws InvalidParams.
  void validate() const;
  bool operator==(const RdtConfig&) const = default;
};

/// Index of the data module that raster pixel i (row-major) shows, for every pixel.
/// Pixels map to tiled modules by nearest-neighbour scaling, then modulo the grid.
torch::Tensor rdt_pixel_map(const RdtConfig& cfg);

/// [B, rows, cols] module values -> [B, 1, height, width] raster.
torch::Tensor rdt_tile(const torch::Tensor& modules, const RdtConfig& cfg);

/// [B, 1, height, width] raster -> [B, rows, cols] per-module mean over every
/// pixel of every copy. Differentiable.
torch::Tensor rdt_average(const torch::Tensor& raster, const RdtConfig& cfg);

/// Mean >= 0.5 decodes to 1.
torch::Tensor rdt_threshold(const torch::Tensor& means);

torch::Tensor data_image_to_tensor(const DataImage& img);
DataImage tensor_to_data_image(const torch::Tensor& bits);

/// Single-image conveniences: DataImage -> [1, H, W] raster and back.
torch::Tensor tile(const DataImage& data, const RdtConfig& cfg);
DataImage average(const torch::Tensor& raster, const RdtConfig& cfg);

}  // namespace chartlink
