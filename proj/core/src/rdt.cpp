#include "chartlink/rdt.hpp"

#include <string>

#include "chartlink/errors.hpp"

namespace chartlink {

void RdtConfig::validate() const {
  if (rows < 1 || cols < 1 || rep_rows < 1 || rep_cols < 1) {
    throw InvalidParams("RDT grid and repetition counts must be >= 1");
  }
  if (height < tiled_rows() || width < tiled_cols()) {
    throw InvalidParams("RDT raster " + std::to_string(height) + "x" + std::to_string(width) +
                        " is smaller than the " + std::to_string(tiled_rows()) + "x" +
                        std::to_string(tiled_cols()) + " tiled module grid");
  }
}

torch::Tensor rdt_pixel_map(const RdtConfig& cfg) {
  cfg.validate();
  auto map = torch::empty({static_cast<int64_t>(cfg.height) * cfg.width}, torch::kLong);
  auto acc = map.accessor<int64_t, 1>();
  const int64_t tr = cfg.tiled_rows();
  const int64_t tc = cfg.tiled_cols();
  for (int64_t y = 0; y < cfg.height; ++y) {
    const int64_t row = (y * tr / cfg.height) % cfg.rows;
    for (int64_t x = 0; x < cfg.width; ++x) {
      const int64_t col = (x * tc / cfg.width) % cfg.cols;
      acc[y * cfg.width + x] = row * cfg.cols + col;
    }
  }
  return map;
}

namespace {

void check_modules(const torch::Tensor& modules, const RdtConfig& cfg) {
  if (modules.dim() != 3 || modules.size(1) != cfg.rows || modules.size(2) != cfg.cols) {
    throw ShapeMismatch("RDT tile expects [B, " + std::to_string(cfg.rows) + ", " + std::to_string(cfg.cols) + "]");
  }
}

void check_raster(const torch::Tensor& raster, const RdtConfig& cfg) {
  if (raster.dim() != 4 || raster.size(1) != 1 || raster.size(2) != cfg.height || raster.size(3) != cfg.width) {
    throw ShapeMismatch("RDT raster must be [B, 1, " + std::to_string(cfg.height) + ", " +
                        std::to_string(cfg.width) + "]");
  }
}

}  // namespace

torch::Tensor rdt_tile(const torch::Tensor& modules, const RdtConfig& cfg) {
  check_modules(modules, cfg);
  const auto map = rdt_pixel_map(cfg).to(modules.device());
  const auto flat = modules.reshape({modules.size(0), cfg.capacity()});
  return flat.index_select(1, map).reshape({modules.size(0), 1, cfg.height, cfg.width});
}

torch::Tensor rdt_average(const torch::Tensor& raster, const RdtConfig& cfg) {
  check_raster(raster, cfg);
  const auto map = rdt_pixel_map(cfg).to(raster.device());
  const int64_t batch = raster.size(0);
  const auto flat = raster.reshape({batch, static_cast<int64_t>(cfg.height) * cfg.width});
  auto sums = torch::zeros({batch, cfg.capacity()}, raster.options()).index_add(1, map, flat);
  auto counts = torch::zeros({cfg.capacity()}, raster.options())
                    .index_add(0, map, torch::ones({map.size(0)}, raster.options()));
  return (sums / counts).reshape({batch, cfg.rows, cfg.cols});
}

torch::Tensor rdt_threshold(const torch::Tensor& means) { return (means >= 0.5).to(torch::kFloat32); }

torch::Tensor data_image_to_tensor(const DataImage& img) {
  auto t = torch::empty({img.rows, img.cols}, torch::kFloat32);
  auto acc = t.accessor<float, 2>();
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c) acc[r][c] = img.at(r, c);
  return t;
}

DataImage tensor_to_data_image(const torch::Tensor& bits) {
  if (bits.dim() != 2) throw ShapeMismatch("expected a [rows, cols] bit tensor");
  const auto cpu = bits.to(torch::kCPU).to(torch::kFloat32).contiguous();
  DataImage img(static_cast<int>(cpu.size(0)), static_cast<int>(cpu.size(1)));
  auto acc = cpu.accessor<float, 2>();
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c) img.at(r, c) = acc[r][c] >= 0.5f ? 1 : 0;
  return img;
}

torch::Tensor tile(const DataImage& data, const RdtConfig& cfg) {
  if (data.rows != cfg.rows || data.cols != cfg.cols) throw ShapeMismatch("data image does not match RDT grid");
  return rdt_tile(data_image_to_tensor(data).unsqueeze(0), cfg).squeeze(0);
}

DataImage average(const torch::Tensor& raster, const RdtConfig& cfg) {
  const auto batched = raster.dim() == 3 ? raster.unsqueeze(0) : raster;
  return tensor_to_data_image(rdt_threshold(rdt_average(batched, cfg)).squeeze(0));
}

}  // namespace chartlink
