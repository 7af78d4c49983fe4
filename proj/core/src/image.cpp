#include "chartlink/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cctype>

#include "chartlink/errors.hpp"

namespace chartlink {

namespace {

torch::Tensor mat_to_tensor(const cv::Mat& bgr) {
  cv::Mat rgb;
  if (bgr.channels() == 1) {
    cv::cvtColor(bgr, rgb, cv::COLOR_GRAY2RGB);
  } else if (bgr.channels() == 4) {
    cv::cvtColor(bgr, rgb, cv::COLOR_BGRA2RGB);
  } else {
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  }
  cv::Mat as_float;
  const double scale = rgb.depth() == CV_16U ? 1.0 / 65535.0 : 1.0 / 255.0;
  rgb.convertTo(as_float, CV_32FC3, scale);
  auto t = torch::from_blob(as_float.data, {as_float.rows, as_float.cols, 3}, torch::kFloat32).clone();
  return t.permute({2, 0, 1}).contiguous();
}

cv::Mat tensor_to_mat(const torch::Tensor& image) {
  auto img = image.dim() == 4 ? image.squeeze(0) : image;
  if (img.dim() != 3 || (img.size(0) != 3 && img.size(0) != 1)) {
    throw ShapeMismatch("expected a [3, H, W] or [1, H, W] image tensor");
  }
  if (img.size(0) == 1) img = img.expand({3, img.size(1), img.size(2)});
  auto u8 = (img.detach().to(torch::kCPU).to(torch::kFloat32).clamp(0, 1) * 255.0f)
                .round()
                .to(torch::kUInt8)
                .permute({1, 2, 0})
                .contiguous();
  cv::Mat rgb(static_cast<int>(u8.size(0)), static_cast<int>(u8.size(1)), CV_8UC3, u8.data_ptr<uint8_t>());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

}  // namespace

torch::Tensor load_image(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw UnreadableImage("cannot read image: " + path.string());
  if (m.depth() != CV_8U && m.depth() != CV_16U) throw UnreadableImage("unsupported pixel depth: " + path.string());
  return mat_to_tensor(m);
}

void save_png(const std::filesystem::path& path, const torch::Tensor& image) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext != ".png") throw InvalidParams("stego output must be lossless PNG, got '" + ext + "'");
  if (!cv::imwrite(path.string(), tensor_to_mat(image))) {
    throw UnreadableImage("cannot write image: " + path.string());
  }
}

torch::Tensor resize(const torch::Tensor& image, int64_t height, int64_t width) {
  const bool batched = image.dim() == 4;
  auto x = batched ? image : image.unsqueeze(0);
  if (x.size(2) == height && x.size(3) == width) return image;
  namespace F = torch::nn::functional;
  const bool shrinking = height < x.size(2) || width < x.size(3);
  auto out = F::interpolate(x, F::InterpolateFuncOptions()
                                   .size(std::vector<int64_t>{height, width})
                                   .mode(torch::kBilinear)
                                   .align_corners(false)
                                   .antialias(shrinking));
  return batched ? out : out.squeeze(0);
}

torch::Tensor quantize_u8(const torch::Tensor& image) { return (image.clamp(0, 1) * 255.0f).round() / 255.0f; }

torch::Tensor jpeg_roundtrip(const torch::Tensor& image, int quality) {
  if (image.dim() == 4) {
    std::vector<torch::Tensor> items;
    for (int64_t i = 0; i < image.size(0); ++i) items.push_back(jpeg_roundtrip(image[i], quality));
    return torch::stack(items);
  }
  std::vector<uchar> buffer;
  cv::imencode(".jpg", tensor_to_mat(image), buffer, {cv::IMWRITE_JPEG_QUALITY, quality});
  cv::Mat decoded = cv::imdecode(buffer, cv::IMREAD_COLOR);
  return mat_to_tensor(decoded).to(image.device());
}

std::vector<uint8_t> encode_png(const torch::Tensor& image) {
  std::vector<uchar> buffer;
  cv::imencode(".png", tensor_to_mat(image), buffer);
  return {buffer.begin(), buffer.end()};
}

}  // namespace chartlink
