#include "chartlink/pipeline.hpp"

#include <opencv2/imgproc.hpp>

#include <cmath>

#include "chartlink/errors.hpp"
#include "chartlink/iib.hpp"
#include "chartlink/image.hpp"
#include "chartlink/rdt.hpp"

namespace chartlink {

PayloadCodec codec_for(const NetworkConfig& cfg) { return PayloadCodec(cfg.rdt.rows, cfg.rdt.cols, cfg.bch); }

EmbedResult embed(StegoNetworkImpl& net, const torch::Tensor& host, const std::string& link) {
  if (host.dim() != 3 || host.size(0) != 3) throw ShapeMismatch("embed expects a [3, H, W] host");
  const auto& cfg = net.config();
  const auto data = codec_for(cfg).encode(link);
  torch::NoGradGuard no_grad;
  auto host_net = resize(host, cfg.height, cfg.width);
  auto modules = data_image_to_tensor(data).unsqueeze(0);
  auto enc = net.encode(host_net.unsqueeze(0), modules);
  EmbedResult out;
  out.net_stego = enc.stego_float.squeeze(0);
  auto residual = out.net_stego - host_net;
  out.watermark = resize(residual, host.size(1), host.size(2));
  out.stego = host + out.watermark;
  return out;
}

bool accept_crop(const CropEstimate& estimate, const PipelineConfig& cfg) {
  return is_cropped(estimate.params, cfg.crop_threshold) && estimate.loss < cfg.crop_gain * estimate.full_frame_loss;
}

DecodedBits decode_bits(StegoNetworkImpl& net, const torch::Tensor& image, const PipelineConfig& pcfg) {
  if (image.dim() != 3 || image.size(0) != 3) throw ShapeMismatch("decode expects a [3, H, W] image");
  const auto& cfg = net.config();
  torch::NoGradGuard no_grad;
  auto received = resize(image, cfg.height, cfg.width);
  auto gen = make_generator(pcfg.seed);

  DecodedBits out;
  auto anchor_est = net.decode_anchor(received.unsqueeze(0), gen, pcfg.anchor_noise_std).squeeze(0);
  out.crop = estimate_crop(anchor_est, net.anchor(), pcfg.match);
  out.cropped = accept_crop(out.crop, pcfg);

  auto aligned = received;
  if (out.cropped) {
    const auto& p = out.crop.params;
    const int64_t h = std::max<int64_t>(4, std::lround(p.sy * cfg.height));
    const int64_t w = std::max<int64_t>(4, std::lround(p.sx * cfg.width));
    aligned = rectify(resize(image, h, w), p, cfg.height, cfg.width);
  }
  out.means = net.decode_data(aligned.unsqueeze(0), gen, pcfg.decode_noise_std).squeeze(0);
  out.bits = tensor_to_data_image(rdt_threshold(out.means));
  return out;
}

DecodeResult decode(StegoNetworkImpl& net, const torch::Tensor& image, const PipelineConfig& cfg) {
  auto bits = decode_bits(net, image, cfg);
  PayloadCodec::Result payload;
  try {
    payload = codec_for(net.config()).decode(bits.bits);
  } catch (const EccFailure& e) {
    throw EccFailure(e.what(), image_to_bits(bits.bits));
  }
  DecodeResult out;
  out.link = payload.link;
  out.corrected_bits = payload.corrected_bits;
  out.crop = bits.crop.params;
  out.confidence = bits.crop.loss;
  out.cropped = bits.cropped;
  return out;
}

DetectResult detect(const torch::Tensor& image, const torch::Tensor& reference, const CropParams& alignment,
                    double threshold, int min_area) {
  if (image.dim() != 3 || reference.dim() != 3 || image.size(0) != 3 || reference.size(0) != 3) {
    throw ShapeMismatch("detect expects two [3, H, W] images");
  }
  const int64_t h = reference.size(1), w = reference.size(2);
  DetectResult out;
  out.alignment = alignment;
  torch::Tensor aligned;
  torch::Tensor valid = torch::ones({h, w});
  if (is_cropped(alignment, 1e-6)) {
    const int64_t ch = std::max<int64_t>(4, std::lround(alignment.sy * h));
    const int64_t cw = std::max<int64_t>(4, std::lround(alignment.sx * w));
    aligned = rectify(resize(image, ch, cw), alignment, h, w);
    valid = rectify(torch::ones({1, ch, cw}), alignment, h, w, 0.0).squeeze(0);
    valid = (valid > 0.999).to(torch::kFloat32);
  } else {
    aligned = (image.size(1) == h && image.size(2) == w) ? image : resize(image, h, w);
  }
  out.heatmap = ((aligned - reference).abs().amax(0) * valid).contiguous();

  cv::Mat heat(static_cast<int>(h), static_cast<int>(w), CV_32F, out.heatmap.data_ptr<float>());
  cv::Mat mask;
  cv::threshold(heat, mask, threshold, 255.0, cv::THRESH_BINARY);
  mask.convertTo(mask, CV_8U);
  cv::morphologyEx(mask, mask, cv::MORPH_CLOSE, cv::getStructuringElement(cv::MORPH_RECT, {5, 5}));
  cv::Mat labels, stats, centroids;
  const int n = cv::connectedComponentsWithStats(mask, labels, stats, centroids, 8);

  auto overlay = (aligned.clamp(0, 1) * 255).round().to(torch::kUInt8).permute({1, 2, 0}).contiguous();
  cv::Mat canvas(static_cast<int>(h), static_cast<int>(w), CV_8UC3, overlay.data_ptr<uint8_t>());
  for (int i = 1; i < n; ++i) {
    if (stats.at<int>(i, cv::CC_STAT_AREA) < min_area) continue;
    const int x = stats.at<int>(i, cv::CC_STAT_LEFT), y = stats.at<int>(i, cv::CC_STAT_TOP);
    const int bw = stats.at<int>(i, cv::CC_STAT_WIDTH), bh = stats.at<int>(i, cv::CC_STAT_HEIGHT);
    out.regions.push_back({static_cast<double>(x) / w, static_cast<double>(y) / h, static_cast<double>(x + bw) / w,
                           static_cast<double>(y + bh) / h});
    cv::rectangle(canvas, {x, y, bw, bh}, cv::Scalar(255, 0, 0), std::max(1, static_cast<int>(std::min(h, w) / 200)));
  }
  out.overlay = overlay.permute({2, 0, 1}).to(torch::kFloat32).div(255.0);
  return out;
}

}  // namespace chartlink
