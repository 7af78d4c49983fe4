#include "chartlink/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "chartlink/errors.hpp"
#include "chartlink/iib.hpp"
#include "chartlink/image.hpp"
#include "chartlink/metrics.hpp"
#include "chartlink/rdt.hpp"
#include "chartlink/trainer.hpp"

namespace chartlink {

void to_json(nlohmann::json& j, const ConditionResult& r) {
  j = nlohmann::json{{"name", r.name}, {"rate", r.rate}, {"ba", r.bit_accuracy}, {"images", r.images}};
  j["iou"] = r.iou ? nlohmann::json(*r.iou) : nlohmann::json(nullptr);
  if (r.tamper_ratio) j["tamper_ratio"] = *r.tamper_ratio;
}

void to_json(nlohmann::json& j, const MetricReport& r) {
  j = nlohmann::json{{"psnr", r.psnr},
                     {"ssim", r.ssim},
                     {"lpips", r.lpips ? nlohmann::json(*r.lpips) : nlohmann::json("n/a")},
                     {"bpp", r.bpp},
                     {"capacity_bits", r.capacity_bits},
                     {"images", r.images},
                     {"mask_grid", r.mask_grid},
                     {"crop_grid", r.crop_grid},
                     {"mixed_grid", r.mixed_grid},
                     {"distortion_grid", r.distortion_grid},
                     {"full_scale_reference", full_scale_reference()}};
}

nlohmann::json full_scale_reference() {
  return {{"psnr", 40.636}, {"ssim", 0.9692}, {"lpips", 0.0219}, {"ba_mask_15", 99.81}, {"ba_crop_80", 95.57},
          {"ba_jpeg_60", 99.79}, {"note", "384x384 model trained for 30K iterations; not reproduced here"}};
}

namespace {

struct Sample {
  torch::Tensor host;     // [3, H, W]
  torch::Tensor stego;    // [3, H, W], 8-bit quantized
  torch::Tensor modules;  // [rows, cols]
};

double accuracy(const torch::Tensor& decoded, const torch::Tensor& truth) {
  return (decoded == truth).to(torch::kFloat64).mean().item<double>() * 100.0;
}

ConditionResult aligned_condition(StegoNetworkImpl& net, const std::vector<Sample>& samples,
                                  std::span<const torch::Tensor> textures, const std::string& name, double rate,
                                  const std::function<TamperSpec(int, Rng&)>& make_spec, const EvalConfig& cfg) {
  ConditionResult r;
  r.name = name;
  r.rate = rate;
  Rng rng(cfg.seed ^ std::hash<std::string>{}(name));
  auto gen = make_generator(cfg.seed);
  double sum = 0.0;
  torch::NoGradGuard no_grad;
  for (size_t i = 0; i < samples.size(); ++i) {
    auto spec = make_spec(static_cast<int>(i), rng);
    auto received = quantize_u8(apply_tamper(spec, samples[i].stego, textures, JpegMode::Real));
    auto means = net.decode_data(received.unsqueeze(0), gen, cfg.pipeline.decode_noise_std).squeeze(0);
    sum += accuracy(rdt_threshold(means), samples[i].modules);
  }
  r.images = static_cast<int>(samples.size());
  r.bit_accuracy = samples.empty() ? 0.0 : sum / samples.size();
  return r;
}

ConditionResult cropped_condition(StegoNetworkImpl& net, const std::vector<Sample>& samples,
                                  std::span<const torch::Tensor> textures, const std::string& name, double crop_rate,
                                  double mask_rate, const EvalConfig& cfg) {
  ConditionResult r;
  r.name = name;
  r.rate = crop_rate;
  Rng rng(cfg.seed ^ std::hash<std::string>{}(name));
  const auto& ncfg = net.config();
  double ba = 0.0, overlap = 0.0;
  for (const auto& s : samples) {
    TamperSpec spec;
    spec.height = ncfg.height;
    spec.width = ncfg.width;
    spec.crop = crop_with_area(ncfg.height, ncfg.width, 1.0 - crop_rate, rng);
    auto x = apply_tamper(spec, s.stego, textures, JpegMode::Real);
    if (mask_rate > 0) {
      // Local tampering of the already-cropped remainder.
      x = apply_masks(x, masks_with_rate(static_cast<int>(x.size(1)), static_cast<int>(x.size(2)),
                                         static_cast<int>(textures.size()), mask_rate, rng),
                      textures);
    }
    auto received = quantize_u8(x);
    try {
      auto bits = decode_bits(net, received, cfg.pipeline);
      ba += accuracy(data_image_to_tensor(bits.bits), s.modules);
      overlap += iou(spec.crop->box(), bits.crop.params.box());
    } catch (const DegenerateInput&) {
      ba += 50.0;
    }
  }
  r.images = static_cast<int>(samples.size());
  if (!samples.empty()) {
    r.bit_accuracy = ba / samples.size();
    r.iou = overlap / samples.size();
  }
  return r;
}

std::string fmt(double v, int precision = 2) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

}  // namespace

MetricReport run_grid(StegoNetworkImpl& net, const ChartCorpus& corpus, const EvalConfig& cfg) {
  if (corpus.empty()) throw EmptyCorpus("evaluation corpus is empty");
  const auto& ncfg = net.config();
  net.eval();
  torch::NoGradGuard no_grad;

  const size_t n = cfg.max_images > 0 ? std::min<size_t>(cfg.max_images, corpus.size()) : corpus.size();
  auto gen = make_generator(cfg.seed);
  std::vector<Sample> samples;
  std::vector<torch::Tensor> textures;
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    Sample s;
    s.host = resize(corpus.images[i], ncfg.height, ncfg.width);
    s.modules = random_modules(1, ncfg.rdt, gen);
    s.stego = quantize_u8(net.encode(s.host.unsqueeze(0), s.modules).stego.squeeze(0));
    s.modules = s.modules.squeeze(0);
    psnr_sum += psnr(s.host, s.stego);
    ssim_sum += ssim(s.host, s.stego).item<double>();
    textures.push_back(s.host);
    samples.push_back(std::move(s));
  }

  MetricReport report;
  report.images = static_cast<int>(n);
  report.psnr = psnr_sum / n;
  report.ssim = ssim_sum / n;
  report.capacity_bits = ncfg.rdt.capacity();
  report.bpp = bits_per_pixel(report.capacity_bits, ncfg.height, ncfg.width);
  const int tex = static_cast<int>(textures.size());

  for (double rate : cfg.mask_rates) {
    report.mask_grid.push_back(aligned_condition(
        net, samples, textures, "mask_" + fmt(rate * 100, 0), rate,
        [&](int i, Rng& rng) {
          TamperSpec spec;
          spec.height = ncfg.height;
          spec.width = ncfg.width;
          // Never overlay an image with a crop of itself.
          spec.masks = masks_with_rate(ncfg.height, ncfg.width, tex, rate, rng);
          for (auto& m : spec.masks) {
            if (tex > 1 && m.source == i) m.source = (i + 1) % tex;
          }
          return spec;
        },
        cfg));
  }
  for (double rate : cfg.crop_rates) {
    report.crop_grid.push_back(cropped_condition(net, samples, textures, "crop_" + fmt(rate * 100, 0), rate, 0.0, cfg));
  }
  for (const auto& [crop_rate, mask_rate] : cfg.mixed) {
    auto r = cropped_condition(net, samples, textures, "crop_" + fmt(crop_rate * 100, 0) + "+mask_" + fmt(mask_rate * 100, 0),
                               crop_rate, mask_rate, cfg);
    r.tamper_ratio = cumulative_tamper_ratio(crop_rate, mask_rate);
    report.mixed_grid.push_back(r);
  }
  if (cfg.distortions) {
    const auto& d = cfg.distortion;
    const auto add = [&](const std::string& name, double rate, DistortionSpec spec) {
      report.distortion_grid.push_back(aligned_condition(
          net, samples, textures, name, rate,
          [&](int, Rng& rng) {
            TamperSpec t;
            t.height = ncfg.height;
            t.width = ncfg.width;
            auto local = spec;
            local.noise_seed = rng();
            t.distortion = local;
            return t;
          },
          cfg));
    };
    DistortionSpec s;
    s.noise_std = d.noise_std;
    add("noise_" + fmt(d.noise_std), d.noise_std, s);
    s = {};
    s.jpeg_quality = d.jpeg_quality;
    add("jpeg_" + std::to_string(d.jpeg_quality), d.jpeg_quality, s);
    s = {};
    s.brightness = d.brightness_max;
    add("brightness_" + fmt(d.brightness_max), d.brightness_max, s);
    s = {};
    s.hue = {d.hue_max, 0.0, -d.hue_max};
    add("hue_" + fmt(d.hue_max), d.hue_max, s);
    s = {};
    s.contrast = d.contrast_min;
    add("contrast_" + fmt(d.contrast_min), d.contrast_min, s);
    s = {};
    s.contrast = d.contrast_max;
    add("contrast_" + fmt(d.contrast_max), d.contrast_max, s);
  }
  return report;
}

std::string format_report(const MetricReport& r) {
  std::ostringstream os;
  os << "images " << r.images << "  capacity " << r.capacity_bits << " bits  bpp " << fmt(r.bpp, 5) << "\n";
  os << "PSNR " << fmt(r.psnr, 3) << " dB  SSIM " << fmt(r.ssim, 4) << "  LPIPS "
     << (r.lpips ? fmt(*r.lpips, 4) : std::string("n/a")) << "\n";
  const auto table = [&](const std::string& title, const std::vector<ConditionResult>& rows) {
    if (rows.empty()) return;
    os << "\n" << title << "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "  %-24s %10s %8s %8s\n", "condition", "BA (%)", "IoU", "ratio");
    os << line;
    for (const auto& row : rows) {
      std::snprintf(line, sizeof(line), "  %-24s %10.2f %8s %8s\n", row.name.c_str(), row.bit_accuracy,
                    row.iou ? fmt(*row.iou, 3).c_str() : "-", row.tamper_ratio ? fmt(*row.tamper_ratio, 2).c_str() : "-");
      os << line;
    }
  };
  table("local tampering", r.mask_grid);
  table("cropping", r.crop_grid);
  table("mixed tampering", r.mixed_grid);
  table("distortions", r.distortion_grid);
  return os.str();
}

}  // namespace chartlink
