#include "chartlink/tamper.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "chartlink/errors.hpp"
#include "chartlink/iib.hpp"
#include "chartlink/image.hpp"

namespace chartlink {

namespace F = torch::nn::functional;

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

torch::Tensor as_batch(const torch::Tensor& image) {
  if (image.dim() == 3) return image.unsqueeze(0);
  if (image.dim() == 4) return image;
  throw ShapeMismatch("expected a [C,H,W] or [B,C,H,W] image");
}

torch::Tensor like_input(const torch::Tensor& out, const torch::Tensor& input) {
  return input.dim() == 3 ? out.squeeze(0) : out;
}

CropParams random_source_rect(Rng& rng) {
  CropParams p;
  p.sx = uniform(rng, 0.3, 1.0);
  p.sy = uniform(rng, 0.3, 1.0);
  p.cx = uniform(rng, p.sx / 2, 1.0 - p.sx / 2);
  p.cy = uniform(rng, p.sy / 2, 1.0 - p.sy / 2);
  return p;
}

// Standard JPEG tables (quality 50).
constexpr float kLumaTable[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,  14, 13, 16, 24, 40,  57,
    69, 56, 14, 17, 22,  29,  51,  87,  80, 62, 18, 22, 37,  56,  68,  109, 103, 77, 24, 35, 55, 64,
    81, 104, 113, 92, 49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
constexpr float kChromaTable[64] = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99, 24, 26, 56, 99, 99, 99,
    99, 99, 47, 66, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

torch::Tensor quant_table(const float* base, int quality) {
  const int q = std::clamp(quality, 1, 100);
  const double scale = q < 50 ? 5000.0 / q : 200.0 - 2.0 * q;
  auto t = torch::from_blob(const_cast<float*>(base), {8, 8}, torch::kFloat32).clone();
  return torch::clamp(torch::floor((t * scale + 50.0) / 100.0), 1.0, 255.0);
}

torch::Tensor dct_matrix() {
  auto d = torch::empty({8, 8}, torch::kFloat32);
  auto a = d.accessor<float, 2>();
  for (int k = 0; k < 8; ++k) {
    const double c = k == 0 ? std::sqrt(1.0 / 8) : std::sqrt(2.0 / 8);
    for (int n = 0; n < 8; ++n) a[k][n] = static_cast<float>(c * std::cos(std::numbers::pi * (2 * n + 1) * k / 16.0));
  }
  return d;
}

}  // namespace

bool DistortionSpec::identity() const {
  return noise_std == 0.0 && jpeg_quality == 0 && brightness == 0.0 && hue == std::array<double, 3>{0, 0, 0} &&
         contrast == 1.0;
}

bool TamperSpec::noop() const {
  return masks.empty() && !crop && !shift && (!distortion || distortion->identity());
}

double TamperSpec::masked_fraction() const {
  if (masks.empty() || height <= 0 || width <= 0) return 0.0;
  std::vector<uint8_t> covered(static_cast<size_t>(height) * width, 0);
  for (const auto& m : masks) {
    for (int y = std::max(0, m.y0); y < std::min(height, m.y0 + m.height); ++y) {
      for (int x = std::max(0, m.x0); x < std::min(width, m.x0 + m.width); ++x) covered[static_cast<size_t>(y) * width + x] = 1;
    }
  }
  return static_cast<double>(std::count(covered.begin(), covered.end(), 1)) / covered.size();
}

void to_json(nlohmann::json& j, const TamperSpec& s) {
  j = nlohmann::json{{"height", s.height}, {"width", s.width}, {"seed", s.seed}};
  auto masks = nlohmann::json::array();
  for (const auto& m : s.masks) {
    masks.push_back({{"x0", m.x0}, {"y0", m.y0}, {"width", m.width}, {"height", m.height}, {"source", m.source},
                     {"source_rect", m.source_rect}});
  }
  j["masks"] = masks;
  j["crop"] = s.crop ? nlohmann::json(*s.crop) : nlohmann::json(nullptr);
  j["shift"] = s.shift ? nlohmann::json(*s.shift) : nlohmann::json(nullptr);
  if (s.distortion) {
    const auto& d = *s.distortion;
    j["distortion"] = {{"noise_std", d.noise_std}, {"noise_seed", d.noise_seed}, {"jpeg_quality", d.jpeg_quality},
                       {"brightness", d.brightness}, {"hue", d.hue},           {"contrast", d.contrast}};
  } else {
    j["distortion"] = nullptr;
  }
}

void from_json(const nlohmann::json& j, TamperSpec& s) {
  s = TamperSpec{};
  j.at("height").get_to(s.height);
  j.at("width").get_to(s.width);
  s.seed = j.value("seed", uint64_t{0});
  for (const auto& m : j.value("masks", nlohmann::json::array())) {
    MaskPatch p;
    m.at("x0").get_to(p.x0);
    m.at("y0").get_to(p.y0);
    m.at("width").get_to(p.width);
    m.at("height").get_to(p.height);
    m.at("source").get_to(p.source);
    m.at("source_rect").get_to(p.source_rect);
    s.masks.push_back(p);
  }
  if (j.contains("crop") && !j["crop"].is_null()) s.crop = j["crop"].get<CropParams>();
  if (j.contains("shift") && !j["shift"].is_null()) s.shift = j["shift"].get<std::array<double, 2>>();
  if (j.contains("distortion") && !j["distortion"].is_null()) {
    const auto& dj = j["distortion"];
    DistortionSpec d;
    dj.at("noise_std").get_to(d.noise_std);
    dj.at("noise_seed").get_to(d.noise_seed);
    dj.at("jpeg_quality").get_to(d.jpeg_quality);
    dj.at("brightness").get_to(d.brightness);
    dj.at("hue").get_to(d.hue);
    dj.at("contrast").get_to(d.contrast);
    s.distortion = d;
  }
}

std::vector<MaskPatch> sample_masks(int height, int width, int textures, const TamperPolicy& policy, Rng& rng) {
  if (textures < 1) throw EmptyCorpus("masking needs at least one texture image");
  if (policy.min_masks < 1 || policy.max_masks < policy.min_masks) throw InvalidParams("bad mask count range");
  const int k = uniform_int(rng, policy.min_masks, policy.max_masks);
  TamperSpec probe;
  probe.height = height;
  probe.width = width;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    probe.masks.clear();
    for (int i = 0; i < k; ++i) {
      MaskPatch m;
      m.width = std::max(1, static_cast<int>(std::lround(uniform(rng, 0.1, 0.5) * width)));
      m.height = std::max(1, static_cast<int>(std::lround(uniform(rng, 0.1, 0.5) * height)));
      m.x0 = uniform_int(rng, 0, width - m.width);
      m.y0 = uniform_int(rng, 0, height - m.height);
      m.source = uniform_int(rng, 0, textures - 1);
      m.source_rect = random_source_rect(rng);
      probe.masks.push_back(m);
    }
    if (1.0 - probe.masked_fraction() >= policy.min_unmasked) return probe.masks;
  }
  throw InvalidParams("could not satisfy the unmasked-area bound");
}

std::vector<MaskPatch> masks_with_rate(int height, int width, int textures, double rate, Rng& rng) {
  if (rate < 0.0 || rate > 1.0) throw InvalidParams("mask rate must lie in [0, 1]");
  if (rate == 0.0) return {};
  if (textures < 1) throw EmptyCorpus("masking needs at least one texture image");
  const double area = rate * height * width;
  const double aspect = uniform(rng, 0.5, 2.0);
  double w = std::clamp(std::sqrt(area * aspect), 1.0, static_cast<double>(width));
  double h = std::clamp(area / w, 1.0, static_cast<double>(height));
  w = std::clamp(area / h, 1.0, static_cast<double>(width));
  MaskPatch m;
  m.width = static_cast<int>(std::lround(w));
  m.height = static_cast<int>(std::lround(h));
  m.x0 = uniform_int(rng, 0, width - m.width);
  m.y0 = uniform_int(rng, 0, height - m.height);
  m.source = uniform_int(rng, 0, textures - 1);
  m.source_rect = random_source_rect(rng);
  return {m};
}

namespace {
CropParams crop_from_pixels(int x0, int y0, int w, int h, int height, int width) {
  CropParams p;
  p.sx = static_cast<double>(w) / width;
  p.sy = static_cast<double>(h) / height;
  p.cx = (x0 + w / 2.0) / width;
  p.cy = (y0 + h / 2.0) / height;
  return p;
}
}  // namespace

CropParams sample_crop(int height, int width, double min_area, Rng& rng) {
  if (height < 2 || width < 2) throw InvalidParams("frame too small to crop");
  if (!(min_area > 0.0 && min_area < 1.0)) throw InvalidParams("minimum crop area must lie in (0, 1)");
  const double target = min_area * height * width;
  // Both sides stay below the frame size, so the full frame is never emitted.
  const int w_min = std::max(1, static_cast<int>(std::ceil(target / (height - 1))));
  if (w_min > width - 1) throw InvalidParams("minimum crop area cannot be met by a proper crop");
  const int w = uniform_int(rng, w_min, width - 1);
  const int h_min = std::max(1, static_cast<int>(std::ceil(target / w)));
  const int h = uniform_int(rng, h_min, height - 1);
  const int x0 = uniform_int(rng, 0, width - w);
  const int y0 = uniform_int(rng, 0, height - h);
  return crop_from_pixels(x0, y0, w, h, height, width);
}

CropParams crop_with_area(int height, int width, double area, Rng& rng) {
  if (!(area > 0.0 && area <= 1.0)) throw InvalidParams("crop area must lie in (0, 1]");
  const double sx = std::pow(area, uniform(rng, 0.0, 1.0));
  const int w = std::clamp(static_cast<int>(std::lround(sx * width)), 1, width);
  const int h = std::clamp(static_cast<int>(std::lround(area * height * width / w)), 1, height);
  const int x0 = uniform_int(rng, 0, width - w);
  const int y0 = uniform_int(rng, 0, height - h);
  return crop_from_pixels(x0, y0, w, h, height, width);
}

std::array<double, 2> sample_transition(int height, int width, double tau, Rng& rng) {
  if (tau < 0.0) throw InvalidParams("transition factor must be non-negative");
  if (tau == 0.0) return {0.0, 0.0};
  return {uniform(rng, -tau * width, tau * width), uniform(rng, -tau * height, tau * height)};
}

DistortionSpec sample_distortion(const DistortionConfig& cfg, Rng& rng) {
  DistortionSpec d;
  if (cfg.noise) {
    d.noise_std = cfg.noise_std;
    d.noise_seed = rng();
  }
  if (cfg.jpeg) d.jpeg_quality = cfg.jpeg_quality;
  if (cfg.brightness) d.brightness = uniform(rng, -cfg.brightness_max, cfg.brightness_max);
  if (cfg.hue) {
    for (auto& h : d.hue) h = uniform(rng, -cfg.hue_max, cfg.hue_max);
  }
  if (cfg.contrast) d.contrast = uniform(rng, cfg.contrast_min, cfg.contrast_max);
  return d;
}

std::array<int, 4> crop_pixels(const CropParams& p, int height, int width) {
  const int x0 = static_cast<int>(std::lround((p.cx - p.sx / 2) * width));
  const int y0 = static_cast<int>(std::lround((p.cy - p.sy / 2) * height));
  const int w = static_cast<int>(std::lround(p.sx * width));
  const int h = static_cast<int>(std::lround(p.sy * height));
  return {std::clamp(x0, 0, width - 1), std::clamp(y0, 0, height - 1), std::clamp(w, 1, width - std::max(0, x0)),
          std::clamp(h, 1, height - std::max(0, y0))};
}

torch::Tensor apply_masks(const torch::Tensor& image, std::span<const MaskPatch> masks,
                          std::span<const torch::Tensor> textures) {
  if (masks.empty()) return image;
  auto batch = as_batch(image);
  const int64_t height = batch.size(2), width = batch.size(3);
  auto out = batch.clone();
  for (const auto& m : masks) {
    if (m.source < 0 || m.source >= static_cast<int>(textures.size())) {
      throw EmptyCorpus("mask references texture " + std::to_string(m.source) + " outside the corpus");
    }
    const int x0 = std::clamp(m.x0, 0, static_cast<int>(width));
    const int y0 = std::clamp(m.y0, 0, static_cast<int>(height));
    const int x1 = std::clamp(m.x0 + m.width, 0, static_cast<int>(width));
    const int y1 = std::clamp(m.y0 + m.height, 0, static_cast<int>(height));
    if (x1 <= x0 || y1 <= y0) continue;
    auto tex = as_batch(textures[m.source]).to(out.dtype());
    const auto& r = m.source_rect;
    auto params = torch::tensor({{r.cx, r.cy, r.sx, r.sy}}, torch::kFloat32);
    auto patch = crop_resize(tex, params, y1 - y0, x1 - x0).detach();
    out.index_put_({torch::indexing::Slice(), torch::indexing::Slice(), torch::indexing::Slice(y0, y1),
                    torch::indexing::Slice(x0, x1)},
                   patch.expand({out.size(0), -1, -1, -1}));
  }
  return like_input(out, image);
}

torch::Tensor apply_crop(const torch::Tensor& image, const CropParams& crop) {
  auto batch = as_batch(image);
  const auto [x0, y0, w, h] = crop_pixels(crop, static_cast<int>(batch.size(2)), static_cast<int>(batch.size(3)));
  auto out = batch.narrow(2, y0, h).narrow(3, x0, w);
  return like_input(out, image);
}

torch::Tensor apply_shift(const torch::Tensor& image, double dx, double dy) {
  if (dx == 0.0 && dy == 0.0) return image;
  auto batch = as_batch(image);
  const int64_t b = batch.size(0), height = batch.size(2), width = batch.size(3);
  auto theta = torch::tensor({{1.0, 0.0, -2.0 * dx / width}, {0.0, 1.0, -2.0 * dy / height}}, batch.options())
                   .unsqueeze(0)
                   .expand({b, 2, 3});
  auto grid = F::affine_grid(theta, {b, batch.size(1), height, width}, false);
  auto out = F::grid_sample(batch, grid,
                            F::GridSampleFuncOptions().mode(torch::kBilinear).padding_mode(torch::kBorder).align_corners(false));
  return like_input(out, image);
}

torch::Tensor jpeg_approx(const torch::Tensor& image, int quality) {
  auto batch = as_batch(image);
  const int64_t b = batch.size(0), height = batch.size(2), width = batch.size(3);
  if (batch.size(1) != 3) throw ShapeMismatch("JPEG approximation expects RGB images");
  auto x = batch * 255.0;
  auto r = x.select(1, 0), g = x.select(1, 1), bl = x.select(1, 2);
  auto y = 0.299 * r + 0.587 * g + 0.114 * bl;
  auto cb = -0.168736 * r - 0.331264 * g + 0.5 * bl;
  auto cr = 0.5 * r - 0.418688 * g - 0.081312 * bl;
  auto ycc = torch::stack({y - 128.0, cb, cr}, 1);

  const int64_t ph = (8 - height % 8) % 8, pw = (8 - width % 8) % 8;
  if (ph || pw) ycc = F::pad(ycc, F::PadFuncOptions({0, pw, 0, ph}).mode(torch::kReplicate));
  const int64_t hh = ycc.size(2), ww = ycc.size(3);
  // [B, 3, hh/8, 8, ww/8, 8] -> blocks [B, 3, hh/8, ww/8, 8, 8]
  auto blocks = ycc.reshape({b, 3, hh / 8, 8, ww / 8, 8}).permute({0, 1, 2, 4, 3, 5});
  const auto d = dct_matrix().to(batch.options());
  auto coeffs = torch::matmul(torch::matmul(d, blocks), d.t());

  auto luma_q = quant_table(kLumaTable, quality).to(batch.options());
  auto chroma_q = quant_table(kChromaTable, quality).to(batch.options());
  auto q = torch::stack({luma_q, chroma_q, chroma_q}).reshape({1, 3, 1, 1, 8, 8});
  auto scaled = coeffs / q;
  auto rounded = torch::round(scaled);
  auto soft = rounded.detach() + (scaled - rounded.detach()).pow(3);
  auto restored = torch::matmul(torch::matmul(d.t(), soft * q), d);

  auto back = restored.permute({0, 1, 2, 4, 3, 5}).reshape({b, 3, hh, ww}).narrow(2, 0, height).narrow(3, 0, width);
  auto yy = back.select(1, 0) + 128.0, cbb = back.select(1, 1), crr = back.select(1, 2);
  auto rgb = torch::stack({yy + 1.402 * crr, yy - 0.344136 * cbb - 0.714136 * crr, yy + 1.772 * cbb}, 1) / 255.0;
  return like_input(torch::clamp(rgb, 0.0, 1.0), image);
}

torch::Tensor apply_distortion(const torch::Tensor& image, const DistortionSpec& d, JpegMode jpeg) {
  if (d.identity()) return image;
  auto x = as_batch(image);
  if (d.contrast != 1.0) x = (x - 0.5) * d.contrast + 0.5;
  if (d.brightness != 0.0) x = x + d.brightness;
  if (d.hue != std::array<double, 3>{0, 0, 0}) {
    auto offsets = torch::tensor({d.hue[0], d.hue[1], d.hue[2]}, x.options()).reshape({1, 3, 1, 1});
    x = x + offsets;
  }
  x = torch::clamp(x, 0.0, 1.0);
  if (d.noise_std > 0.0) {
    auto gen = make_generator(d.noise_seed);
    auto noise = torch::randn(x.sizes(), gen, torch::TensorOptions().dtype(torch::kFloat32)).to(x.options());
    x = torch::clamp(x + d.noise_std * noise, 0.0, 1.0);
  }
  if (d.jpeg_quality > 0) {
    x = jpeg == JpegMode::Differentiable ? jpeg_approx(x, d.jpeg_quality) : jpeg_roundtrip(x.detach(), d.jpeg_quality);
  }
  return like_input(x, image);
}

torch::Tensor apply_tamper(const TamperSpec& spec, const torch::Tensor& image, std::span<const torch::Tensor> textures,
                           JpegMode jpeg) {
  if (image.dim() != 3) throw ShapeMismatch("apply_tamper expects a [C, H, W] image");
  if (spec.height != image.size(1) || spec.width != image.size(2)) {
    throw ShapeMismatch("tamper spec was sampled for a " + std::to_string(spec.height) + "x" +
                        std::to_string(spec.width) + " frame");
  }
  auto x = apply_masks(image, spec.masks, textures);
  if (spec.crop) x = apply_crop(x, *spec.crop);
  if (spec.shift) x = apply_shift(x, (*spec.shift)[0], (*spec.shift)[1]);
  if (spec.distortion) x = apply_distortion(x, *spec.distortion, jpeg);
  return x;
}

TamperedImage random_mask(const torch::Tensor& image, std::span<const torch::Tensor> textures,
                          const TamperPolicy& policy, Rng& rng) {
  TamperedImage out;
  out.spec.height = static_cast<int>(image.size(-2));
  out.spec.width = static_cast<int>(image.size(-1));
  out.spec.seed = rng();
  Rng local(out.spec.seed);
  out.spec.masks = sample_masks(out.spec.height, out.spec.width, static_cast<int>(textures.size()), policy, local);
  out.image = apply_masks(image, out.spec.masks, textures);
  return out;
}

TamperedImage random_crop(const torch::Tensor& image, const TamperPolicy& policy, Rng& rng) {
  TamperedImage out;
  out.spec.height = static_cast<int>(image.size(-2));
  out.spec.width = static_cast<int>(image.size(-1));
  out.spec.seed = rng();
  Rng local(out.spec.seed);
  out.spec.crop = sample_crop(out.spec.height, out.spec.width, policy.min_crop_area, local);
  out.image = apply_crop(image, *out.spec.crop);
  return out;
}

TamperedImage random_transition(const torch::Tensor& image, double tau, Rng& rng) {
  TamperedImage out;
  out.spec.height = static_cast<int>(image.size(-2));
  out.spec.width = static_cast<int>(image.size(-1));
  out.spec.seed = rng();
  Rng local(out.spec.seed);
  out.spec.shift = sample_transition(out.spec.height, out.spec.width, tau, local);
  out.image = apply_shift(image, (*out.spec.shift)[0], (*out.spec.shift)[1]);
  return out;
}

TamperedImage distort(const torch::Tensor& image, const DistortionConfig& cfg, Rng& rng, JpegMode jpeg) {
  TamperedImage out;
  out.spec.height = static_cast<int>(image.size(-2));
  out.spec.width = static_cast<int>(image.size(-1));
  out.spec.seed = rng();
  Rng local(out.spec.seed);
  out.spec.distortion = sample_distortion(cfg, local);
  out.image = apply_distortion(image, *out.spec.distortion, jpeg);
  return out;
}

TamperSpec sample_spec(int height, int width, int textures, const TamperPolicy& policy, Rng& rng) {
  TamperSpec spec;
  spec.height = height;
  spec.width = width;
  spec.seed = rng();
  Rng local(spec.seed);
  const bool mask = uniform(local, 0, 1) < policy.mask_probability;
  const bool crop = uniform(local, 0, 1) < policy.crop_probability;
  const bool shift = uniform(local, 0, 1) < policy.transition_probability;
  const bool dist = uniform(local, 0, 1) < policy.distortion_probability;
  if (mask) spec.masks = sample_masks(height, width, textures, policy, local);
  if (crop) spec.crop = sample_crop(height, width, policy.min_crop_area, local);
  if (shift) spec.shift = sample_transition(height, width, policy.tau, local);
  if (dist) spec.distortion = sample_distortion(policy.distortion, local);
  return spec;
}

TamperedImage compose(const torch::Tensor& image, std::span<const torch::Tensor> textures, const TamperPolicy& policy,
                      Rng& rng, JpegMode jpeg) {
  TamperedImage out;
  out.spec = sample_spec(static_cast<int>(image.size(-2)), static_cast<int>(image.size(-1)),
                         static_cast<int>(textures.size()), policy, rng);
  out.image = out.spec.noop() ? image : apply_tamper(out.spec, image, textures, jpeg);
  return out;
}

double cumulative_tamper_ratio(double crop_rate, double mask_rate) {
  if (crop_rate < 0 || crop_rate > 1 || mask_rate < 0 || mask_rate > 1) {
    throw InvalidParams("tamper rates must lie in [0, 1]");
  }
  return crop_rate + crop_rate * mask_rate;
}

}  // namespace chartlink
