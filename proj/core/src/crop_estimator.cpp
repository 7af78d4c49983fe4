#include "chartlink/crop_estimator.hpp"

#include <algorithm>
#include <cmath>

#include "chartlink/errors.hpp"
#include "chartlink/image.hpp"

namespace chartlink {

bool CropParams::valid(double tolerance) const {
  const auto axis_ok = [&](double c, double s) {
    return s > 0 && s <= 1 + tolerance && c - s / 2 >= -tolerance && c + s / 2 <= 1 + tolerance;
  };
  return axis_ok(cx, sx) && axis_ok(cy, sy);
}

Box CropParams::box() const { return {cx - sx / 2, cy - sy / 2, cx + sx / 2, cy + sy / 2}; }

void to_json(nlohmann::json& j, const CropParams& p) {
  j = nlohmann::json{{"cx", p.cx}, {"cy", p.cy}, {"sx", p.sx}, {"sy", p.sy}};
}

void from_json(const nlohmann::json& j, CropParams& p) {
  j.at("cx").get_to(p.cx);
  j.at("cy").get_to(p.cy);
  j.at("sx").get_to(p.sx);
  j.at("sy").get_to(p.sy);
}

namespace {

torch::Tensor params_tensor(const CropParams& p) {
  return torch::tensor({p.cx, p.cy, p.sx, p.sy}, torch::kFloat32).unsqueeze(0);
}

torch::Tensor as_batch(const torch::Tensor& t) { return t.dim() == 3 ? t.unsqueeze(0) : t; }

}  // namespace

torch::Tensor crop_resize(const torch::Tensor& image, const torch::Tensor& params, int64_t out_h, int64_t out_w) {
  auto img = as_batch(image);
  if (params.dim() != 2 || params.size(1) != 4) throw ShapeMismatch("crop params must be [B, 4]");
  const int64_t batch = params.size(0);
  if (img.size(0) != batch) img = img.expand({batch, img.size(1), img.size(2), img.size(3)});
  auto p = params.to(img.dtype());
  auto zeros = torch::zeros({batch}, p.options());
  // Output pixel u in [-1, 1] samples input at s * u + (2c - 1).
  auto row0 = torch::stack({p.select(1, 2), zeros, 2 * p.select(1, 0) - 1}, 1);
  auto row1 = torch::stack({zeros, p.select(1, 3), 2 * p.select(1, 1) - 1}, 1);
  auto theta = torch::stack({row0, row1}, 1);
  namespace F = torch::nn::functional;
  auto grid = F::affine_grid(theta, {batch, img.size(1), out_h, out_w}, /*align_corners=*/false);
  return F::grid_sample(img, grid,
                        F::GridSampleFuncOptions().mode(torch::kBilinear).padding_mode(torch::kBorder).align_corners(false));
}

torch::Tensor crop_resize(const torch::Tensor& image, const CropParams& params) {
  const auto img = as_batch(image);
  auto out = crop_resize(img, params_tensor(params), img.size(2), img.size(3));
  return image.dim() == 3 ? out.squeeze(0) : out;
}

torch::Tensor match_objective(const torch::Tensor& estimate, const torch::Tensor& anchor, const torch::Tensor& params,
                              double ssim_weight) {
  auto est = as_batch(estimate);
  auto candidate = crop_resize(anchor, params, est.size(2), est.size(3));
  if (est.size(0) != candidate.size(0)) est = est.expand_as(candidate);
  auto l1_rows = (est - candidate).abs().flatten(1).mean(1);
  if (ssim_weight == 0.0) return l1_rows;
  return l1_rows + ssim_weight * (1 - ssim_per_image(est, candidate));
}

double match_objective(const torch::Tensor& estimate, const torch::Tensor& anchor, const CropParams& params,
                       double ssim_weight) {
  torch::NoGradGuard no_grad;
  return match_objective(estimate, anchor, params_tensor(params), ssim_weight).item<double>();
}

namespace {

/// Projects rows of (cx, cy, sx, sy) onto the feasible set in place.
void project_params(torch::Tensor& p, double min_scale) {
  torch::NoGradGuard no_grad;
  auto s = p.narrow(1, 2, 2);
  s.clamp_(min_scale, 1.0);
  auto c = p.narrow(1, 0, 2);
  c.copy_(torch::max(torch::min(c, 1.0 - s / 2), s / 2));
}

}  // namespace

CropEstimate estimate_crop(const torch::Tensor& anchor_estimate, const torch::Tensor& anchor, const MatchConfig& cfg) {
  if (cfg.ssim_weight < 0) throw InvalidParams("SSIM weight must be non-negative");
  if (cfg.center_grid < 1 || cfg.initial_scales.empty() || cfg.steps < 0 || cfg.refine_starts < 0) {
    throw InvalidParams("empty restart grid");
  }
  torch::Tensor est = anchor_estimate.detach().to(torch::kFloat32);
  torch::Tensor ref = anchor.detach().to(torch::kFloat32);
  if (est.dim() != 3 || ref.dim() != 3 || est.size(0) != ref.size(0)) {
    throw ShapeMismatch("estimate_crop expects two [C, H, W] images");
  }
  if (est.std().item<double>() < cfg.degenerate_std) {
    throw DegenerateInput("anchor estimate is (near-)constant; nothing to match");
  }
  const int64_t longest = std::max(est.size(1), est.size(2));
  if (longest > cfg.max_resolution) {
    const double f = static_cast<double>(cfg.max_resolution) / static_cast<double>(longest);
    est = resize(est, std::max<int64_t>(8, std::lround(est.size(1) * f)), std::max<int64_t>(8, std::lround(est.size(2) * f)));
  }
  // The reference is sampled directly from the full-resolution anchor.

  std::vector<float> init;
  for (double s : cfg.initial_scales) {
    for (int gy = 0; gy < cfg.center_grid; ++gy) {
      for (int gx = 0; gx < cfg.center_grid; ++gx) {
        const double cx = cfg.center_grid == 1 ? 0.5 : 0.3 + 0.4 * gx / (cfg.center_grid - 1);
        const double cy = cfg.center_grid == 1 ? 0.5 : 0.3 + 0.4 * gy / (cfg.center_grid - 1);
        init.insert(init.end(), {static_cast<float>(cx), static_cast<float>(cy), static_cast<float>(s), static_cast<float>(s)});
      }
    }
  }
  const int64_t starts = static_cast<int64_t>(init.size() / 4);
  auto params = torch::from_blob(init.data(), {starts, 4}, torch::kFloat32).clone();
  project_params(params, cfg.min_scale);

  // Callers often decode under NoGradGuard; the search itself needs autograd.
  torch::AutoGradMode enable_grad(true);
  const auto batch_est = est.unsqueeze(0);
  const auto batch_ref = ref.unsqueeze(0);
  const auto lr_at = [&](int step) {
    // Cosine-annealed step size; Adam alone keeps jittering at the lr scale.
    return cfg.learning_rate * (0.01 + 0.99 * 0.5 * (1 + std::cos(M_PI * step / std::max(1, cfg.steps))));
  };
  const int coarse = std::clamp(cfg.coarse_steps, 0, cfg.steps);
  auto run = [&](torch::Tensor& p, int from, int to, double ssim_weight) {
    p.set_requires_grad(true);
    torch::optim::Adam optimizer({p}, torch::optim::AdamOptions(cfg.learning_rate));
    for (int step = from; step < to; ++step) {
      static_cast<torch::optim::AdamOptions&>(optimizer.param_groups()[0].options()).lr(lr_at(step));
      optimizer.zero_grad();
      auto loss = match_objective(batch_est, batch_ref, p, ssim_weight).sum();
      loss.backward();
      optimizer.step();
      project_params(p, cfg.min_scale);
    }
  };
  run(params, 0, coarse, 0.0);
  if (cfg.refine_starts > 0 && cfg.refine_starts < starts) {
    torch::NoGradGuard no_grad;
    auto loss = match_objective(batch_est, batch_ref, params, cfg.ssim_weight);
    auto keep = std::get<1>(loss.topk(cfg.refine_starts, 0, /*largest=*/false));
    params = params.detach().index_select(0, keep).clone();
  }
  run(params, coarse, cfg.steps, cfg.ssim_weight);

  torch::NoGradGuard no_grad;
  auto final_loss = match_objective(batch_est, batch_ref, params, cfg.ssim_weight);
  const int64_t best = final_loss.argmin().item<int64_t>();
  auto p = params[best];
  CropEstimate out;
  out.params = {p[0].item<double>(), p[1].item<double>(), p[2].item<double>(), p[3].item<double>()};
  out.loss = final_loss[best].item<double>();
  out.full_frame_loss =
      match_objective(batch_est, batch_ref, params_tensor(CropParams::full_frame()), cfg.ssim_weight).item<double>();
  return out;
}

torch::Tensor rectify(const torch::Tensor& received, const CropParams& params, int64_t out_h, int64_t out_w, double fill) {
  if (received.dim() != 3) throw ShapeMismatch("rectify expects a [C, H, W] image");
  if (!params.valid(1e-6) || params.sx * out_w < 4.0 || params.sy * out_h < 4.0) {
    throw InvalidParams("crop rectangle is degenerate or outside the frame");
  }
  // Canvas pixel centre u maps to (u - x0) / sx inside the received image.
  auto u = (torch::arange(out_w, torch::kFloat32) + 0.5f) / static_cast<float>(out_w);
  auto v = (torch::arange(out_h, torch::kFloat32) + 0.5f) / static_cast<float>(out_h);
  auto local_u = (u - static_cast<float>(params.cx - params.sx / 2)) / static_cast<float>(params.sx);
  auto local_v = (v - static_cast<float>(params.cy - params.sy / 2)) / static_cast<float>(params.sy);
  auto gx = (2 * local_u - 1).unsqueeze(0).expand({out_h, out_w});
  auto gy = (2 * local_v - 1).unsqueeze(1).expand({out_h, out_w});
  auto grid = torch::stack({gx, gy}, -1).unsqueeze(0).to(received.device());

  auto src = received.to(torch::kFloat32).unsqueeze(0);
  // Shrinking into the rectangle: antialias first so bilinear sampling does not alias.
  const int64_t rect_h = std::max<int64_t>(1, std::lround(params.sy * out_h));
  const int64_t rect_w = std::max<int64_t>(1, std::lround(params.sx * out_w));
  if (rect_h < src.size(2) || rect_w < src.size(3)) src = resize(src, std::min(rect_h, src.size(2)), std::min(rect_w, src.size(3)));
  namespace F = torch::nn::functional;
  auto sampled = F::grid_sample(src, grid,
                                F::GridSampleFuncOptions().mode(torch::kBilinear).padding_mode(torch::kBorder).align_corners(false));
  auto inside = ((local_u >= 0) & (local_u <= 1)).unsqueeze(0).expand({out_h, out_w}) &
                ((local_v >= 0) & (local_v <= 1)).unsqueeze(1).expand({out_h, out_w});
  auto canvas = torch::full_like(sampled, fill);
  return torch::where(inside.unsqueeze(0).unsqueeze(0).to(received.device()), sampled, canvas).squeeze(0);
}

bool is_cropped(const CropParams& params, double threshold) {
  return std::min(params.sx, params.sy) < 1.0 - threshold || std::abs(params.cx - 0.5) > threshold ||
         std::abs(params.cy - 0.5) > threshold;
}

}  // namespace chartlink
