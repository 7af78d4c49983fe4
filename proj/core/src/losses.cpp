#include "chartlink/losses.hpp"

#include "chartlink/crop_estimator.hpp"
#include "chartlink/errors.hpp"
#include "chartlink/metrics.hpp"

namespace chartlink {

void LossWeights::validate() const {
  if (l1 < 0 || ssim < 0 || lpips < 0 || data < 0 || anchor < 0) throw InvalidParams("loss weights must be >= 0");
}

torch::Tensor loss_steg(const torch::Tensor& host, const torch::Tensor& stego, const LossWeights& w,
                        const PerceptualDistance& perceptual) {
  if (host.sizes() != stego.sizes()) throw ShapeMismatch("loss_steg needs equally shaped images");
  double w1 = w.l1, w2 = w.ssim;
  if (!perceptual && w1 + w2 > 0) {
    const double scale = (w.l1 + w.ssim + w.lpips) / (w.l1 + w.ssim);
    w1 *= scale;
    w2 *= scale;
  }
  auto loss = w1 * l1(host, stego) + w2 * (1.0 - ssim(host, stego));
  if (perceptual) loss = loss + w.lpips * perceptual(host, stego);
  return loss;
}

torch::Tensor loss_data(const torch::Tensor& decoded, const torch::Tensor& truth, const LossWeights& w) {
  if (decoded.sizes() != truth.sizes()) throw ShapeMismatch("loss_data needs equally shaped module grids");
  return w.data * bce(decoded, truth.to(decoded.dtype()));
}

torch::Tensor loss_anchor(const torch::Tensor& estimate, const torch::Tensor& anchor, const torch::Tensor& crops,
                          const LossWeights& w) {
  if (estimate.dim() != 4) throw ShapeMismatch("anchor estimate must be [B, C, H, W]");
  auto ref = anchor.dim() == 3 ? anchor.unsqueeze(0) : anchor;
  ref = ref.expand({estimate.size(0), -1, -1, -1});
  auto target = crop_resize(ref, crops, estimate.size(2), estimate.size(3));
  return w.anchor * l1(estimate, target.detach());
}

torch::Tensor total_loss(const LossTerms& terms, bool cropped) {
  auto loss = terms.steg + terms.anchor;
  if (!cropped) {
    if (!terms.data.defined()) throw InvalidParams("uncropped batch is missing its data loss");
    loss = loss + terms.data;
  }
  if (terms.penalty.defined()) loss = loss + terms.penalty;
  return loss;
}

}  // namespace chartlink
