#include <gtest/gtest.h>

#include "chartlink/anchor.hpp"
#include "chartlink/crop_estimator.hpp"
#include "chartlink/errors.hpp"
#include "chartlink/losses.hpp"

using namespace chartlink;

namespace {

torch::Tensor fixture(int64_t c, int64_t h, int64_t w, int mul, int mod, double div) {
  auto i = torch::arange(c * h * w, torch::kFloat64);
  return (torch::remainder(i * mul, mod) / div).reshape({1, c, h, w});
}

}  // namespace

TEST(Losses, StegOracleWithRenormalizedWeights) {
  auto a = fixture(3, 4, 4, 37, 101, 100.0);
  auto b = fixture(3, 4, 4, 53, 97, 96.0);
  EXPECT_NEAR(loss_steg(a, b, LossWeights{}).item<double>(), 0.3529876994932765, 1e-6);
}

TEST(Losses, StegUsesPerceptualWhenGiven) {
  auto a = fixture(3, 4, 4, 37, 101, 100.0);
  auto b = a.clone();
  PerceptualDistance fake = [](const torch::Tensor&, const torch::Tensor&) { return torch::tensor(2.0, torch::kFloat64); };
  EXPECT_NEAR(loss_steg(a, b, LossWeights{}, fake).item<double>(), 0.1 * 2.0, 1e-9);
  EXPECT_NEAR(loss_steg(a, b, LossWeights{}).item<double>(), 0.0, 1e-9);
}

TEST(Losses, DataOracle) {
  auto i = torch::arange(64, torch::kFloat64);
  auto p = 0.05 + 0.9 * torch::remainder(i * 29, 31) / 30.0;
  auto t = (torch::remainder(i * 7, 3) == 0).to(torch::kFloat64);
  EXPECT_NEAR(loss_data(p, t, LossWeights{}).item<double>(), 0.5750269944370606, 1e-6);
}

TEST(Losses, AnchorZeroAtTrueCrop) {
  auto anchor = make_anchor(32, 32);
  auto crops = torch::tensor({{0.5, 0.5, 1.0, 1.0}, {0.4, 0.6, 0.5, 0.7}}, torch::kFloat32);
  auto est = crop_resize(anchor, crops, 32, 32);
  EXPECT_NEAR(loss_anchor(est, anchor, crops, LossWeights{}).item<double>(), 0.0, 1e-6);
  auto off = loss_anchor(est.flip(3), anchor, crops, LossWeights{}).item<double>();
  EXPECT_GT(off, 0.0);
}

TEST(Losses, TotalLossGatesDataOnCroppedBatches) {
  auto x = torch::ones({2}, torch::requires_grad());
  auto y = torch::ones({2}, torch::requires_grad());
  LossTerms terms{x.sum(), (3 * y).sum(), x.mean(), torch::Tensor()};
  auto cropped = total_loss(terms, true);
  cropped.backward();
  EXPECT_FALSE(y.grad().defined() && y.grad().abs().sum().item<float>() != 0.0f);
  EXPECT_NEAR(cropped.item<double>(), 3.0, 1e-9);

  LossTerms plain{x.sum(), (3 * y).sum(), x.mean(), torch::tensor(0.5)};
  EXPECT_NEAR(total_loss(plain, false).item<double>(), 2 + 6 + 1 + 0.5, 1e-6);
}

TEST(Losses, WeightsValidate) {
  LossWeights w;
  EXPECT_NO_THROW(w.validate());
  w.data = -1;
  EXPECT_THROW(w.validate(), InvalidParams);
}
