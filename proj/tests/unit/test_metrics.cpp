#include <gtest/gtest.h>

#include "chartlink/errors.hpp"
#include "chartlink/metrics.hpp"

using namespace chartlink;

namespace {

// Closed-form fixtures shared with the offline oracle.
torch::Tensor fixture(int64_t c, int64_t h, int64_t w, int mul, int mod, double div) {
  auto i = torch::arange(c * h * w, torch::kFloat64);
  return (torch::fmod(i * mul, mod) / div).reshape({c, h, w});
}

torch::Tensor fix_a(int64_t c, int64_t h, int64_t w) { return fixture(c, h, w, 37, 101, 100.0); }
torch::Tensor fix_b(int64_t c, int64_t h, int64_t w) { return fixture(c, h, w, 53, 97, 96.0); }

}  // namespace

TEST(Metrics, PsnrOracle) {
  EXPECT_NEAR(psnr(fix_a(3, 8, 8), fix_b(3, 8, 8)), 7.923773188109741, 1e-6);
  auto x = torch::rand({3, 8, 8}, torch::kFloat64) * 0.8;
  EXPECT_NEAR(psnr(x, x + 0.1), 20.0, 1e-6);
  EXPECT_EQ(psnr(x, x), kPsnrCap);
  EXPECT_THROW(psnr(x, torch::zeros({3, 8, 7})), ShapeMismatch);
}

TEST(Metrics, SsimOracle) {
  EXPECT_NEAR(ssim(fix_a(3, 8, 8), fix_b(3, 8, 8)).item<double>(), 0.4251630660012011, 1e-6);
  auto x = fix_a(3, 8, 8);
  EXPECT_NEAR(ssim(x, x).item<double>(), 1.0, 1e-12);
  auto batch = torch::stack({fix_a(3, 8, 8), fix_b(3, 8, 8)});
  auto per = ssim_per_image(batch, torch::stack({fix_b(3, 8, 8), fix_b(3, 8, 8)}));
  EXPECT_NEAR(per[0].item<double>(), 0.4251630660012011, 1e-6);
  EXPECT_NEAR(per[1].item<double>(), 1.0, 1e-12);
}

TEST(Metrics, L1AndBceOracles) {
  EXPECT_NEAR(l1(fix_a(3, 8, 8), fix_b(3, 8, 8)).item<double>(), 0.3275564236111111, 1e-9);
  auto i = torch::arange(64, torch::kFloat64);
  auto p = 0.05 + 0.9 * torch::fmod(i * 29, 31) / 30;
  auto t = (torch::fmod(i * 7, 3) == 0).to(torch::kFloat64);
  EXPECT_NEAR(bce(p, t).item<double>(), 0.9583783240617677, 1e-9);
  EXPECT_NEAR(bce(torch::full({10}, 0.5, torch::kFloat64), t.narrow(0, 0, 10)).item<double>(), std::log(2.0), 1e-12);
}

TEST(Metrics, BitAccuracyAndIou) {
  std::vector<uint8_t> a{1, 0, 1, 1}, b{0, 1, 0, 0};
  EXPECT_DOUBLE_EQ(bit_accuracy(a, a), 100.0);
  EXPECT_DOUBLE_EQ(bit_accuracy(a, b), 0.0);
  EXPECT_DOUBLE_EQ(bit_accuracy(a, std::vector<uint8_t>{1, 0, 0, 0}), 50.0);
  EXPECT_THROW(bit_accuracy(a, std::vector<uint8_t>{1}), ShapeMismatch);

  Box box{0.1, 0.2, 0.5, 0.6};
  EXPECT_DOUBLE_EQ(iou(box, box), 1.0);
  EXPECT_DOUBLE_EQ(iou(box, Box{0.6, 0.6, 0.9, 0.9}), 0.0);
  EXPECT_NEAR(iou(Box{0, 0, 0.5, 1}, Box{0.25, 0, 0.75, 1}), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(bits_per_pixel(324, 384, 384), 324.0 / (384.0 * 384.0));
}
