#include <gtest/gtest.h>

#include "chartlink/charts.hpp"
#include "chartlink/errors.hpp"
#include "chartlink/image.hpp"
#include "chartlink/pipeline.hpp"

using namespace chartlink;

namespace {

StegoNetwork tiny_net() {
  auto c = NetworkConfig::toy();
  c.height = c.width = 32;
  c.patch = 8;
  c.rdt = RdtConfig{4, 8, 2, 1, 32, 32};
  torch::manual_seed(3);
  StegoNetwork net(c);
  torch::NoGradGuard g;
  for (auto& p : net->parameters()) p.add_(torch::randn_like(p) * 0.02);
  net->eval();
  return net;
}

}  // namespace

TEST(Pipeline, CodecMatchesNetworkGrid) {
  auto codec = codec_for(NetworkConfig::toy());
  EXPECT_EQ(codec.rows(), 4);
  EXPECT_EQ(codec.cols(), 8);
  EXPECT_EQ(codec_for(NetworkConfig::full()).max_link_bytes(), 22);
}

TEST(Pipeline, EmbedKeepsHostResolutionAndIsAdditive) {
  auto net = tiny_net();
  auto host = generate_charts(1, 45, 70, 2).images[0];
  auto out = embed(*net, host, "a");
  EXPECT_EQ(out.stego.sizes(), host.sizes());
  EXPECT_EQ(out.net_stego.sizes(), (std::vector<int64_t>{3, 32, 32}));
  EXPECT_LT((out.stego - host - out.watermark).abs().max().item<float>(), 1e-6f);
  auto expected = resize(out.net_stego - resize(host, 32, 32), 45, 70);
  EXPECT_LT((out.watermark - expected).abs().max().item<float>(), 1e-6f);
  EXPECT_THROW(embed(*net, host, "far too long for one byte"), PayloadTooLong);
  EXPECT_THROW(embed(*net, torch::rand({1, 32, 32}), "a"), ShapeMismatch);
}

TEST(Pipeline, DecodeReportsCropOrRaisesLibraryError) {
  auto net = tiny_net();
  auto host = generate_charts(1, 32, 32, 4).images[0];
  auto stego = embed(*net, host, "z").stego.clamp(0, 1);
  PipelineConfig cfg;
  cfg.match.steps = 20;
  auto bits = decode_bits(*net, stego, cfg);
  EXPECT_EQ(bits.means.sizes(), (std::vector<int64_t>{4, 8}));
  EXPECT_TRUE(bits.crop.params.valid(1e-6));
  EXPECT_EQ(bits.cropped, is_cropped(bits.crop.params, cfg.crop_threshold));
  // Same seed, same answer.
  auto again = decode_bits(*net, stego, cfg);
  EXPECT_TRUE(torch::equal(bits.means, again.means));
}

TEST(Pipeline, CropGateNeedsClearGainOverFullFrame) {
  PipelineConfig cfg;
  CropEstimate est;
  est.params = CropParams{0.4, 0.5, 0.6, 0.7};
  est.full_frame_loss = 0.2;
  est.loss = 0.1;
  EXPECT_TRUE(accept_crop(est, cfg));
  est.loss = 0.18;  // ratio 0.9
  EXPECT_FALSE(accept_crop(est, cfg));
  cfg.crop_gain = 0.95;
  EXPECT_TRUE(accept_crop(est, cfg));
  est.params = CropParams::full_frame();
  est.loss = 0.0;
  EXPECT_FALSE(accept_crop(est, cfg));
}

TEST(Detect, IdenticalImagesGiveEmptyHeatmap) {
  auto img = generate_charts(1, 64, 64, 5).images[0];
  auto r = detect(img, img, CropParams::full_frame(), 0.08, 6);
  EXPECT_EQ(r.heatmap.abs().max().item<float>(), 0.0f);
  EXPECT_TRUE(r.regions.empty());
  EXPECT_EQ(r.overlay.sizes(), img.sizes());
}

TEST(Detect, FindsEditedBar) {
  auto ref = torch::full({3, 80, 80}, 0.95);
  ref.slice(1, 20, 70).slice(2, 30, 40).fill_(0.2);
  auto edited = ref.clone();
  edited.slice(1, 10, 20).slice(2, 30, 40).fill_(0.2);  // bar made taller
  auto r = detect(edited, ref, CropParams::full_frame(), 0.08, 6);
  ASSERT_EQ(r.regions.size(), 1u);
  EXPECT_GE(iou(r.regions[0], Box{30 / 80.0, 10 / 80.0, 40 / 80.0, 20 / 80.0}), 0.5);
}

TEST(Detect, AlignsCroppedInputAndIgnoresOutside) {
  auto ref = generate_charts(1, 64, 64, 6).images[0];
  CropParams p{0.5, 0.5, 0.5, 0.5};
  auto piece = ref.slice(1, 16, 48).slice(2, 16, 48).clone();
  auto r = detect(piece, ref, p, 0.08, 6);
  EXPECT_TRUE(r.regions.empty());
  EXPECT_EQ(r.heatmap[0][0].item<float>(), 0.0f);
}
