#include <gtest/gtest.h>

#include "chartlink/errors.hpp"
#include "chartlink/payload.hpp"

using namespace chartlink;

TEST(DataImage, BitsRoundTripRowMajor) {
  std::vector<uint8_t> bits{1, 0, 0, 1, 1, 1};
  const auto img = bits_to_image(bits, 2, 3);
  EXPECT_EQ(img.at(0, 0), 1);
  EXPECT_EQ(img.at(0, 2), 0);
  EXPECT_EQ(img.at(1, 0), 1);
  EXPECT_EQ(image_to_bits(img), bits);
  EXPECT_THROW(bits_to_image(bits, 2, 2), ShapeMismatch);
  EXPECT_THROW(bits_to_image(std::vector<uint8_t>{2, 0, 0, 0}, 2, 2), ShapeMismatch);
}

TEST(PayloadCodec, CapacityDefaults) {
  PayloadCodec full(18, 18);
  EXPECT_EQ(full.params(), (BchParams{8, 8}));
  EXPECT_EQ(full.code().data_bits(), 191);
  EXPECT_EQ(full.max_link_bytes(), 22);

  PayloadCodec toy(4, 8);
  EXPECT_EQ(toy.params(), (BchParams{5, 3}));
  EXPECT_EQ(toy.code().length(), 31);
  EXPECT_EQ(toy.max_link_bytes(), 1);
}

TEST(PayloadCodec, RoundTripsLinks) {
  PayloadCodec codec(18, 18);
  for (const std::string link : {std::string(), std::string("a"), std::string("https://ex.am/p?q=1"), std::string(22, 'z')}) {
    const auto img = codec.encode(link);
    EXPECT_EQ(img.capacity(), 324);
    const auto r = codec.decode(img);
    EXPECT_EQ(r.link, link);
    EXPECT_EQ(r.corrected_bits, 0);
  }
}

TEST(PayloadCodec, PadsBeyondCodewordWithZeros) {
  PayloadCodec codec(18, 18);
  const auto bits = image_to_bits(codec.encode("abc"));
  for (size_t i = 255; i < bits.size(); ++i) EXPECT_EQ(bits[i], 0) << i;
  // Header is the MSB-first length byte.
  EXPECT_EQ(bits[6], 1);
  EXPECT_EQ(bits[7], 1);
}

TEST(PayloadCodec, CorrectsFlippedModules) {
  PayloadCodec codec(18, 18);
  auto img = codec.encode("chart.example/42");
  for (int i : {3, 40, 77, 120, 200, 230, 250, 254}) img.bits[i] ^= 1u;
  const auto r = codec.decode(img);
  EXPECT_EQ(r.link, "chart.example/42");
  EXPECT_EQ(r.corrected_bits, 8);
}

TEST(PayloadCodec, Errors) {
  PayloadCodec codec(18, 18);
  EXPECT_THROW(codec.encode(std::string(23, 'x')), PayloadTooLong);
  EXPECT_THROW(codec.decode(DataImage(4, 8)), ShapeMismatch);
  EXPECT_THROW(PayloadCodec(2, 2), PayloadTooLong);

  // A valid codeword whose header claims more bytes than fit.
  const auto& code = codec.code();
  std::vector<uint8_t> msg(code.data_bits(), 0);
  msg[0] = 1;  // length 128
  auto bits = code.encode(msg);
  bits.resize(324, 0);
  EXPECT_THROW(codec.decode(bits_to_image(bits, 18, 18)), FramingError);

  // Non-zero fill after the link.
  std::fill(msg.begin(), msg.end(), 0);
  msg[100] = 1;
  bits = code.encode(msg);
  bits.resize(324, 0);
  EXPECT_THROW(codec.decode(bits_to_image(bits, 18, 18)), FramingError);
}
