#include "chartlink/payload.hpp"

#include <algorithm>

#include "chartlink/errors.hpp"

namespace chartlink {

DataImage::DataImage(int r, int c) : rows(r), cols(c), bits(static_cast<size_t>(r) * c, 0) {
  if (r < 1 || c < 1) throw ShapeMismatch("data image dimensions must be positive");
}

DataImage bits_to_image(std::span<const uint8_t> bits, int rows, int cols) {
  if (rows < 1 || cols < 1 || bits.size() != static_cast<size_t>(rows) * cols) {
    throw ShapeMismatch("bit vector of length " + std::to_string(bits.size()) + " does not fill a " +
                        std::to_string(rows) + "x" + std::to_string(cols) + " grid");
  }
  DataImage img(rows, cols);
  std::transform(bits.begin(), bits.end(), img.bits.begin(), [](uint8_t b) -> uint8_t {
    if (b > 1) throw ShapeMismatch("data image cells must be 0 or 1");
    return b;
  });
  return img;
}

std::vector<uint8_t> image_to_bits(const DataImage& img) {
  if (img.bits.size() != static_cast<size_t>(img.rows) * img.cols) {
    throw ShapeMismatch("data image storage does not match its dimensions");
  }
  return img.bits;
}

BchParams BchParams::for_capacity(int capacity_bits) {
  if (capacity_bits >= 255) return {8, 8};
  if (capacity_bits >= 127) return {7, 6};
  if (capacity_bits >= 63) return {6, 4};
  if (capacity_bits >= 31) return {5, 3};
  if (capacity_bits >= 15) return {4, 1};
  throw PayloadTooLong("capacity of " + std::to_string(capacity_bits) + " bits cannot hold a framed payload");
}

BchCode PayloadCodec::make_code(int capacity, BchParams params) {
  BchCode full(params.m, params.t);
  // Shorten when the full codeword would not fit the grid.
  const int data_bits = std::min(full.full_dimension(), capacity - full.parity_bits());
  if (data_bits < kHeaderBits) {
    throw PayloadTooLong("BCH(" + std::to_string(params.m) + "," + std::to_string(params.t) +
                         ") leaves no room for the length header in " + std::to_string(capacity) + " bits");
  }
  return BchCode(params.m, params.t, data_bits);
}

PayloadCodec::PayloadCodec(int rows, int cols, BchParams params)
    : rows_(rows), cols_(cols), params_(params), code_(make_code(rows * cols, params)) {}

DataImage PayloadCodec::encode(const std::string& link) const {
  if (static_cast<int>(link.size()) > max_link_bytes() || link.size() > 255) {
    throw PayloadTooLong("link of " + std::to_string(link.size()) + " bytes exceeds the " +
                         std::to_string(max_link_bytes()) + "-byte payload capacity");
  }
  std::vector<uint8_t> message(code_.data_bits(), 0);
  const auto push_byte = [&](int offset, uint8_t byte) {
    for (int b = 0; b < 8; ++b) message[offset + b] = (byte >> (7 - b)) & 1u;
  };
  push_byte(0, static_cast<uint8_t>(link.size()));
  for (size_t i = 0; i < link.size(); ++i) push_byte(kHeaderBits + 8 * static_cast<int>(i), static_cast<uint8_t>(link[i]));

  std::vector<uint8_t> bits = code_.encode(message);
  bits.resize(capacity(), 0);
  return bits_to_image(bits, rows_, cols_);
}

PayloadCodec::Result PayloadCodec::decode(const DataImage& img) const {
  if (img.rows != rows_ || img.cols != cols_) {
    throw ShapeMismatch("data image is " + std::to_string(img.rows) + "x" + std::to_string(img.cols) +
                        ", codec expects " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  const std::vector<uint8_t> bits = image_to_bits(img);
  const auto decoded = code_.decode(std::span(bits).first(code_.length()));
  const auto& msg = decoded.message;

  const auto read_byte = [&](int offset) {
    uint8_t v = 0;
    for (int b = 0; b < 8; ++b) v = static_cast<uint8_t>((v << 1) | msg[offset + b]);
    return v;
  };
  const int length = read_byte(0);
  if (length > max_link_bytes()) {
    throw FramingError("length header " + std::to_string(length) + " exceeds payload capacity of " +
                       std::to_string(max_link_bytes()) + " bytes");
  }
  for (int i = kHeaderBits + 8 * length; i < code_.data_bits(); ++i) {
    if (msg[i]) throw FramingError("non-zero fill after the framed link");
  }
  Result out;
  out.corrected_bits = decoded.corrected;
  out.link.reserve(length);
  for (int i = 0; i < length; ++i) out.link.push_back(static_cast<char>(read_byte(kHeaderBits + 8 * i)));
  return out;
}

}  // namespace chartlink
