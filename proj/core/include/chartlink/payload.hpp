#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chartlink/bch.hpp"

namespace chartlink {

/// Binary module grid. 0 renders black, 1 renders white. Row-major.
struct DataImage {
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> bits;

  DataImage() = default;
  DataImage(int rows, int cols);

  uint8_t at(int r, int c) const { return bits[static_cast<size_t>(r) * cols + c]; }
  uint8_t& at(int r, int c) { return bits[static_cast<size_t>(r) * cols + c]; }
  int capacity() const noexcept { return rows * cols; }

  bool operator==(const DataImage&) const = default;
};

/// Row-major bijection between a bit vector and a rows x cols grid.
DataImage bits_to_image(std::span<const uint8_t> bits, int rows, int cols);
std::vector<uint8_t> image_to_bits(const DataImage& img);

struct BchParams {
  int m = 8;
  int t = 8;

  /// Defaults per capacity: GF(2^8), t = 8 for 255+ bits; smaller fields
  /// for the low-capacity toy grids.
  static BchParams for_capacity(int capacity_bits);
  bool operator==(const BchParams&) const = default;
};

/// Frames a link into a fixed-capacity bit grid:
/// [8-bit length | link bytes | zero fill] -> BCH codeword, then zero padding.
class PayloadCodec {
 public:
  PayloadCodec(int rows, int cols, BchParams params);
  PayloadCodec(int rows, int cols) : PayloadCodec(rows, cols, BchParams::for_capacity(rows * cols)) {}

  int capacity() const noexcept { return rows_ * cols_; }
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  const BchCode& code() const noexcept { return code_; }
  const BchParams& params() const noexcept { return params_; }
  int max_link_bytes() const noexcept { return (code_.data_bits() - kHeaderBits) / 8; }

  DataImage encode(const std::string& link) const;

  struct Result {
    std::string link;
    int corrected_bits = 0;
  };
  /// Throws EccFailure or FramingError.
  Result decode(const DataImage& img) const;

  static constexpr int kHeaderBits = 8;

 private:
  static BchCode make_code(int capacity, BchParams params);

  int rows_;
  int cols_;
  BchParams params_;
  BchCode code_;
};

}  // namespace chartlink
