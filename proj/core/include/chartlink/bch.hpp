#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace chartlink {

/// Binary BCH code over GF(2^m), optionally shortened.
///
/// Codewords are systematic and laid out MSB-first: the first `data_bits()`
/// entries are the message, followed by `parity_bits()` check bits. Bits are
/// stored one per byte with values 0 or 1.
class BchCode {
 public:
  /// Builds the narrow-sense primitive code of length 2^m - 1 correcting `t`
  /// errors, shortened so that it carries `data_bits` message bits
  /// (0 means the full dimension k).
  BchCode(int m, int t, int data_bits = 0);

  int m() const noexcept { return m_; }
  int t() const noexcept { return t_; }
  /// Full (unshortened) length 2^m - 1.
  int full_length() const noexcept { return n_full_; }
  /// Full (unshortened) dimension.
  int full_dimension() const noexcept { return n_full_ - parity_bits(); }
  int data_bits() const noexcept { return k_; }
  int parity_bits() const noexcept { return static_cast<int>(generator_.size()) - 1; }
  int length() const noexcept { return k_ + parity_bits(); }

  /// Generator polynomial, coefficient of x^i at index i.
  const std::vector<uint8_t>& generator() const noexcept { return generator_; }

  std::vector<uint8_t> encode(std::span<const uint8_t> message) const;

  struct Decoded {
    std::vector<uint8_t> message;
    int corrected = 0;
  };
  /// Corrects up to t errors. Throws EccFailure when the error pattern is
  /// detectably uncorrectable.
  Decoded decode(std::span<const uint8_t> codeword) const;

 private:
  int gf_mul(int a, int b) const;
  int gf_inv(int a) const;

  int m_;
  int t_;
  int n_full_;
  int k_;
  std::vector<int> exp_;  // alpha^i, doubled for wraparound-free products
  std::vector<int> log_;
  std::vector<uint8_t> generator_;
};

/// Degree-m primitive polynomial (bit i = coefficient of x^i), m in [3, 16].
uint32_t primitive_polynomial(int m);

}  // namespace chartlink
