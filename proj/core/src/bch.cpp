#include "chartlink/bch.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "chartlink/errors.hpp"

namespace chartlink {

uint32_t primitive_polynomial(int m) {
  static constexpr uint32_t kTable[] = {
      0x0,    0x0,    0x0,    0xB,    0x13,   0x25,   0x43,   0x89,   0x11D,
      0x211,  0x409,  0x805,  0x1053, 0x201B, 0x4443, 0x8003, 0x1100B,
  };
  if (m < 3 || m > 16) throw InvalidParams("BCH field degree must be in [3, 16], got " + std::to_string(m));
  return kTable[m];
}

BchCode::BchCode(int m, int t, int data_bits) : m_(m), t_(t), n_full_((1 << m) - 1) {
  if (t < 1) throw InvalidParams("BCH correction capability t must be >= 1");
  if (2 * t >= n_full_) throw InvalidParams("BCH t too large for field degree");

  const uint32_t prim = primitive_polynomial(m);
  exp_.assign(2 * n_full_, 0);
  log_.assign(n_full_ + 1, -1);
  uint32_t x = 1;
  for (int i = 0; i < n_full_; ++i) {
    exp_[i] = static_cast<int>(x);
    log_[x] = i;
    x <<= 1;
    if (x & (1u << m)) x ^= prim;
  }
  for (int i = n_full_; i < 2 * n_full_; ++i) exp_[i] = exp_[i - n_full_];

  // g(x) = lcm of minimal polynomials of alpha^1 .. alpha^2t.
  std::vector<uint8_t> g{1};
  std::set<int> covered;
  for (int i = 1; i <= 2 * t; ++i) {
    if (covered.count(i)) continue;
    std::vector<int> coset;
    int j = i;
    do {
      coset.push_back(j);
      covered.insert(j);
      j = (2 * j) % n_full_;
    } while (j != i);

    // Product of (x + alpha^j) over the coset, coefficients in GF(2^m).
    std::vector<int> minimal{1};
    for (int e : coset) {
      std::vector<int> next(minimal.size() + 1, 0);
      for (size_t d = 0; d < minimal.size(); ++d) {
        next[d + 1] ^= minimal[d];
        next[d] ^= gf_mul(minimal[d], exp_[e]);
      }
      minimal = std::move(next);
    }
    std::vector<uint8_t> product(g.size() + minimal.size() - 1, 0);
    for (size_t a = 0; a < g.size(); ++a) {
      if (!g[a]) continue;
      for (size_t b = 0; b < minimal.size(); ++b) {
        if (minimal[b] > 1) throw Error("minimal polynomial has non-binary coefficient");
        product[a + b] ^= static_cast<uint8_t>(minimal[b]);
      }
    }
    g = std::move(product);
  }
  generator_ = std::move(g);

  const int k_full = n_full_ - parity_bits();
  if (k_full <= 0) throw InvalidParams("BCH code has no message bits for these parameters");
  k_ = data_bits == 0 ? k_full : data_bits;
  if (k_ < 1 || k_ > k_full) {
    throw InvalidParams("BCH shortened dimension " + std::to_string(data_bits) + " outside [1, " +
                        std::to_string(k_full) + "]");
  }
}

int BchCode::gf_mul(int a, int b) const {
  if (a == 0 || b == 0) return 0;
  return exp_[log_[a] + log_[b]];
}

int BchCode::gf_inv(int a) const { return exp_[(n_full_ - log_[a]) % n_full_]; }

std::vector<uint8_t> BchCode::encode(std::span<const uint8_t> message) const {
  if (static_cast<int>(message.size()) != k_) {
    throw ShapeMismatch("BCH encode expects " + std::to_string(k_) + " bits, got " +
                        std::to_string(message.size()));
  }
  const int r = parity_bits();
  std::vector<uint8_t> work(k_ + r, 0);
  for (int i = 0; i < k_; ++i) work[i] = message[i] & 1u;
  for (int i = 0; i < k_; ++i) {
    if (!work[i]) continue;
    for (int j = 0; j <= r; ++j) work[i + j] ^= generator_[r - j];
  }
  std::vector<uint8_t> codeword(message.begin(), message.end());
  for (auto& b : codeword) b &= 1u;
  codeword.insert(codeword.end(), work.begin() + k_, work.end());
  return codeword;
}

BchCode::Decoded BchCode::decode(std::span<const uint8_t> codeword) const {
  const int n = length();
  if (static_cast<int>(codeword.size()) != n) {
    throw ShapeMismatch("BCH decode expects " + std::to_string(n) + " bits, got " +
                        std::to_string(codeword.size()));
  }
  std::vector<uint8_t> word(codeword.begin(), codeword.end());
  for (auto& b : word) b &= 1u;

  // Bit i carries the coefficient of x^(n-1-i).
  std::vector<int> syndromes(2 * t_, 0);
  bool clean = true;
  for (int j = 1; j <= 2 * t_; ++j) {
    int s = 0;
    for (int i = 0; i < n; ++i) {
      if (word[i]) s ^= exp_[(static_cast<long>(j) * (n - 1 - i)) % n_full_];
    }
    syndromes[j - 1] = s;
    clean = clean && s == 0;
  }

  Decoded out;
  if (!clean) {
    // Berlekamp-Massey.
    std::vector<int> locator{1};
    std::vector<int> prev{1};
    int degree = 0;
    int shift = 1;
    int prev_discrepancy = 1;
    for (int step = 0; step < 2 * t_; ++step) {
      int d = syndromes[step];
      for (int i = 1; i <= degree && i < static_cast<int>(locator.size()); ++i) {
        d ^= gf_mul(locator[i], syndromes[step - i]);
      }
      if (d == 0) {
        ++shift;
        continue;
      }
      const int scale = gf_mul(d, gf_inv(prev_discrepancy));
      std::vector<int> updated = locator;
      if (updated.size() < prev.size() + shift) updated.resize(prev.size() + shift, 0);
      for (size_t i = 0; i < prev.size(); ++i) updated[i + shift] ^= gf_mul(scale, prev[i]);
      if (2 * degree <= step) {
        prev = locator;
        degree = step + 1 - degree;
        prev_discrepancy = d;
        shift = 1;
      } else {
        ++shift;
      }
      locator = std::move(updated);
    }
    while (locator.size() > 1 && locator.back() == 0) locator.pop_back();
    const int locator_degree = static_cast<int>(locator.size()) - 1;
    if (degree > t_ || locator_degree != degree) {
      throw EccFailure("BCH: error count exceeds correction capability", word);
    }

    // Chien search restricted to the positions that exist in the shortened code.
    std::vector<int> error_positions;
    for (int power = 0; power < n; ++power) {
      const int x_inv = exp_[(n_full_ - power) % n_full_];
      int value = 0;
      int x_pow = 1;
      for (int c : locator) {
        value ^= gf_mul(c, x_pow);
        x_pow = gf_mul(x_pow, x_inv);
      }
      if (value == 0) error_positions.push_back(n - 1 - power);
    }
    if (static_cast<int>(error_positions.size()) != degree) {
      throw EccFailure("BCH: error locator roots do not match its degree", word);
    }
    for (int pos : error_positions) word[pos] ^= 1u;
    out.corrected = degree;
  }
  out.message.assign(word.begin(), word.begin() + k_);
  return out;
}

}  // namespace chartlink
