#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace chartlink {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class PayloadTooLong : public Error {
 public:
  using Error::Error;
};

class FramingError : public Error {
 public:
  using Error::Error;
};

/// BCH decoding failed. Carries the uncorrected bits for best-effort inspection.
class EccFailure : public Error {
 public:
  EccFailure(const std::string& what, std::vector<uint8_t> raw_bits = {})
      : Error(what), raw_bits_(std::move(raw_bits)) {}
  const std::vector<uint8_t>& raw_bits() const noexcept { return raw_bits_; }

 private:
  std::vector<uint8_t> raw_bits_;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class UnreadableImage : public Error {
 public:
  using Error::Error;
};

class Divergence : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace chartlink
