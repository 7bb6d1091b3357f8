#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bornholo {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class SamplingViolation : public Error { using Error::Error; };
class NonPositiveDimension : public Error { using Error::Error; };
class InvalidNA : public Error { using Error::Error; };
class DimensionMismatch : public Error { using Error::Error; };
class ZeroIncidentField : public Error { using Error::Error; };
class PackingFailure : public Error { using Error::Error; };
class DegenerateTruth : public Error { using Error::Error; };
class ZeroMeanHologram : public Error { using Error::Error; };
class GridTooLarge : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

/// Raised when a large buffer (kernels, cached fields) cannot be allocated.
class AllocationFailure : public Error {
public:
  explicit AllocationFailure(std::size_t bytes)
      : Error("allocation of " + std::to_string(bytes) + " bytes failed"),
        bytes_(bytes) {}
  std::size_t requested_bytes() const noexcept { return bytes_; }

private:
  std::size_t bytes_;
};

} // namespace bornholo
