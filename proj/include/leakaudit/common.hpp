#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace leakaudit {

inline constexpr std::string_view kToolkitVersion = "0.3.0";

enum class ErrorKind {
  Io,
  Parse,
  Schema,
  DuplicateId,
  UnknownLabel,
  InvalidId,
  PreSnowflakeId,
  TooShort,
  EmptyInput,
  RaggedRows,
  WidthMismatch,
  EmptyDistribution,
  EmptySplit,
  AllIdsTooShort,
  EmptyDataset,
  RatioError,
  MissingGroupField,
  UnknownEvent,
  InsufficientRecords,
  EmptyPool,
  NoAnchorRecords,
  InvalidArgument,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::InvalidId: return "InvalidId";
    case ErrorKind::PreSnowflakeId: return "PreSnowflakeId";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::WidthMismatch: return "WidthMismatch";
    case ErrorKind::EmptyDistribution: return "EmptyDistribution";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::AllIdsTooShort: return "AllIdsTooShort";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::RatioError: return "RatioError";
    case ErrorKind::MissingGroupField: return "MissingGroupField";
    case ErrorKind::UnknownEvent: return "UnknownEvent";
    case ErrorKind::InsufficientRecords: return "InsufficientRecords";
    case ErrorKind::EmptyPool: return "EmptyPool";
    case ErrorKind::NoAnchorRecords: return "NoAnchorRecords";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Error";
}

/// Every failure raised by the toolkit. `kind()` is stable and meant for
/// programmatic dispatch; `what()` is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// SplitMix64 finalizer. Used to derive independent seeds from (seed, index).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return seed ^ mix64(stream);
}

/// xoshiro256** seeded through SplitMix64. Fully specified so that results
/// are identical across standard libraries (unlike std::*_distribution).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = s;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform integer in [0, bound). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    std::uint64_t x = next();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = next();
        m = static_cast<unsigned __int128>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename It>
  void shuffle(It first, It last) noexcept {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4]{};
};

}  // namespace leakaudit
