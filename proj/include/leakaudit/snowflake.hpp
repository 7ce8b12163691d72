#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "common.hpp"

namespace leakaudit {

/// Parses a plain decimal string (digits only, no sign, no whitespace) into
/// a 64-bit unsigned value. Leading zeros are accepted here; canonical-form
/// checks belong to id validation.
inline std::optional<std::uint64_t> parse_u64(std::string_view text) noexcept {
  if (text.empty()) return std::nullopt;
  for (char c : text) {
    if (c < '0' || c > '9') return std::nullopt;
  }
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

namespace snowflake {

/// Bit layout of a snowflake id: | timestamp | worker | sequence |.
/// Defaults are Twitter's.
struct Constants {
  std::int64_t epoch_ms = 1288834974657;
  unsigned worker_bits = 10;
  unsigned sequence_bits = 12;
  // Latest accepted decode, 2100-01-01T00:00:00Z.
  std::int64_t max_timestamp_ms = 4102444800000;

  constexpr unsigned timestamp_shift() const noexcept { return worker_bits + sequence_bits; }
};

inline constexpr Constants kTwitter{};

struct Parts {
  std::int64_t timestamp_ms;
  std::uint64_t worker;
  std::uint64_t sequence;
};

enum class DecodeStatus { Ok, PreSnowflake };

/// Decodes an already-parsed id. Ids whose timestamp field is zero or whose
/// decoded time leaves [epoch, max_timestamp_ms] are pre-snowflake.
constexpr std::pair<DecodeStatus, std::int64_t> try_decode(
    std::uint64_t id, const Constants& c = kTwitter) noexcept {
  const std::uint64_t field = id >> c.timestamp_shift();
  if (field == 0) return {DecodeStatus::PreSnowflake, 0};
  if (field > static_cast<std::uint64_t>(c.max_timestamp_ms - c.epoch_ms)) {
    return {DecodeStatus::PreSnowflake, 0};
  }
  return {DecodeStatus::Ok, static_cast<std::int64_t>(field) + c.epoch_ms};
}

/// Milliseconds since the Unix epoch encoded in `id`.
/// Throws Error{Parse} for non-numeric input, Error{PreSnowflakeId} outside
/// the sanity window.
inline std::int64_t decode_timestamp(std::string_view id, const Constants& c = kTwitter) {
  const auto value = parse_u64(id);
  if (!value) throw Error(ErrorKind::Parse, "not an unsigned 64-bit decimal: '" + std::string(id) + "'");
  const auto [status, ms] = try_decode(*value, c);
  if (status != DecodeStatus::Ok) {
    throw Error(ErrorKind::PreSnowflakeId, "id " + std::string(id) + " predates snowflake encoding");
  }
  return ms;
}

/// Optional-returning variant for bulk paths; nullopt on parse failure or
/// pre-snowflake ids.
inline std::optional<std::int64_t> timestamp_or_null(std::string_view id,
                                                     const Constants& c = kTwitter) noexcept {
  const auto value = parse_u64(id);
  if (!value) return std::nullopt;
  const auto [status, ms] = try_decode(*value, c);
  if (status != DecodeStatus::Ok) return std::nullopt;
  return ms;
}

// Debug helper; the audits only use the timestamp.
inline Parts decode_parts(std::string_view id, const Constants& c = kTwitter) {
  const auto value = parse_u64(id);
  if (!value) throw Error(ErrorKind::Parse, "not an unsigned 64-bit decimal: '" + std::string(id) + "'");
  const std::uint64_t seq_mask = (std::uint64_t{1} << c.sequence_bits) - 1;
  const std::uint64_t worker_mask = (std::uint64_t{1} << c.worker_bits) - 1;
  return Parts{decode_timestamp(id, c), (*value >> c.sequence_bits) & worker_mask, *value & seq_mask};
}

/// Inverse of the timestamp decode with zero worker/sequence fields. Handy for
/// building fixtures.
constexpr std::uint64_t make_id(std::int64_t timestamp_ms, std::uint64_t low_bits = 0,
                                const Constants& c = kTwitter) noexcept {
  const auto field = static_cast<std::uint64_t>(timestamp_ms - c.epoch_ms);
  const std::uint64_t low_mask = (std::uint64_t{1} << c.timestamp_shift()) - 1;
  return (field << c.timestamp_shift()) | (low_bits & low_mask);
}

}  // namespace snowflake

/// Leading decimal digits of an id.
struct DigitPrefix {
  std::vector<int> digits;

  std::size_t k() const noexcept { return digits.size(); }
  bool operator==(const DigitPrefix&) const = default;
};

/// First `k` digits of the canonical decimal rendering of `id`.
/// Throws Error{TooShort} when the id has fewer than k digits.
inline DigitPrefix prefix_digits(std::string_view id, std::size_t k) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "prefix length must be >= 1");
  const auto value = parse_u64(id);
  if (!value) throw Error(ErrorKind::Parse, "not an unsigned 64-bit decimal: '" + std::string(id) + "'");
  const std::string canonical = std::to_string(*value);
  if (canonical.size() < k) {
    throw Error(ErrorKind::TooShort,
                "id " + canonical + " has " + std::to_string(canonical.size()) + " digits, need " + std::to_string(k));
  }
  DigitPrefix out;
  out.digits.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.digits.push_back(canonical[i] - '0');
  return out;
}

}  // namespace leakaudit
