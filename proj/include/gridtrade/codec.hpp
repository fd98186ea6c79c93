#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridtrade {

using Bytes = std::vector<std::uint8_t>;

template <std::size_t N, class Tag>
struct FixedBytes {
  std::array<std::uint8_t, N> bytes{};

  static constexpr std::size_t size() noexcept { return N; }
  std::span<const std::uint8_t> view() const noexcept { return bytes; }
  auto operator<=>(const FixedBytes&) const = default;
};

struct DigestTag {};
struct PublicKeyTag {};
struct SignatureTag {};

using Digest = FixedBytes<32, DigestTag>;
using PublicKey = FixedBytes<32, PublicKeyTag>;
using Signature = FixedBytes<64, SignatureTag>;

std::string to_hex(std::span<const std::uint8_t> data);

// Canonical binary encoding: every field is written in declaration order,
// prefixed by its byte length as a 4-byte big-endian integer. Integers are
// 8-byte big-endian, reals are IEEE-754 binary64 bit patterns (big-endian),
// flags are a single byte.
class Encoder {
public:
  Encoder& raw(std::span<const std::uint8_t> data);
  Encoder& u64(std::uint64_t value);
  Encoder& i64(std::int64_t value) { return u64(static_cast<std::uint64_t>(value)); }
  Encoder& f64(double value);
  Encoder& flag(bool value);
  Encoder& str(std::string_view text);
  template <std::size_t N, class Tag>
  Encoder& fixed(const FixedBytes<N, Tag>& value) { return raw(value.view()); }

  const Bytes& bytes() const& noexcept { return out_; }
  Bytes bytes() && noexcept { return std::move(out_); }

private:
  void length(std::size_t n);
  Bytes out_;
};

// Reads back what Encoder wrote. Throws std::runtime_error on truncated or
// malformed input.
class Decoder {
public:
  explicit Decoder(std::span<const std::uint8_t> data) : data_(data) {}

  Bytes raw();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  bool flag();
  std::string str();
  template <class T>
  T fixed() {
    T value;
    auto field = next(T::size());
    std::copy(field.begin(), field.end(), value.bytes.begin());
    return value;
  }

  bool done() const noexcept { return pos_ == data_.size(); }

private:
  std::span<const std::uint8_t> next(std::size_t expected);
  std::span<const std::uint8_t> next_any();
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

} // namespace gridtrade
