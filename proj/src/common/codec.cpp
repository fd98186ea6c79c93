#include "gridtrade/codec.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace gridtrade {

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

void Encoder::length(std::size_t n) {
  if (n > 0xffffffffu)
    throw std::length_error("field too large for canonical encoding");
  for (int shift = 24; shift >= 0; shift -= 8)
    out_.push_back(static_cast<std::uint8_t>((n >> shift) & 0xff));
}

Encoder& Encoder::raw(std::span<const std::uint8_t> data) {
  length(data.size());
  out_.insert(out_.end(), data.begin(), data.end());
  return *this;
}

Encoder& Encoder::u64(std::uint64_t value) {
  length(8);
  for (int shift = 56; shift >= 0; shift -= 8)
    out_.push_back(static_cast<std::uint8_t>((value >> shift) & 0xff));
  return *this;
}

Encoder& Encoder::f64(double value) { return u64(std::bit_cast<std::uint64_t>(value)); }

Encoder& Encoder::flag(bool value) {
  length(1);
  out_.push_back(value ? 1 : 0);
  return *this;
}

Encoder& Encoder::str(std::string_view text) {
  length(text.size());
  out_.insert(out_.end(), text.begin(), text.end());
  return *this;
}

std::span<const std::uint8_t> Decoder::next_any() {
  if (data_.size() - pos_ < 4)
    throw std::runtime_error("truncated length prefix");
  std::size_t n = 0;
  for (int k = 0; k < 4; ++k)
    n = (n << 8) | data_[pos_ + k];
  pos_ += 4;
  if (data_.size() - pos_ < n)
    throw std::runtime_error("truncated field");
  auto field = data_.subspan(pos_, n);
  pos_ += n;
  return field;
}

std::span<const std::uint8_t> Decoder::next(std::size_t expected) {
  auto field = next_any();
  if (field.size() != expected)
    throw std::runtime_error("field has unexpected length");
  return field;
}

Bytes Decoder::raw() {
  auto field = next_any();
  return Bytes(field.begin(), field.end());
}

std::uint64_t Decoder::u64() {
  auto field = next(8);
  std::uint64_t value = 0;
  for (auto b : field)
    value = (value << 8) | b;
  return value;
}

double Decoder::f64() { return std::bit_cast<double>(u64()); }

bool Decoder::flag() {
  auto field = next(1);
  if (field[0] > 1)
    throw std::runtime_error("flag byte out of range");
  return field[0] == 1;
}

std::string Decoder::str() {
  auto field = next_any();
  return std::string(field.begin(), field.end());
}

} // namespace gridtrade
