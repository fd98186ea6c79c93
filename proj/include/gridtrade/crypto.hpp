#pragma once

#include "gridtrade/codec.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace gridtrade::crypto {

// Primitive choices, surfaced in report metadata.
inline constexpr std::string_view kHashName = "SHA-256";
inline constexpr std::string_view kSignatureName = "Ed25519";

Digest sha256(std::span<const std::uint8_t> data);
inline Digest sha256(const Encoder& enc) { return sha256(enc.bytes()); }

struct SecretKey {
  std::array<std::uint8_t, 64> bytes{};
};

struct KeyPair {
  PublicKey public_key;
  SecretKey secret_key;
};

// Deterministic key material: the 32-byte seed is SHA-256 over
// (master_seed, label, index), so every run with the same seed reproduces
// the same keys.
KeyPair derive_keypair(std::uint64_t master_seed, std::string_view label, std::uint64_t index);

Signature sign(const SecretKey& key, std::span<const std::uint8_t> message);
inline Signature sign(const SecretKey& key, const Digest& digest) { return sign(key, digest.view()); }

bool verify(const PublicKey& key, std::span<const std::uint8_t> message, const Signature& sig);
inline bool verify(const PublicKey& key, const Digest& digest, const Signature& sig) {
  return verify(key, digest.view(), sig);
}

std::string base64_encode(std::span<const std::uint8_t> data);
std::optional<Bytes> base64_decode(std::string_view text);

template <class T>
std::optional<T> base64_fixed(std::string_view text) {
  auto raw = base64_decode(text);
  if (!raw || raw->size() != T::size())
    return std::nullopt;
  T out;
  std::copy(raw->begin(), raw->end(), out.bytes.begin());
  return out;
}

} // namespace gridtrade::crypto
