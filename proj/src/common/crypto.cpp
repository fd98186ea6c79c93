#include "gridtrade/crypto.hpp"

#include <sodium.h>

#include <stdexcept>

namespace gridtrade::crypto {
namespace {

void ensure_init() {
  static const bool ok = [] { return sodium_init() >= 0; }();
  if (!ok)
    throw std::runtime_error("libsodium initialisation failed");
}

} // namespace

Digest sha256(std::span<const std::uint8_t> data) {
  ensure_init();
  Digest out;
  crypto_hash_sha256(out.bytes.data(), data.data(), data.size());
  return out;
}

KeyPair derive_keypair(std::uint64_t master_seed, std::string_view label, std::uint64_t index) {
  ensure_init();
  Encoder enc;
  enc.str("gridtrade-key").u64(master_seed).str(label).u64(index);
  auto seed = sha256(enc);
  KeyPair kp;
  crypto_sign_ed25519_seed_keypair(kp.public_key.bytes.data(), kp.secret_key.bytes.data(),
                                   seed.bytes.data());
  return kp;
}

Signature sign(const SecretKey& key, std::span<const std::uint8_t> message) {
  ensure_init();
  Signature sig;
  crypto_sign_ed25519_detached(sig.bytes.data(), nullptr, message.data(), message.size(),
                               key.bytes.data());
  return sig;
}

bool verify(const PublicKey& key, std::span<const std::uint8_t> message, const Signature& sig) {
  ensure_init();
  return crypto_sign_ed25519_verify_detached(sig.bytes.data(), message.data(), message.size(),
                                             key.bytes.data()) == 0;
}

std::string base64_encode(std::span<const std::uint8_t> data) {
  ensure_init();
  constexpr int variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_ENCODED_LEN(data.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), data.data(), data.size(), variant);
  out.resize(out.find('\0'));
  return out;
}

std::optional<Bytes> base64_decode(std::string_view text) {
  ensure_init();
  Bytes out(text.size() * 3 / 4 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0)
    return std::nullopt;
  out.resize(len);
  return out;
}

} // namespace gridtrade::crypto
