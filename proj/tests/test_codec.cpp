#include "gridtrade/codec.hpp"
#include "gridtrade/crypto.hpp"

#include <doctest.h>

using namespace gridtrade;

TEST_CASE("length-prefixed fields are big-endian") {
  Encoder enc;
  enc.u64(0x0102030405060708ull).flag(true).str("ab");
  const Bytes expect{0, 0, 0, 8, 1, 2, 3, 4, 5, 6, 7, 8, 0, 0, 0, 1, 1, 0, 0, 0, 2, 'a', 'b'};
  CHECK(enc.bytes() == expect);

  Decoder dec(enc.bytes());
  CHECK(dec.u64() == 0x0102030405060708ull);
  CHECK(dec.flag());
  CHECK(dec.str() == "ab");
  CHECK(dec.done());
}

TEST_CASE("decoder rejects truncation") {
  Encoder enc;
  enc.f64(1.5);
  auto bytes = enc.bytes();
  bytes.pop_back();
  Decoder dec(bytes);
  CHECK_THROWS(dec.f64());
}

TEST_CASE("reals round-trip bit-exactly") {
  Encoder enc;
  enc.f64(-0.1).f64(1e300);
  Decoder dec(enc.bytes());
  CHECK(dec.f64() == -0.1);
  CHECK(dec.f64() == 1e300);
}

TEST_CASE("sha256 known answer") {
  const std::string abc = "abc";
  auto d = crypto::sha256(std::span(reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size()));
  CHECK(to_hex(d.view()) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("derived keys are deterministic and distinct") {
  auto a = crypto::derive_keypair(7, "meter", 0);
  auto b = crypto::derive_keypair(7, "meter", 0);
  auto c = crypto::derive_keypair(7, "meter", 1);
  CHECK(a.public_key == b.public_key);
  CHECK(a.public_key != c.public_key);

  const Bytes msg{1, 2, 3};
  auto sig = crypto::sign(a.secret_key, msg);
  CHECK(crypto::verify(a.public_key, msg, sig));
  CHECK_FALSE(crypto::verify(c.public_key, msg, sig));
  auto tampered = msg;
  tampered[0] ^= 1;
  CHECK_FALSE(crypto::verify(a.public_key, tampered, sig));
}

TEST_CASE("base64 round trip") {
  const Bytes data{0, 255, 16, 32, 7};
  auto text = crypto::base64_encode(data);
  auto back = crypto::base64_decode(text);
  REQUIRE(back.has_value());
  CHECK(*back == data);
  CHECK_FALSE(crypto::base64_decode("@@@").has_value());
}
