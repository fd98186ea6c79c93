#include "gridtrade/apol/apol.hpp"
#include "gridtrade/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace gridtrade;
using namespace gridtrade::apol;

namespace {

const Bytes kMessage{'o', 'f', 'f', 'e', 'r', ' ', '1', '5'};

// Straight from the node rules, without the library's tree code.
Digest recompute_root(const std::vector<PublicKey>& keys) {
  std::vector<Digest> level;
  for (const auto& k : keys) {
    Bytes b{0x00};
    b.insert(b.end(), k.bytes.begin(), k.bytes.end());
    level.push_back(crypto::sha256(b));
  }
  while (level.size() > 1) {
    if (level.size() % 2)
      level.push_back(level.back());
    std::vector<Digest> up;
    for (std::size_t i = 0; i < level.size(); i += 2) {
      Bytes b{0x01};
      b.insert(b.end(), level[i].bytes.begin(), level[i].bytes.end());
      b.insert(b.end(), level[i + 1].bytes.begin(), level[i + 1].bytes.end());
      up.push_back(crypto::sha256(b));
    }
    level = up;
  }
  return level.front();
}

struct World {
  CaRegistry ca{42};
  MeterIdentity prover = ca.install_meter(7);
  MeterIdentity verifier = ca.install_meter(12);
};

} // namespace

TEST_CASE("meter installation") {
  CaRegistry ca(1);
  auto a = ca.install_meter(7);
  auto b = ca.install_meter(7);
  CHECK(a.sigma == 7);
  CHECK(a.keys.public_key != b.keys.public_key);
  CHECK(ca.is_genuine(a.keys.public_key));
  CHECK(ca.size() == 2);
  CHECK(ca.issuance_log().size() == 2);

  CaRegistry coarse(1, 4);
  CHECK(coarse.install_meter(7).sigma == 1);
  CHECK(representative_bus(1, 4) == 5);
  CHECK(quantize_location(representative_bus(3, 4), 4) == 3);
}

TEST_CASE("verifier selection skips the requester") {
  std::mt19937_64 rng(3);
  std::set<std::size_t> seen;
  for (int k = 0; k < 200; ++k) {
    auto v = select_verifier(5, 2, rng);
    CHECK(v != 2);
    CHECK(v < 5);
    seen.insert(v);
  }
  CHECK(seen.size() == 4);
}

TEST_CASE("Merkle commitments") {
  auto one = build_commitment(1, 9, 0);
  CHECK(one.path(0).siblings.empty());
  CHECK(one.root() == merkle_leaf_hash(one.leaf(0).public_key));

  auto two = build_commitment(2, 9, 0);
  CHECK(two.root() == merkle_node_hash(merkle_leaf_hash(two.leaf(0).public_key),
                                       merkle_leaf_hash(two.leaf(1).public_key)));

  for (std::size_t m : {1u, 2u, 3u, 5u, 8u, 16u}) {
    auto c = build_commitment(m, 9, 1);
    std::vector<PublicKey> keys;
    for (std::size_t i = 0; i < m; ++i)
      keys.push_back(c.leaf(i).public_key);
    CHECK(c.root() == recompute_root(keys));
    std::size_t depth = 0;
    while ((std::size_t{1} << depth) < m)
      ++depth;
    for (std::size_t i = 0; i < m; ++i) {
      auto p = c.path(i);
      CHECK(p.siblings.size() == depth);
      CHECK(merkle_root_from_path(c.leaf(i).public_key, p) == c.root());
    }
  }
  CHECK(build_commitment(8, 9, 1).root() == build_commitment(8, 9, 1).root());
  CHECK(build_commitment(8, 9, 1).root() != build_commitment(8, 9, 2).root());
  CHECK_THROWS_AS(build_commitment(4, 9, 1).leaf(4), Error);
}

TEST_CASE("leaf hand-out wraps and flags reuse") {
  auto c = build_commitment(2, 1, 1);
  CHECK(c.next_leaf() == 0);
  CHECK_FALSE(c.exhausted());
  CHECK(c.next_leaf() == 1);
  CHECK(c.exhausted());
  CHECK(c.reuse_count() == 0);
  CHECK(c.next_leaf() == 0);
  CHECK(c.reuse_count() == 1);
}

TEST_CASE("CoL request") {
  World w;
  auto commit = build_commitment(8, 5, w.prover.serial);
  auto req = request_col(w.prover, commit);
  CHECK(crypto::verify(req.pk, request_content(req.mtr, req.sigma, req.pk), req.sign));
  CHECK(request_id(req) == req.t_id);
  CHECK(request_col(w.prover, commit).t_id == req.t_id);

  auto tampered = req;
  tampered.sigma += 1;
  CHECK_FALSE(crypto::verify(tampered.pk, request_content(tampered.mtr, tampered.sigma, tampered.pk),
                             tampered.sign));
}

TEST_CASE("CoL issuance") {
  World w;
  auto commit = build_commitment(8, 5, w.prover.serial);
  auto req = request_col(w.prover, commit);
  auto resp = issue_col(w.verifier, req, w.ca);
  CHECK(resp.pk_ver == w.verifier.keys.public_key);
  CHECK(crypto::verify(resp.pk_ver, location_digest(req.mtr, req.sigma), resp.col));

  auto outsider_keys = crypto::derive_keypair(77, "outsider", 0);
  MeterIdentity outsider{99, outsider_keys, 7, 7};
  try {
    issue_col(w.verifier, request_col(outsider, commit), w.ca);
    FAIL("expected UnregisteredRequester");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnregisteredRequester);
  }

  auto moved = req;
  moved.mtr.bytes[0] ^= 0xff;
  try {
    issue_col(w.verifier, moved, w.ca);
    FAIL("expected BadSignature");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadSignature);
  }
}

TEST_CASE("proofs verify and attacks fail at the documented step") {
  World w;
  auto commit = build_commitment(8, 5, w.prover.serial);
  auto resp = issue_col(w.verifier, request_col(w.prover, commit), w.ca);

  auto p0 = attach_proof(commit, resp, w.prover.sigma, 0, kMessage);
  auto p3 = attach_proof(commit, resp, w.prover.sigma, 3, kMessage);
  CHECK(verify_col(p0, w.ca, kMessage).accepted);
  CHECK(verify_col(p3, w.ca, kMessage).accepted);
  CHECK(p0.pk_a != p3.pk_a);
  CHECK_THROWS_AS(attach_proof(commit, resp, w.prover.sigma, 8, kMessage), Error);

  // replay with a foreign key
  auto foreign = crypto::derive_keypair(5, "thief", 0);
  auto replay = p0;
  replay.pk_a = foreign.public_key;
  replay.sign_a = crypto::sign(foreign.secret_key, kMessage);
  CHECK(verify_col(replay, w.ca, kMessage).failed_step == 1);

  // wrong message
  Bytes other = kMessage;
  other.back() = '9';
  CHECK(verify_col(p0, w.ca, other).failed_step == 2);

  auto moved = p0;
  moved.sigma = 30;
  CHECK(verify_col(moved, w.ca, kMessage).failed_step == 3);

  // verifier key never registered, certificate otherwise well formed
  auto fake = crypto::derive_keypair(5, "fake-verifier", 0);
  MeterIdentity fake_meter{100, fake, 3, 3};
  auto fake_resp = issue_col(fake_meter, request_col(w.prover, commit), w.ca);
  auto forged = attach_proof(commit, fake_resp, w.prover.sigma, 1, kMessage);
  auto verdict = verify_col(forged, w.ca, kMessage);
  CHECK(verdict.failed_step == 4);
  CHECK_FALSE(verdict.accepted);
}

TEST_CASE("every single-byte flip of a serialized proof is rejected") {
  World w;
  auto commit = build_commitment(4, 5, w.prover.serial);
  auto resp = issue_col(w.verifier, request_col(w.prover, commit), w.ca);
  auto proof = attach_proof(commit, resp, w.prover.sigma, 2, kMessage);
  auto bytes = encode(proof);
  CHECK(decode_proof(bytes).pk_a == proof.pk_a);
  std::size_t rejected = 0;
  for (std::size_t pos = 0; pos < bytes.size(); ++pos) {
    auto copy = bytes;
    copy[pos] ^= 0x01;
    bool ok = false;
    try {
      ok = verify_col(decode_proof(copy), w.ca, kMessage).accepted;
    } catch (const std::exception&) {
      ok = false;
    }
    rejected += ok ? 0 : 1;
  }
  CHECK(rejected == bytes.size());
}

TEST_CASE("the prover's CA key never appears in a proof") {
  World w;
  auto commit = build_commitment(8, 5, w.prover.serial);
  auto resp = issue_col(w.verifier, request_col(w.prover, commit), w.ca);
  auto bytes = encode(attach_proof(commit, resp, w.prover.sigma, 5, kMessage));
  const auto& pk = w.prover.keys.public_key.bytes;
  CHECK(std::search(bytes.begin(), bytes.end(), pk.begin(), pk.end()) == bytes.end());
}

TEST_CASE("json dump round trip") {
  World w;
  auto commit = build_commitment(8, 5, w.prover.serial);
  auto resp = issue_col(w.verifier, request_col(w.prover, commit), w.ca);
  auto proof = attach_proof(commit, resp, w.prover.sigma, 6, kMessage);
  auto back = proof_from_json(nlohmann::json::parse(to_json(proof).dump()));
  CHECK(encode(back) == encode(proof));
  CHECK(to_json(request_col(w.prover, commit)).contains("t_id"));
}
