#pragma once

#include "gridtrade/codec.hpp"
#include "gridtrade/crypto.hpp"
#include "gridtrade/grid/topology.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

namespace gridtrade::apol {

// sigma: resolution 1 keeps the bus id, otherwise floor((bus - 1) / resolution).
std::int64_t quantize_location(grid::BusId bus, int resolution);
// A bus inside segment sigma, used when distances are computed from sigma.
grid::BusId representative_bus(std::int64_t sigma, int resolution);

struct MeterIdentity {
  std::uint64_t serial = 0;
  crypto::KeyPair keys; // CA-issued
  grid::BusId location = 0;
  std::int64_t sigma = 0;
};

struct IssuanceRecord {
  std::uint64_t serial = 0;
  PublicKey key;
};

// Installation-time certificate authority. Keeps <PK, location> privately and
// only ever answers whether a key is genuine.
class CaRegistry {
public:
  explicit CaRegistry(std::uint64_t seed, int resolution = 1);

  MeterIdentity install_meter(grid::BusId location);
  bool is_genuine(const PublicKey& key) const;
  std::size_t size() const;
  int resolution() const noexcept { return resolution_; }
  std::vector<IssuanceRecord> issuance_log() const;

private:
  mutable std::shared_mutex mutex_;
  std::uint64_t seed_;
  int resolution_;
  std::map<PublicKey, grid::BusId> locations_;
  std::vector<IssuanceRecord> log_;
};

inline MeterIdentity install_meter(CaRegistry& ca, grid::BusId location) { return ca.install_meter(location); }

// Uniform choice among `count` registered meters, never the requester.
std::size_t select_verifier(std::size_t count, std::size_t requester, std::mt19937_64& rng);

struct MerklePath {
  std::uint64_t index = 0;
  std::vector<Digest> siblings; // leaf level first
};

Digest merkle_leaf_hash(const PublicKey& key);
Digest merkle_node_hash(const Digest& left, const Digest& right);
Digest merkle_root_from_path(const PublicKey& leaf, const MerklePath& path);

// Fresh anonymous key pairs committed under one root.
class MerkleCommitment {
public:
  MerkleCommitment(std::vector<crypto::KeyPair> leaves);

  std::size_t size() const noexcept { return leaves_.size(); }
  const Digest& root() const noexcept { return levels_.back().front(); }
  const crypto::KeyPair& leaf(std::size_t index) const;
  MerklePath path(std::size_t index) const;

  // Hands out leaves in order; after the last one it starts over and counts
  // the reuse.
  std::size_t next_leaf();
  bool exhausted() const noexcept { return handed_out_ >= leaves_.size(); }
  std::size_t reuse_count() const noexcept {
    return handed_out_ > leaves_.size() ? handed_out_ - leaves_.size() : 0;
  }

private:
  std::vector<crypto::KeyPair> leaves_;
  std::vector<std::vector<Digest>> levels_; // levels_[0] = padded leaf hashes
  std::size_t handed_out_ = 0;
};

MerkleCommitment build_commitment(std::size_t leaf_count, std::uint64_t seed, std::uint64_t owner);

struct CoLRequest {
  Digest t_id;
  Digest mtr;
  std::int64_t sigma = 0;
  PublicKey pk;
  Signature sign;
};

Bytes request_content(const Digest& mtr, std::int64_t sigma, const PublicKey& pk);
Digest request_id(const CoLRequest& req);
CoLRequest request_col(const MeterIdentity& meter, const MerkleCommitment& commit);

struct CoLResponse {
  Signature col;
  PublicKey pk_ver;
  Signature sign_ver;
};

Digest location_digest(const Digest& mtr, std::int64_t sigma);
Digest response_digest(const Signature& col, const PublicKey& pk_ver);

// Throws BadSignature, UnregisteredRequester.
CoLResponse issue_col(const MeterIdentity& verifier, const CoLRequest& req, const CaRegistry& ca);

// The prover's CA key deliberately has no slot here.
struct CoLProof {
  Signature col;
  PublicKey pk_ver;
  Signature sign_ver;
  Digest mtr;
  std::int64_t sigma = 0;
  PublicKey pk_a;
  MerklePath mtl;
  Signature sign_a;
};

// Throws LeafOutOfRange.
CoLProof attach_proof(const MerkleCommitment& commit, const CoLResponse& response, std::int64_t sigma,
                      std::size_t leaf_index, std::span<const std::uint8_t> message);

struct Verdict {
  bool accepted = false;
  int failed_step = 0; // 1 inclusion, 2 message signature, 3 certificate, 4 verifier genuineness
  std::string reason;
  explicit operator bool() const noexcept { return accepted; }
};

Verdict verify_col(const CoLProof& proof, const CaRegistry& ca, std::span<const std::uint8_t> message);

void encode(Encoder& enc, const CoLProof& proof);
Bytes encode(const CoLProof& proof);
CoLProof decode_proof(Decoder& dec);
CoLProof decode_proof(std::span<const std::uint8_t> bytes);
Bytes encode(const CoLRequest& req);

nlohmann::json to_json(const CoLProof& proof);
CoLProof proof_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const CoLRequest& req);

} // namespace gridtrade::apol
