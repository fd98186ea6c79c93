#include "gridtrade/apol/apol.hpp"

#include "gridtrade/error.hpp"

#include <bit>
#include <mutex>
#include <stdexcept>

namespace gridtrade::apol {
namespace {

Digest hash_tagged(std::uint8_t tag, std::span<const std::uint8_t> a, std::span<const std::uint8_t> b = {}) {
  Bytes buf;
  buf.reserve(1 + a.size() + b.size());
  buf.push_back(tag);
  buf.insert(buf.end(), a.begin(), a.end());
  buf.insert(buf.end(), b.begin(), b.end());
  return crypto::sha256(buf);
}

Verdict reject(int step, std::string reason) { return {false, step, std::move(reason)}; }

template <class T>
T fixed_from_json(const nlohmann::json& doc, const char* key) {
  auto value = crypto::base64_fixed<T>(doc.at(key).get<std::string>());
  if (!value)
    throw std::runtime_error(std::string("bad base64 field ") + key);
  return *value;
}

} // namespace

std::int64_t quantize_location(grid::BusId bus, int resolution) {
  if (resolution < 1)
    throw Error(Errc::InvalidParameter, "location resolution must be >= 1");
  if (resolution == 1)
    return bus;
  return (bus - 1) / resolution;
}

grid::BusId representative_bus(std::int64_t sigma, int resolution) {
  if (resolution <= 1)
    return static_cast<grid::BusId>(sigma);
  return static_cast<grid::BusId>(sigma * resolution + 1);
}

CaRegistry::CaRegistry(std::uint64_t seed, int resolution) : seed_(seed), resolution_(resolution) {
  if (resolution < 1)
    throw Error(Errc::InvalidParameter, "location resolution must be >= 1");
}

MeterIdentity CaRegistry::install_meter(grid::BusId location) {
  std::unique_lock lock(mutex_);
  MeterIdentity m;
  m.serial = log_.size();
  m.keys = crypto::derive_keypair(seed_, "meter", m.serial);
  m.location = location;
  m.sigma = quantize_location(location, resolution_);
  locations_.emplace(m.keys.public_key, location);
  log_.push_back({m.serial, m.keys.public_key});
  return m;
}

bool CaRegistry::is_genuine(const PublicKey& key) const {
  std::shared_lock lock(mutex_);
  return locations_.contains(key);
}

std::size_t CaRegistry::size() const {
  std::shared_lock lock(mutex_);
  return locations_.size();
}

std::vector<IssuanceRecord> CaRegistry::issuance_log() const {
  std::shared_lock lock(mutex_);
  return log_;
}

std::size_t select_verifier(std::size_t count, std::size_t requester, std::mt19937_64& rng) {
  if (count < 2)
    throw Error(Errc::InvalidParameter, "need at least one meter besides the requester");
  std::uniform_int_distribution<std::size_t> pick(0, count - 2);
  auto k = pick(rng);
  return k >= requester ? k + 1 : k;
}

Digest merkle_leaf_hash(const PublicKey& key) { return hash_tagged(0x00, key.view()); }

Digest merkle_node_hash(const Digest& left, const Digest& right) {
  return hash_tagged(0x01, left.view(), right.view());
}

Digest merkle_root_from_path(const PublicKey& leaf, const MerklePath& path) {
  auto node = merkle_leaf_hash(leaf);
  auto index = path.index;
  for (const auto& sib : path.siblings) {
    node = (index & 1u) ? merkle_node_hash(sib, node) : merkle_node_hash(node, sib);
    index >>= 1;
  }
  return node;
}

MerkleCommitment::MerkleCommitment(std::vector<crypto::KeyPair> leaves) : leaves_(std::move(leaves)) {
  if (leaves_.empty())
    throw Error(Errc::InvalidParameter, "a commitment needs at least one leaf");
  std::vector<Digest> level;
  for (const auto& kp : leaves_)
    level.push_back(merkle_leaf_hash(kp.public_key));
  const auto width = std::bit_ceil(level.size());
  while (level.size() < width)
    level.push_back(level.back());
  levels_.push_back(level);
  while (levels_.back().size() > 1) {
    const auto& below = levels_.back();
    std::vector<Digest> up;
    for (std::size_t k = 0; k < below.size(); k += 2)
      up.push_back(merkle_node_hash(below[k], below[k + 1]));
    levels_.push_back(std::move(up));
  }
}

const crypto::KeyPair& MerkleCommitment::leaf(std::size_t index) const {
  if (index >= leaves_.size())
    throw Error(Errc::LeafOutOfRange, "leaf " + std::to_string(index) + " of " + std::to_string(leaves_.size()));
  return leaves_[index];
}

MerklePath MerkleCommitment::path(std::size_t index) const {
  leaf(index);
  MerklePath p;
  p.index = index;
  auto pos = index;
  for (std::size_t lvl = 0; lvl + 1 < levels_.size(); ++lvl) {
    p.siblings.push_back(levels_[lvl][pos ^ 1u]);
    pos >>= 1;
  }
  return p;
}

std::size_t MerkleCommitment::next_leaf() { return handed_out_++ % leaves_.size(); }

MerkleCommitment build_commitment(std::size_t leaf_count, std::uint64_t seed, std::uint64_t owner) {
  if (leaf_count == 0)
    throw Error(Errc::InvalidParameter, "a commitment needs at least one leaf");
  std::vector<crypto::KeyPair> leaves;
  const auto label = "leaf/" + std::to_string(owner);
  for (std::size_t k = 0; k < leaf_count; ++k)
    leaves.push_back(crypto::derive_keypair(seed, label, k));
  return MerkleCommitment(std::move(leaves));
}

Bytes request_content(const Digest& mtr, std::int64_t sigma, const PublicKey& pk) {
  Encoder enc;
  enc.fixed(mtr).i64(sigma).fixed(pk);
  return std::move(enc).bytes();
}

Digest request_id(const CoLRequest& req) {
  Encoder enc;
  enc.fixed(req.mtr).i64(req.sigma).fixed(req.pk).fixed(req.sign);
  return crypto::sha256(enc);
}

CoLRequest request_col(const MeterIdentity& meter, const MerkleCommitment& commit) {
  CoLRequest req;
  req.mtr = commit.root();
  req.sigma = meter.sigma;
  req.pk = meter.keys.public_key;
  req.sign = crypto::sign(meter.keys.secret_key, request_content(req.mtr, req.sigma, req.pk));
  req.t_id = request_id(req);
  return req;
}

Digest location_digest(const Digest& mtr, std::int64_t sigma) {
  Encoder enc;
  enc.fixed(mtr).i64(sigma);
  return crypto::sha256(enc);
}

Digest response_digest(const Signature& col, const PublicKey& pk_ver) {
  Encoder enc;
  enc.fixed(col).fixed(pk_ver);
  return crypto::sha256(enc);
}

CoLResponse issue_col(const MeterIdentity& verifier, const CoLRequest& req, const CaRegistry& ca) {
  if (!crypto::verify(req.pk, request_content(req.mtr, req.sigma, req.pk), req.sign) ||
      request_id(req) != req.t_id)
    throw Error(Errc::BadSignature, "CoL request does not verify under its key");
  if (!ca.is_genuine(req.pk))
    throw Error(Errc::UnregisteredRequester, "CA does not know the requesting key");
  CoLResponse resp;
  resp.col = crypto::sign(verifier.keys.secret_key, location_digest(req.mtr, req.sigma));
  resp.pk_ver = verifier.keys.public_key;
  resp.sign_ver = crypto::sign(verifier.keys.secret_key, response_digest(resp.col, resp.pk_ver));
  return resp;
}

CoLProof attach_proof(const MerkleCommitment& commit, const CoLResponse& response, std::int64_t sigma,
                      std::size_t leaf_index, std::span<const std::uint8_t> message) {
  const auto& kp = commit.leaf(leaf_index);
  CoLProof p;
  p.col = response.col;
  p.pk_ver = response.pk_ver;
  p.sign_ver = response.sign_ver;
  p.mtr = commit.root();
  p.sigma = sigma;
  p.pk_a = kp.public_key;
  p.mtl = commit.path(leaf_index);
  p.sign_a = crypto::sign(kp.secret_key, message);
  return p;
}

Verdict verify_col(const CoLProof& p, const CaRegistry& ca, std::span<const std::uint8_t> message) {
  if (p.mtl.siblings.size() >= 64 || p.mtl.index >= (std::uint64_t{1} << p.mtl.siblings.size()) ||
      merkle_root_from_path(p.pk_a, p.mtl) != p.mtr)
    return reject(1, "PK_A is not a leaf of MTR");
  if (!crypto::verify(p.pk_a, message, p.sign_a))
    return reject(2, "message signature does not verify under PK_A");
  if (!crypto::verify(p.pk_ver, location_digest(p.mtr, p.sigma), p.col) ||
      !crypto::verify(p.pk_ver, response_digest(p.col, p.pk_ver), p.sign_ver))
    return reject(3, "CoL does not certify (MTR, sigma) under PK_ver");
  if (!ca.is_genuine(p.pk_ver))
    return reject(4, "PK_ver is not registered with the CA");
  return {true, 0, "ok"};
}

void encode(Encoder& enc, const CoLProof& p) {
  enc.fixed(p.col).fixed(p.pk_ver).fixed(p.sign_ver).fixed(p.mtr).i64(p.sigma).fixed(p.pk_a);
  enc.u64(p.mtl.index).u64(p.mtl.siblings.size());
  for (const auto& s : p.mtl.siblings)
    enc.fixed(s);
  enc.fixed(p.sign_a);
}

Bytes encode(const CoLProof& proof) {
  Encoder enc;
  encode(enc, proof);
  return std::move(enc).bytes();
}

CoLProof decode_proof(Decoder& dec) {
  CoLProof p;
  p.col = dec.fixed<Signature>();
  p.pk_ver = dec.fixed<PublicKey>();
  p.sign_ver = dec.fixed<Signature>();
  p.mtr = dec.fixed<Digest>();
  p.sigma = dec.i64();
  p.pk_a = dec.fixed<PublicKey>();
  p.mtl.index = dec.u64();
  const auto n = dec.u64();
  if (n >= 64)
    throw std::runtime_error("Merkle path too long");
  for (std::uint64_t k = 0; k < n; ++k)
    p.mtl.siblings.push_back(dec.fixed<Digest>());
  p.sign_a = dec.fixed<Signature>();
  return p;
}

CoLProof decode_proof(std::span<const std::uint8_t> bytes) {
  Decoder dec(bytes);
  auto p = decode_proof(dec);
  if (!dec.done())
    throw std::runtime_error("trailing bytes after CoL proof");
  return p;
}

Bytes encode(const CoLRequest& req) {
  Encoder enc;
  enc.fixed(req.t_id).fixed(req.mtr).i64(req.sigma).fixed(req.pk).fixed(req.sign);
  return std::move(enc).bytes();
}

nlohmann::json to_json(const CoLProof& p) {
  nlohmann::json siblings = nlohmann::json::array();
  for (const auto& s : p.mtl.siblings)
    siblings.push_back(crypto::base64_encode(s.view()));
  return {{"col", crypto::base64_encode(p.col.view())},
          {"pk_ver", crypto::base64_encode(p.pk_ver.view())},
          {"sign_ver", crypto::base64_encode(p.sign_ver.view())},
          {"mtr", crypto::base64_encode(p.mtr.view())},
          {"sigma", p.sigma},
          {"pk_a", crypto::base64_encode(p.pk_a.view())},
          {"mtl", {{"index", p.mtl.index}, {"siblings", siblings}}},
          {"sign_a", crypto::base64_encode(p.sign_a.view())}};
}

CoLProof proof_from_json(const nlohmann::json& doc) {
  CoLProof p;
  p.col = fixed_from_json<Signature>(doc, "col");
  p.pk_ver = fixed_from_json<PublicKey>(doc, "pk_ver");
  p.sign_ver = fixed_from_json<Signature>(doc, "sign_ver");
  p.mtr = fixed_from_json<Digest>(doc, "mtr");
  p.sigma = doc.at("sigma").get<std::int64_t>();
  p.pk_a = fixed_from_json<PublicKey>(doc, "pk_a");
  const auto& mtl = doc.at("mtl");
  p.mtl.index = mtl.at("index").get<std::uint64_t>();
  for (const auto& s : mtl.at("siblings")) {
    auto d = crypto::base64_fixed<Digest>(s.get<std::string>());
    if (!d)
      throw std::runtime_error("bad base64 Merkle sibling");
    p.mtl.siblings.push_back(*d);
  }
  p.sign_a = fixed_from_json<Signature>(doc, "sign_a");
  return p;
}

nlohmann::json to_json(const CoLRequest& r) {
  return {{"t_id", crypto::base64_encode(r.t_id.view())},
          {"mtr", crypto::base64_encode(r.mtr.view())},
          {"sigma", r.sigma},
          {"pk", crypto::base64_encode(r.pk.view())},
          {"sign", crypto::base64_encode(r.sign.view())}};
}

} // namespace gridtrade::apol
