#pragma once

#include "gridtrade/apol/apol.hpp"
#include "gridtrade/codec.hpp"
#include "gridtrade/crypto.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace gridtrade::ledger {

using Tick = std::uint64_t;

enum class TxKind : std::uint8_t { AT = 1, EN, LP, EI, PU, REP };
std::string_view kind_name(TxKind kind) noexcept;

enum class Side : std::uint8_t { Offer = 0, Ask = 1 };

// Offers carry a price, asks an amount. With a CoL the proof's leaf key signs
// the content; the plain variant is signed with an ordinary key instead.
struct AdvertisementTx {
  Digest t_id;
  Side side = Side::Offer;
  double value = 0.0;
  double reputation = 1.0;
  std::optional<apol::CoLProof> col;
  PublicKey pk;   // plain variant only
  Signature sign; // plain variant only
};

// Generator is the consumer, destination the producer.
struct EnergyNegotiationTx {
  Digest t_id;
  double amount = 0.0; // kWh
  double price = 0.0;  // cents/kWh
  PublicKey pk_dest;
  Signature sign_dest;
  PublicKey pk_gen;
  Signature sign_gen;
  bool agreement_p = false;
  bool agreement_c = false;
};

struct LatePaymentTx {
  Digest t_id;
  double price = 0.0; // total cents owed
  std::string input;  // funding account
  PublicKey output;   // producer key from the EN
  Digest en_ref;
  Tick expiry = 0;
  Digest replaces;    // zero unless re-issued after a dispute
  Signature sign;     // consumer's EN key
};

struct EnergyInjectionTx {
  Digest t_id;
  double amount = 0.0;
  Digest lp_id;
  PublicKey pk_p;
  Signature sign_p;
  PublicKey pk_c;
  Signature sign_c;
};

struct PriceUpdateTx {
  Digest t_id;
  Digest lp_id;
  double old_price = 0.0;
  double new_price = 0.0;
};

struct ReputationRecord {
  Digest t_id;
  std::string agent;
  double old_value = 0.0;
  double new_value = 0.0;
  std::string source;
};

using Transaction = std::variant<AdvertisementTx, EnergyNegotiationTx, LatePaymentTx, EnergyInjectionTx,
                                 PriceUpdateTx, ReputationRecord>;

TxKind kind_of(const Transaction& tx) noexcept;
const Digest& id_of(const Transaction& tx) noexcept;

// Signed content of each transaction (what the signatures cover).
Bytes advertisement_content(Side side, double value, double reputation);
Digest negotiation_digest(const EnergyNegotiationTx& en);
Digest payment_digest(const LatePaymentTx& lp);
Digest injection_digest(const EnergyInjectionTx& ei);

AdvertisementTx make_advertisement(Side side, double value, double reputation, apol::MerkleCommitment& commit,
                                   const apol::CoLResponse& col, std::int64_t sigma);
AdvertisementTx make_plain_advertisement(Side side, double value, double reputation, const crypto::KeyPair& key);
EnergyNegotiationTx make_negotiation(double amount, double price, const crypto::KeyPair& producer,
                                     const crypto::KeyPair& consumer, bool agree_p = true, bool agree_c = true);
LatePaymentTx make_payment(const EnergyNegotiationTx& en, double price, std::string input, Tick expiry,
                           const crypto::KeyPair& consumer, const Digest& replaces = {});
EnergyInjectionTx make_injection(double amount, const Digest& lp_id, const crypto::KeyPair& producer,
                                 const crypto::KeyPair& consumer);
PriceUpdateTx make_price_update(const Digest& lp_id, double old_price, double new_price);
ReputationRecord make_reputation_record(std::string agent, double old_value, double new_value, std::string source);

// Recompute t_id from the other fields.
Digest compute_id(const Transaction& tx);

void encode(Encoder& enc, const Transaction& tx);
Bytes encode(const Transaction& tx);
std::size_t serialized_size(const Transaction& tx);

nlohmann::json to_json(const Transaction& tx);

} // namespace gridtrade::ledger
