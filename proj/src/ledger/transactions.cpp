#include "gridtrade/ledger/transactions.hpp"

#include "gridtrade/error.hpp"

namespace gridtrade::ledger {
namespace {

template <class... F>
struct overloaded : F... {
  using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

void body(Encoder& enc, const AdvertisementTx& t) {
  enc.u64(static_cast<std::uint64_t>(t.side)).f64(t.value).f64(t.reputation).flag(t.col.has_value());
  if (t.col)
    apol::encode(enc, *t.col);
  else
    enc.fixed(t.pk).fixed(t.sign);
}

void body(Encoder& enc, const EnergyNegotiationTx& t) {
  enc.f64(t.amount).f64(t.price).fixed(t.pk_dest).fixed(t.sign_dest).fixed(t.pk_gen).fixed(t.sign_gen);
  enc.flag(t.agreement_p).flag(t.agreement_c);
}

void body(Encoder& enc, const LatePaymentTx& t) {
  enc.f64(t.price).str(t.input).fixed(t.output).fixed(t.en_ref).u64(t.expiry).fixed(t.replaces).fixed(t.sign);
}

void body(Encoder& enc, const EnergyInjectionTx& t) {
  enc.f64(t.amount).fixed(t.lp_id).fixed(t.pk_p).fixed(t.sign_p).fixed(t.pk_c).fixed(t.sign_c);
}

void body(Encoder& enc, const PriceUpdateTx& t) { enc.fixed(t.lp_id).f64(t.old_price).f64(t.new_price); }

void body(Encoder& enc, const ReputationRecord& t) {
  enc.str(t.agent).f64(t.old_value).f64(t.new_value).str(t.source);
}

template <class T>
Digest id_for(const T& tx, TxKind kind) {
  Encoder enc;
  enc.u64(static_cast<std::uint64_t>(kind));
  body(enc, tx);
  return crypto::sha256(enc);
}

std::string hex(const auto& fixed) { return to_hex(fixed.view()); }

} // namespace

std::string_view kind_name(TxKind kind) noexcept {
  switch (kind) {
  case TxKind::AT: return "AT";
  case TxKind::EN: return "EN";
  case TxKind::LP: return "LP";
  case TxKind::EI: return "EI";
  case TxKind::PU: return "PU";
  case TxKind::REP: return "REP";
  }
  return "?";
}

TxKind kind_of(const Transaction& tx) noexcept { return static_cast<TxKind>(tx.index() + 1); }

const Digest& id_of(const Transaction& tx) noexcept {
  return std::visit([](const auto& t) -> const Digest& { return t.t_id; }, tx);
}

Digest compute_id(const Transaction& tx) {
  return std::visit([&](const auto& t) { return id_for(t, kind_of(tx)); }, tx);
}

Bytes advertisement_content(Side side, double value, double reputation) {
  Encoder enc;
  enc.str("AT").u64(static_cast<std::uint64_t>(side)).f64(value).f64(reputation);
  return std::move(enc).bytes();
}

Digest negotiation_digest(const EnergyNegotiationTx& en) {
  Encoder enc;
  enc.str("EN").f64(en.amount).f64(en.price).fixed(en.pk_dest).fixed(en.pk_gen);
  enc.flag(en.agreement_p).flag(en.agreement_c);
  return crypto::sha256(enc);
}

Digest payment_digest(const LatePaymentTx& lp) {
  Encoder enc;
  enc.str("LP").f64(lp.price).str(lp.input).fixed(lp.output).fixed(lp.en_ref).u64(lp.expiry).fixed(lp.replaces);
  return crypto::sha256(enc);
}

Digest injection_digest(const EnergyInjectionTx& ei) {
  Encoder enc;
  enc.str("EI").f64(ei.amount).fixed(ei.lp_id).fixed(ei.pk_p).fixed(ei.pk_c);
  return crypto::sha256(enc);
}

AdvertisementTx make_advertisement(Side side, double value, double reputation, apol::MerkleCommitment& commit,
                                   const apol::CoLResponse& col, std::int64_t sigma) {
  AdvertisementTx at;
  at.side = side;
  at.value = value;
  at.reputation = reputation;
  at.col = apol::attach_proof(commit, col, sigma, commit.next_leaf(),
                              advertisement_content(side, value, reputation));
  at.t_id = id_for(at, TxKind::AT);
  return at;
}

AdvertisementTx make_plain_advertisement(Side side, double value, double reputation, const crypto::KeyPair& key) {
  AdvertisementTx at;
  at.side = side;
  at.value = value;
  at.reputation = reputation;
  at.pk = key.public_key;
  at.sign = crypto::sign(key.secret_key, advertisement_content(side, value, reputation));
  at.t_id = id_for(at, TxKind::AT);
  return at;
}

EnergyNegotiationTx make_negotiation(double amount, double price, const crypto::KeyPair& producer,
                                     const crypto::KeyPair& consumer, bool agree_p, bool agree_c) {
  EnergyNegotiationTx en;
  en.amount = amount;
  en.price = price;
  en.pk_dest = producer.public_key;
  en.pk_gen = consumer.public_key;
  en.agreement_p = agree_p;
  en.agreement_c = agree_c;
  const auto d = negotiation_digest(en);
  en.sign_dest = crypto::sign(producer.secret_key, d);
  en.sign_gen = crypto::sign(consumer.secret_key, d);
  en.t_id = id_for(en, TxKind::EN);
  return en;
}

LatePaymentTx make_payment(const EnergyNegotiationTx& en, double price, std::string input, Tick expiry,
                           const crypto::KeyPair& consumer, const Digest& replaces) {
  LatePaymentTx lp;
  lp.price = price;
  lp.input = std::move(input);
  lp.output = en.pk_dest;
  lp.en_ref = en.t_id;
  lp.expiry = expiry;
  lp.replaces = replaces;
  lp.sign = crypto::sign(consumer.secret_key, payment_digest(lp));
  lp.t_id = id_for(lp, TxKind::LP);
  return lp;
}

EnergyInjectionTx make_injection(double amount, const Digest& lp_id, const crypto::KeyPair& producer,
                                 const crypto::KeyPair& consumer) {
  EnergyInjectionTx ei;
  ei.amount = amount;
  ei.lp_id = lp_id;
  ei.pk_p = producer.public_key;
  ei.pk_c = consumer.public_key;
  const auto d = injection_digest(ei);
  ei.sign_p = crypto::sign(producer.secret_key, d);
  ei.sign_c = crypto::sign(consumer.secret_key, d);
  ei.t_id = id_for(ei, TxKind::EI);
  return ei;
}

PriceUpdateTx make_price_update(const Digest& lp_id, double old_price, double new_price) {
  PriceUpdateTx pu{{}, lp_id, old_price, new_price};
  pu.t_id = id_for(pu, TxKind::PU);
  return pu;
}

ReputationRecord make_reputation_record(std::string agent, double old_value, double new_value, std::string source) {
  ReputationRecord r{{}, std::move(agent), old_value, new_value, std::move(source)};
  r.t_id = id_for(r, TxKind::REP);
  return r;
}

void encode(Encoder& enc, const Transaction& tx) {
  enc.u64(static_cast<std::uint64_t>(kind_of(tx))).fixed(id_of(tx));
  std::visit([&](const auto& t) { body(enc, t); }, tx);
}

Bytes encode(const Transaction& tx) {
  Encoder enc;
  encode(enc, tx);
  return std::move(enc).bytes();
}

std::size_t serialized_size(const Transaction& tx) { return encode(tx).size(); }

nlohmann::json to_json(const Transaction& tx) {
  nlohmann::json j{{"kind", kind_name(kind_of(tx))}, {"t_id", hex(id_of(tx))}};
  std::visit(overloaded{
                 [&](const AdvertisementTx& t) {
                   j["side"] = t.side == Side::Offer ? "offer" : "ask";
                   j[t.side == Side::Offer ? "price" : "amount"] = t.value;
                   j["reputation"] = t.reputation;
                   if (t.col)
                     j["col"] = apol::to_json(*t.col);
                   else
                     j["pk"] = hex(t.pk);
                 },
                 [&](const EnergyNegotiationTx& t) {
                   j["amount"] = t.amount;
                   j["price"] = t.price;
                   j["pk_dest"] = hex(t.pk_dest);
                   j["pk_gen"] = hex(t.pk_gen);
                   j["agreement_p"] = t.agreement_p;
                   j["agreement_c"] = t.agreement_c;
                 },
                 [&](const LatePaymentTx& t) {
                   j["price"] = t.price;
                   j["input"] = t.input;
                   j["output"] = hex(t.output);
                   j["en_ref"] = hex(t.en_ref);
                   j["expiry"] = t.expiry;
                   if (t.replaces != Digest{})
                     j["replaces"] = hex(t.replaces);
                 },
                 [&](const EnergyInjectionTx& t) {
                   j["amount"] = t.amount;
                   j["lp_id"] = hex(t.lp_id);
                   j["pk_p"] = hex(t.pk_p);
                   j["pk_c"] = hex(t.pk_c);
                 },
                 [&](const PriceUpdateTx& t) {
                   j["lp_id"] = hex(t.lp_id);
                   j["old_price"] = t.old_price;
                   j["new_price"] = t.new_price;
                 },
                 [&](const ReputationRecord& t) {
                   j["agent"] = t.agent;
                   j["old"] = t.old_value;
                   j["new"] = t.new_value;
                   j["source"] = t.source;
                 },
             },
             tx);
  return j;
}

} // namespace gridtrade::ledger
