#include "gridtrade/ledger/ledger.hpp"

#include "gridtrade/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace gridtrade::ledger {
namespace {

bool same_amount(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

bool same_price(double a, double b) { return std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(b)); }

std::size_t header_size(const Block& b) {
  Encoder enc;
  enc.u64(b.height).fixed(b.prev).fixed(b.digest);
  return enc.bytes().size();
}

} // namespace

std::string_view outcome_name(EiOutcome o) noexcept {
  switch (o) {
  case EiOutcome::Settled: return "settled";
  case EiOutcome::Disputed: return "disputed";
  case EiOutcome::PriceMismatch: return "price-mismatch";
  case EiOutcome::OverDelivery: return "over-delivery";
  }
  return "?";
}

Digest block_digest(std::uint64_t height, const Digest& prev, const std::vector<Transaction>& txs) {
  Encoder enc;
  enc.u64(height).fixed(prev).u64(txs.size());
  for (const auto& tx : txs)
    enc.raw(encode(tx));
  return crypto::sha256(enc);
}

bool verify_chain(const std::vector<Block>& blocks) {
  Digest prev{};
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    if (b.height != k || b.prev != prev || b.txs.empty() || b.txs.size() > kBlockCapacity)
      return false;
    for (const auto& tx : b.txs)
      if (compute_id(tx) != id_of(tx))
        return false;
    if (block_digest(b.height, b.prev, b.txs) != b.digest)
      return false;
    prev = b.digest;
  }
  return true;
}

Ledger::Ledger(LedgerConfig cfg) : cfg_(cfg), blocks_(std::make_shared<const std::vector<Block>>()) {}

void Ledger::open_account(const std::string& account, std::int64_t cents) {
  std::lock_guard lock(mutex_);
  balances_[account] = cents;
}

std::int64_t Ledger::balance(const std::string& account) const {
  std::lock_guard lock(mutex_);
  auto it = balances_.find(account);
  return it == balances_.end() ? 0 : it->second;
}

std::int64_t Ledger::credited(const PublicKey& key) const {
  std::lock_guard lock(mutex_);
  auto it = credits_.find(key);
  return it == credits_.end() ? 0 : it->second;
}

void Ledger::register_key(const PublicKey& key, const std::string& agent) {
  std::lock_guard lock(mutex_);
  owners_[key] = agent;
}

std::optional<std::string> Ledger::owner_of(const PublicKey& key) const {
  std::lock_guard lock(mutex_);
  auto it = owners_.find(key);
  if (it == owners_.end())
    return std::nullopt;
  return it->second;
}

void Ledger::set_reputation(const std::string& agent, double value) {
  std::lock_guard lock(mutex_);
  reputation_[agent] = std::clamp(value, 0.0, 1.0);
}

double Ledger::reputation(const std::string& agent) const {
  std::lock_guard lock(mutex_);
  auto it = reputation_.find(agent);
  return it == reputation_.end() ? 1.0 : it->second;
}

std::uint64_t Ledger::submit_advertisement(const AdvertisementTx& at, Role submitter, const apol::CaRegistry& ca) {
  if (cfg_.ad_mode && submitter != Role::GridOperator)
    throw Error(Errc::UnauthorizedWriter, "only the grid operator writes to the advertisement database");
  const auto content = advertisement_content(at.side, at.value, at.reputation);
  if (compute_id(at) != at.t_id)
    throw Error(Errc::InvalidCoL, "advertisement id does not match its content");
  if (at.col) {
    auto verdict = apol::verify_col(*at.col, ca, content);
    if (!verdict)
      throw Error(Errc::InvalidCoL, "step " + std::to_string(verdict.failed_step) + ": " + verdict.reason);
  } else if (!crypto::verify(at.pk, content, at.sign)) {
    throw Error(Errc::InvalidCoL, "advertisement signature does not verify");
  }
  std::lock_guard lock(mutex_);
  if (cfg_.ad_mode) {
    AdRecord rec{ads_.size(), at, std::nullopt};
    if (at.col)
      rec.sigma = at.col->sigma;
    ads_.push_back(std::move(rec));
    return ads_.back().ad_id;
  }
  pool_.push_back(at);
  return pool_.size() - 1;
}

std::vector<AdRecord> Ledger::query_ads(const AdQuery& q) const {
  std::lock_guard lock(mutex_);
  std::vector<AdRecord> out;
  for (const auto& rec : ads_) {
    if (q.side && rec.at.side != *q.side)
      continue;
    if (q.min_value && rec.at.value < *q.min_value)
      continue;
    if (q.max_value && rec.at.value > *q.max_value)
      continue;
    if (q.near_sigma && (!rec.sigma || std::abs(*rec.sigma - *q.near_sigma) > q.sigma_radius))
      continue;
    out.push_back(rec);
  }
  return out;
}

std::size_t Ledger::ad_count() const {
  std::lock_guard lock(mutex_);
  return ads_.size();
}

Digest Ledger::finalize_negotiation(const EnergyNegotiationTx& en) {
  if (!en.agreement_p || !en.agreement_c)
    throw Error(Errc::MissingAgreement, "both parties must set their agreement flag");
  const auto d = negotiation_digest(en);
  if (!crypto::verify(en.pk_dest, d, en.sign_dest) || !crypto::verify(en.pk_gen, d, en.sign_gen) ||
      compute_id(en) != en.t_id)
    throw Error(Errc::BadSignature, "EN must carry both parties' signatures");
  std::lock_guard lock(mutex_);
  negotiations_.emplace(en.t_id, en);
  pool_.push_back(en);
  return en.t_id;
}

Digest Ledger::submit_lp(const LatePaymentTx& lp, Tick now) {
  std::lock_guard lock(mutex_);
  auto en_it = negotiations_.find(lp.en_ref);
  if (en_it == negotiations_.end())
    throw Error(Errc::UnknownReference, "LP cites an unknown EN");
  const auto& en = en_it->second;
  if (compute_id(lp) != lp.t_id || !crypto::verify(en.pk_gen, payment_digest(lp), lp.sign))
    throw Error(Errc::BadSignature, "LP is not signed with the consumer's EN key");
  if (lp.output != en.pk_dest)
    throw Error(Errc::UnknownReference, "LP output is not the EN producer");
  if (now > lp.expiry)
    throw Error(Errc::Expired, "LP submitted after its own expiry");
  auto acct = balances_.find(lp.input);
  if (acct == balances_.end())
    throw Error(Errc::UnknownReference, "funding account " + lp.input + " does not exist");
  if (acct->second < std::llround(lp.price))
    throw Error(Errc::InsufficientFunds, "account " + lp.input + " cannot cover the payment");

  if (auto wait = awaiting_by_en_.find(lp.en_ref); wait != awaiting_by_en_.end()) {
    auto& disputed = payments_.at(wait->second);
    if (lp.replaces != disputed.lp.t_id || !disputed.pu || !same_price(lp.price, disputed.pu->new_price))
      throw Error(Errc::InvalidParameter, "re-issued LP must replace the disputed LP at the corrected price");
    pool_.push_back(disputed.lp);
    pool_.push_back(*disputed.held_ei);
    pool_.push_back(lp);
    disputed.state = LpState::Reissued;
    acct->second -= std::llround(lp.price);
    credits_[lp.output] += std::llround(lp.price);
    payments_[lp.t_id] = LpEntry{lp, LpState::Settled, disputed.held_ei, disputed.pu};
    awaiting_by_en_.erase(wait);
    return lp.t_id;
  }
  payments_[lp.t_id] = LpEntry{lp, LpState::Pending, std::nullopt, std::nullopt};
  return lp.t_id;
}

EiOutcome Ledger::submit_ei(const EnergyInjectionTx& ei, Tick now) {
  std::lock_guard lock(mutex_);
  auto it = payments_.find(ei.lp_id);
  if (it == payments_.end())
    throw Error(Errc::UnknownReference, "EI cites an unknown LP");
  if (ei_seen_.contains(ei.lp_id))
    throw Error(Errc::DuplicateEI, "an EI for this LP was already submitted");
  auto& entry = it->second;
  if (entry.state == LpState::Expired || now > entry.lp.expiry) {
    entry.state = LpState::Expired;
    throw Error(Errc::Expired, "LP expired before the EI arrived");
  }
  if (entry.state != LpState::Pending)
    throw Error(Errc::UnknownReference, "LP is no longer open");
  const auto& en = negotiations_.at(entry.lp.en_ref);
  const auto d = injection_digest(ei);
  if (ei.pk_p != en.pk_dest || ei.pk_c != en.pk_gen || !crypto::verify(ei.pk_p, d, ei.sign_p) ||
      !crypto::verify(ei.pk_c, d, ei.sign_c) || compute_id(ei) != ei.t_id)
    throw Error(Errc::BadSignature, "EI needs both EN parties' signatures");
  ei_seen_.insert(ei.lp_id);

  if (!same_price(entry.lp.price, en.amount * en.price)) {
    entry.state = LpState::Discarded;
    return EiOutcome::PriceMismatch;
  }
  if (ei.amount > en.amount && !same_amount(ei.amount, en.amount)) {
    entry.state = LpState::Discarded;
    return EiOutcome::OverDelivery;
  }
  if (same_amount(ei.amount, en.amount)) {
    pool_.push_back(entry.lp);
    pool_.push_back(ei);
    entry.state = LpState::Settled;
    entry.held_ei = ei;
    balances_[entry.lp.input] -= std::llround(entry.lp.price);
    credits_[entry.lp.output] += std::llround(entry.lp.price);
    return EiOutcome::Settled;
  }
  auto result = dispute_locked(ei, entry.lp, en);
  entry.state = LpState::AwaitingReissue;
  entry.held_ei = ei;
  entry.pu = result.pu;
  awaiting_by_en_[en.t_id] = entry.lp.t_id;
  return EiOutcome::Disputed;
}

DisputeResult Ledger::dispute_resolution(const EnergyInjectionTx& ei, const LatePaymentTx& lp,
                                         const EnergyNegotiationTx& en) {
  std::lock_guard lock(mutex_);
  return dispute_locked(ei, lp, en);
}

DisputeResult Ledger::dispute_locked(const EnergyInjectionTx& ei, const LatePaymentTx& lp,
                                     const EnergyNegotiationTx& en) {
  if (!(ei.amount < en.amount) || same_amount(ei.amount, en.amount))
    throw Error(Errc::NotUnderDelivery, "delivered energy is not below the agreed amount");
  if (lp.en_ref != en.t_id || ei.lp_id != lp.t_id)
    throw Error(Errc::UnknownReference, "EI, LP and EN do not reference each other");
  const double ratio = std::max(0.0, ei.amount) / en.amount;
  DisputeResult r;
  r.pu = make_price_update(lp.t_id, lp.price, lp.price * ratio);
  pool_.push_back(r.pu);
  auto owner = owners_.find(en.pk_dest);
  r.producer = owner == owners_.end() ? to_hex(en.pk_dest.view()) : owner->second;
  auto rep = reputation_.find(r.producer);
  r.reputation_before = rep == reputation_.end() ? 1.0 : rep->second;
  r.reputation_after =
      update_reputation_locked(r.producer, -cfg_.reputation_penalty * (1.0 - ratio), kDisputeContract);
  return r;
}

double Ledger::update_reputation(const std::string& agent, double delta, std::string_view source) {
  std::lock_guard lock(mutex_);
  return update_reputation_locked(agent, delta, source);
}

double Ledger::update_reputation_locked(const std::string& agent, double delta, std::string_view source) {
  if (source != kDisputeContract)
    throw Error(Errc::UnauthorizedSource, "only the dispute-resolution contract may change reputation");
  if (delta > 0.0)
    throw Error(Errc::InvalidParameter, "reputation only ever decreases");
  auto it = reputation_.find(agent);
  const double before = it == reputation_.end() ? 1.0 : it->second;
  const double after = std::clamp(before + delta, 0.0, 1.0);
  reputation_[agent] = after;
  pool_.push_back(make_reputation_record(agent, before, after, std::string(source)));
  return after;
}

std::size_t Ledger::expire(Tick now) {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (auto& [id, entry] : payments_)
    if (entry.state == LpState::Pending && now > entry.lp.expiry) {
      entry.state = LpState::Expired;
      ++n;
    }
  return n;
}

const EnergyNegotiationTx* Ledger::find_negotiation(const Digest& id) const {
  std::lock_guard lock(mutex_);
  auto it = negotiations_.find(id);
  return it == negotiations_.end() ? nullptr : &it->second;
}

const LatePaymentTx* Ledger::find_payment(const Digest& id) const {
  std::lock_guard lock(mutex_);
  auto it = payments_.find(id);
  return it == payments_.end() ? nullptr : &it->second.lp;
}

std::optional<PriceUpdateTx> Ledger::pending_price_update(const Digest& en_id) const {
  std::lock_guard lock(mutex_);
  auto it = awaiting_by_en_.find(en_id);
  if (it == awaiting_by_en_.end())
    return std::nullopt;
  return payments_.at(it->second).pu;
}

std::size_t Ledger::pending() const {
  std::lock_guard lock(mutex_);
  return pool_.size();
}

std::uint64_t Ledger::append_block() {
  std::lock_guard lock(mutex_);
  if (pool_.empty())
    throw Error(Errc::NothingPending, "no validated transactions waiting");
  const auto take = std::min(kBlockCapacity, pool_.size());
  Block b;
  b.height = blocks_->size();
  b.prev = blocks_->empty() ? Digest{} : blocks_->back().digest;
  b.txs.assign(pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(take));
  pool_.erase(pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(take));
  b.digest = block_digest(b.height, b.prev, b.txs);
  auto next = std::make_shared<std::vector<Block>>(*blocks_);
  next->push_back(std::move(b));
  blocks_ = std::move(next);
  return blocks_->back().height;
}

std::size_t Ledger::seal_all() {
  std::size_t n = 0;
  while (pending() > 0) {
    append_block();
    ++n;
  }
  return n;
}

std::shared_ptr<const std::vector<Block>> Ledger::blocks() const {
  std::lock_guard lock(mutex_);
  return blocks_;
}

std::size_t Ledger::block_count() const { return blocks()->size(); }

Digest Ledger::head() const {
  auto b = blocks();
  return b->empty() ? Digest{} : b->back().digest;
}

Footprint Ledger::measure_footprint() const {
  auto snapshot = blocks();
  Footprint f;
  f.blocks = snapshot->size();
  for (const auto& b : *snapshot) {
    f.total_bytes += header_size(b);
    for (const auto& tx : b.txs) {
      const auto size = serialized_size(tx);
      const auto name = std::string(kind_name(kind_of(tx)));
      f.bytes_by_kind[name] += size;
      f.count_by_kind[name] += 1;
      f.total_bytes += size;
      ++f.transactions;
    }
  }
  return f;
}

void Ledger::export_jsonl(std::ostream& out) const {
  auto snapshot = blocks();
  for (const auto& b : *snapshot) {
    nlohmann::json head{{"block", b.height},
                        {"prev", to_hex(b.prev.view())},
                        {"digest", to_hex(b.digest.view())},
                        {"txs", b.txs.size()}};
    out << head.dump() << '\n';
    for (const auto& tx : b.txs)
      out << to_json(tx).dump() << '\n';
  }
}

} // namespace gridtrade::ledger
