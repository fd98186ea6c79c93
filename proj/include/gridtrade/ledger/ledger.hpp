#pragma once

#include "gridtrade/apol/apol.hpp"
#include "gridtrade/ledger/transactions.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gridtrade::ledger {

inline constexpr std::size_t kBlockCapacity = 10;
inline constexpr std::string_view kDisputeContract = "contract:dispute-resolution";

enum class Role { GridOperator, Producer, Consumer };

struct Block {
  std::uint64_t height = 0;
  Digest prev;
  std::vector<Transaction> txs;
  Digest digest;
};

Digest block_digest(std::uint64_t height, const Digest& prev, const std::vector<Transaction>& txs);
// True when every block's digest recomputes and links to its predecessor.
bool verify_chain(const std::vector<Block>& blocks);

struct AdRecord {
  std::uint64_t ad_id = 0;
  AdvertisementTx at;
  std::optional<std::int64_t> sigma;
};

struct AdQuery {
  std::optional<Side> side;
  std::optional<double> min_value;
  std::optional<double> max_value;
  std::optional<std::int64_t> near_sigma;
  std::int64_t sigma_radius = 0;
};

enum class EiOutcome { Settled, Disputed, PriceMismatch, OverDelivery };
std::string_view outcome_name(EiOutcome o) noexcept;

struct DisputeResult {
  PriceUpdateTx pu;
  std::string producer;
  double reputation_before = 0.0;
  double reputation_after = 0.0;
};

struct Footprint {
  std::size_t blocks = 0;
  std::size_t transactions = 0;
  std::size_t total_bytes = 0;
  std::map<std::string, std::size_t> bytes_by_kind;
  std::map<std::string, std::size_t> count_by_kind;
};

struct LedgerConfig {
  bool ad_mode = true;          // ATs go to the off-chain AD instead of blocks
  double reputation_penalty = 0.5;
};

// Single-writer state machine: every mutating call takes one lock, in call order.
class Ledger {
public:
  explicit Ledger(LedgerConfig cfg = {});

  const LedgerConfig& config() const noexcept { return cfg_; }

  // Accounts and key ownership.
  void open_account(const std::string& account, std::int64_t cents);
  std::int64_t balance(const std::string& account) const;
  std::int64_t credited(const PublicKey& key) const;
  void register_key(const PublicKey& key, const std::string& agent);
  std::optional<std::string> owner_of(const PublicKey& key) const;

  void set_reputation(const std::string& agent, double value);
  double reputation(const std::string& agent) const;

  // AD mode: returns the AD id. Otherwise the AT is queued for a block and the
  // return value is the pending position. Throws InvalidCoL, UnauthorizedWriter.
  std::uint64_t submit_advertisement(const AdvertisementTx& at, Role submitter, const apol::CaRegistry& ca);
  std::vector<AdRecord> query_ads(const AdQuery& q = {}) const;
  std::size_t ad_count() const;

  // Throws MissingAgreement, BadSignature.
  Digest finalize_negotiation(const EnergyNegotiationTx& en);
  // Throws UnknownReference, BadSignature, InsufficientFunds, Expired.
  Digest submit_lp(const LatePaymentTx& lp, Tick now);
  // Throws UnknownReference, DuplicateEI, Expired, BadSignature.
  EiOutcome submit_ei(const EnergyInjectionTx& ei, Tick now);
  // Applies the DR contract. Throws NotUnderDelivery, UnknownReference.
  DisputeResult dispute_resolution(const EnergyInjectionTx& ei, const LatePaymentTx& lp,
                                   const EnergyNegotiationTx& en);
  // Throws UnauthorizedSource.
  double update_reputation(const std::string& agent, double delta, std::string_view source);
  // Drops unpaired LPs whose expiry has passed; returns how many.
  std::size_t expire(Tick now);

  const EnergyNegotiationTx* find_negotiation(const Digest& id) const;
  const LatePaymentTx* find_payment(const Digest& id) const;
  std::optional<PriceUpdateTx> pending_price_update(const Digest& en_id) const;

  std::size_t pending() const;
  // Seals up to kBlockCapacity pending transactions. Throws NothingPending.
  std::uint64_t append_block();
  std::size_t seal_all();

  std::shared_ptr<const std::vector<Block>> blocks() const;
  std::size_t block_count() const;
  Digest head() const;
  bool verify() const { return verify_chain(*blocks()); }

  Footprint measure_footprint() const;
  void export_jsonl(std::ostream& out) const;

private:
  enum class LpState { Pending, Settled, Discarded, Expired, AwaitingReissue, Reissued };
  struct LpEntry {
    LatePaymentTx lp;
    LpState state = LpState::Pending;
    std::optional<EnergyInjectionTx> held_ei;
    std::optional<PriceUpdateTx> pu;
  };

  void settle(const LpEntry& entry, const LatePaymentTx& paying);
  DisputeResult dispute_locked(const EnergyInjectionTx& ei, const LatePaymentTx& lp, const EnergyNegotiationTx& en);
  double update_reputation_locked(const std::string& agent, double delta, std::string_view source);

  LedgerConfig cfg_;
  mutable std::mutex mutex_;
  std::vector<Transaction> pool_;
  std::shared_ptr<const std::vector<Block>> blocks_;
  std::vector<AdRecord> ads_;
  std::map<Digest, EnergyNegotiationTx> negotiations_;
  std::map<Digest, LpEntry> payments_;
  std::map<Digest, Digest> awaiting_by_en_; // EN id -> disputed LP id
  std::set<Digest> ei_seen_;
  std::map<std::string, std::int64_t> balances_;
  std::map<PublicKey, std::int64_t> credits_;
  std::map<PublicKey, std::string> owners_;
  std::map<std::string, double> reputation_;
};

} // namespace gridtrade::ledger
