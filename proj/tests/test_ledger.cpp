#include "gridtrade/error.hpp"
#include "gridtrade/ledger/ledger.hpp"

#include <doctest.h>

#include <sstream>

using namespace gridtrade;
using namespace gridtrade::ledger;

namespace {

struct Parties {
  apol::CaRegistry ca{5};
  apol::MeterIdentity prover = ca.install_meter(18);
  apol::MeterIdentity verifier = ca.install_meter(1);
  apol::MerkleCommitment commit = apol::build_commitment(8, 5, 0);
  apol::CoLResponse col = apol::issue_col(verifier, apol::request_col(prover, commit), ca);
  crypto::KeyPair producer = crypto::derive_keypair(9, "producer", 0);
  crypto::KeyPair consumer = crypto::derive_keypair(9, "consumer", 0);

  AdvertisementTx ad(double value = 12.0) {
    return make_advertisement(Side::Offer, value, 0.9, commit, col, prover.sigma);
  }
};

struct Trade {
  Parties p;
  Ledger ledger;
  EnergyNegotiationTx en;

  explicit Trade(double amount = 4.0, double price = 10.0) {
    ledger.open_account("c0", 10'000);
    ledger.register_key(p.producer.public_key, "p0");
    en = make_negotiation(amount, price, p.producer, p.consumer);
    ledger.finalize_negotiation(en);
  }
};

} // namespace

TEST_CASE("advertisements go to the database in AD mode and on chain otherwise") {
  Parties p;
  Ledger ad_mode;
  auto id = ad_mode.submit_advertisement(p.ad(), Role::GridOperator, p.ca);
  CHECK(id == 0);
  CHECK(ad_mode.ad_count() == 1);
  CHECK(ad_mode.pending() == 0);
  CHECK_THROWS_AS(ad_mode.append_block(), Error);

  Ledger chain(LedgerConfig{false, 0.5});
  chain.submit_advertisement(p.ad(), Role::Producer, p.ca);
  CHECK(chain.ad_count() == 0);
  CHECK(chain.pending() == 1);
}

TEST_CASE("advertisement database rejects non-operator writers and bad proofs") {
  Parties p;
  Ledger ledger;
  try {
    ledger.submit_advertisement(p.ad(), Role::Consumer, p.ca);
    FAIL("accepted a consumer write");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnauthorizedWriter);
  }

  auto at = p.ad();
  at.value = 11.0; // content no longer matches the signed offer
  try {
    ledger.submit_advertisement(at, Role::GridOperator, p.ca);
    FAIL("accepted a tampered offer");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidCoL);
  }

  apol::CaRegistry other(77);
  try {
    ledger.submit_advertisement(p.ad(), Role::GridOperator, other);
    FAIL("accepted a proof from an unknown verifier");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidCoL);
  }
  CHECK(ledger.ad_count() == 0);
}

TEST_CASE("advertisement queries filter by side, value and location") {
  Parties p;
  Ledger ledger;
  ledger.submit_advertisement(p.ad(10.0), Role::GridOperator, p.ca);
  ledger.submit_advertisement(p.ad(14.0), Role::GridOperator, p.ca);
  ledger.submit_advertisement(make_plain_advertisement(Side::Ask, 12.0, 1.0, p.consumer), Role::GridOperator, p.ca);

  CHECK(ledger.query_ads({}).size() == 3);
  AdQuery offers;
  offers.side = Side::Offer;
  CHECK(ledger.query_ads(offers).size() == 2);
  offers.max_value = 12.0;
  CHECK(ledger.query_ads(offers).size() == 1);
  AdQuery near;
  near.near_sigma = 17;
  near.sigma_radius = 1;
  CHECK(ledger.query_ads(near).size() == 2);
  near.near_sigma = 3;
  CHECK(ledger.query_ads(near).empty());
}

TEST_CASE("negotiation needs both agreements and both signatures") {
  Parties p;
  Ledger ledger;
  try {
    ledger.finalize_negotiation(make_negotiation(1.0, 10.0, p.producer, p.consumer, true, false));
    FAIL("missing agreement accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingAgreement);
  }
  auto en = make_negotiation(1.0, 10.0, p.producer, p.consumer);
  en.sign_gen = en.sign_dest;
  try {
    ledger.finalize_negotiation(en);
    FAIL("forged signature accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadSignature);
  }
  CHECK(ledger.pending() == 0);
}

TEST_CASE("full delivery settles and credits the producer") {
  Trade t;
  auto lp = make_payment(t.en, 40.0, "c0", 10, t.p.consumer);
  t.ledger.submit_lp(lp, 1);
  CHECK(t.ledger.pending() == 1); // only the EN so far
  auto ei = make_injection(4.0, lp.t_id, t.p.producer, t.p.consumer);
  CHECK(t.ledger.submit_ei(ei, 2) == EiOutcome::Settled);
  CHECK(t.ledger.pending() == 3);
  CHECK(t.ledger.balance("c0") == 10'000 - 40);
  CHECK(t.ledger.credited(t.p.producer.public_key) == 40);
  CHECK(t.ledger.reputation("p0") == 1.0);

  try {
    t.ledger.submit_ei(ei, 3);
    FAIL("second EI accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DuplicateEI);
  }
}

TEST_CASE("late injection, unknown references and funding") {
  Trade t;
  auto lp = make_payment(t.en, 40.0, "c0", 5, t.p.consumer);
  t.ledger.submit_lp(lp, 0);
  auto ei = make_injection(4.0, lp.t_id, t.p.producer, t.p.consumer);
  try {
    t.ledger.submit_ei(ei, 6);
    FAIL("expired LP settled");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Expired);
  }
  CHECK(t.ledger.balance("c0") == 10'000);

  auto stray = make_injection(4.0, Digest{}, t.p.producer, t.p.consumer);
  CHECK_THROWS_AS(t.ledger.submit_ei(stray, 0), Error);

  Trade poor;
  poor.ledger.open_account("c0", 10);
  try {
    poor.ledger.submit_lp(make_payment(poor.en, 40.0, "c0", 5, poor.p.consumer), 0);
    FAIL("overdrawn payment accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientFunds);
  }

  Trade forged;
  auto wrong_signer = make_payment(forged.en, 40.0, "c0", 5, forged.p.producer);
  try {
    forged.ledger.submit_lp(wrong_signer, 0);
    FAIL("LP signed by the producer accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadSignature);
  }
}

TEST_CASE("expire marks stale payments") {
  Trade t;
  t.ledger.submit_lp(make_payment(t.en, 40.0, "c0", 5, t.p.consumer), 0);
  CHECK(t.ledger.expire(5) == 0);
  CHECK(t.ledger.expire(6) == 1);
  CHECK(t.ledger.expire(7) == 0);
}

TEST_CASE("price mismatch discards without penalty") {
  Trade t;
  auto lp = make_payment(t.en, 35.0, "c0", 10, t.p.consumer);
  t.ledger.submit_lp(lp, 0);
  CHECK(t.ledger.submit_ei(make_injection(4.0, lp.t_id, t.p.producer, t.p.consumer), 1) == EiOutcome::PriceMismatch);
  CHECK(t.ledger.pending() == 1);
  CHECK(t.ledger.reputation("p0") == 1.0);
  CHECK(t.ledger.balance("c0") == 10'000);
}

TEST_CASE("over-delivery is discarded") {
  Trade t;
  auto lp = make_payment(t.en, 40.0, "c0", 10, t.p.consumer);
  t.ledger.submit_lp(lp, 0);
  CHECK(t.ledger.submit_ei(make_injection(5.0, lp.t_id, t.p.producer, t.p.consumer), 1) == EiOutcome::OverDelivery);
  CHECK(t.ledger.balance("c0") == 10'000);
}

TEST_CASE("under-delivery halves the price and costs reputation") {
  Trade t;
  auto lp = make_payment(t.en, 40.0, "c0", 10, t.p.consumer);
  t.ledger.submit_lp(lp, 0);
  auto ei = make_injection(2.0, lp.t_id, t.p.producer, t.p.consumer);
  CHECK(t.ledger.submit_ei(ei, 1) == EiOutcome::Disputed);

  auto pu = t.ledger.pending_price_update(t.en.t_id);
  REQUIRE(pu.has_value());
  CHECK(pu->old_price == doctest::Approx(40.0));
  CHECK(pu->new_price == doctest::Approx(20.0));
  CHECK(pu->lp_id == lp.t_id);
  // 0.5 * (1 - 2/4)
  CHECK(t.ledger.reputation("p0") == doctest::Approx(0.75));
  CHECK(t.ledger.balance("c0") == 10'000);

  auto stale = make_payment(t.en, 40.0, "c0", 10, t.p.consumer, lp.t_id);
  CHECK_THROWS_AS(t.ledger.submit_lp(stale, 2), Error);

  auto reissue = make_payment(t.en, 20.0, "c0", 10, t.p.consumer, lp.t_id);
  t.ledger.submit_lp(reissue, 2);
  CHECK(t.ledger.balance("c0") == 10'000 - 20);
  CHECK(t.ledger.credited(t.p.producer.public_key) == 20);
  CHECK_FALSE(t.ledger.pending_price_update(t.en.t_id).has_value());

  t.ledger.seal_all();
  auto blocks = t.ledger.blocks();
  std::map<TxKind, int> kinds;
  for (const auto& b : *blocks)
    for (const auto& tx : b.txs)
      ++kinds[kind_of(tx)];
  CHECK(kinds[TxKind::EN] == 1);
  CHECK(kinds[TxKind::LP] == 2);
  CHECK(kinds[TxKind::EI] == 1);
  CHECK(kinds[TxKind::PU] == 1);
  CHECK(kinds[TxKind::REP] == 1);
  CHECK(t.ledger.verify());
}

TEST_CASE("zero delivery prices at zero and takes the full penalty") {
  Trade t;
  auto lp = make_payment(t.en, 40.0, "c0", 10, t.p.consumer);
  auto result = t.ledger.dispute_resolution(make_injection(0.0, lp.t_id, t.p.producer, t.p.consumer), lp, t.en);
  CHECK(result.pu.new_price == 0.0);
  CHECK(result.producer == "p0");
  CHECK(result.reputation_before == 1.0);
  CHECK(result.reputation_after == doctest::Approx(0.5));

  try {
    t.ledger.dispute_resolution(make_injection(4.0, lp.t_id, t.p.producer, t.p.consumer), lp, t.en);
    FAIL("full delivery disputed");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotUnderDelivery);
  }
}

TEST_CASE("reputation only moves down through the dispute contract") {
  Ledger ledger;
  ledger.set_reputation("p1", 0.3);
  CHECK(ledger.update_reputation("p1", -0.5, kDisputeContract) == 0.0);
  try {
    ledger.update_reputation("p1", -0.1, "p1");
    FAIL("agent changed its own reputation");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnauthorizedSource);
  }
  CHECK_THROWS_AS(ledger.update_reputation("p1", 0.1, kDisputeContract), Error);
  CHECK(ledger.reputation("p1") == 0.0);
  CHECK(ledger.reputation("nobody") == 1.0);
}

TEST_CASE("blocks hold at most ten transactions and chain by digest") {
  Parties p;
  Ledger ledger(LedgerConfig{false, 0.5});
  for (int i = 0; i < 16; ++i)
    ledger.submit_advertisement(make_plain_advertisement(Side::Ask, 10.0 + i, 1.0, p.consumer), Role::Consumer, p.ca);
  CHECK(ledger.seal_all() == 2);
  auto blocks = ledger.blocks();
  REQUIRE(blocks->size() == 2);
  CHECK((*blocks)[0].txs.size() == 10);
  CHECK((*blocks)[1].txs.size() == 6);
  CHECK((*blocks)[1].prev == (*blocks)[0].digest);
  CHECK(ledger.head() == (*blocks)[1].digest);
  CHECK(verify_chain(*blocks));

  auto tampered = *blocks;
  std::get<AdvertisementTx>(tampered[0].txs[3]).value = 99.0;
  CHECK_FALSE(verify_chain(tampered));

  auto relinked = *blocks;
  relinked[1].prev.bytes[0] ^= 1;
  CHECK_FALSE(verify_chain(relinked));

  std::ostringstream out;
  ledger.export_jsonl(out);
  int lines = 0;
  for (char c : out.str())
    lines += c == '\n';
  CHECK(lines == 18);
}

TEST_CASE("footprint accounting") {
  Parties p;
  Ledger empty;
  auto f0 = empty.measure_footprint();
  CHECK(f0.blocks == 0);
  CHECK(f0.total_bytes == 0);

  AdvertisementTx with = p.ad();
  AdvertisementTx without = make_plain_advertisement(Side::Offer, 12.0, 0.9, p.producer);
  CHECK(serialized_size(with) >= serialized_size(without) * 3 / 2);

  Ledger chain(LedgerConfig{false, 0.5});
  chain.submit_advertisement(with, Role::Producer, p.ca);
  chain.submit_advertisement(without, Role::Producer, p.ca);
  auto en = make_negotiation(1.0, 10.0, p.producer, p.consumer);
  chain.finalize_negotiation(en);
  chain.seal_all();
  auto f = chain.measure_footprint();
  CHECK(f.blocks == 1);
  CHECK(f.transactions == 3);
  CHECK(f.count_by_kind["AT"] == 2);
  CHECK(f.bytes_by_kind["AT"] == serialized_size(with) + serialized_size(without));
  CHECK(f.bytes_by_kind["EN"] == serialized_size(en));
  CHECK(f.total_bytes > f.bytes_by_kind["AT"] + f.bytes_by_kind["EN"]);
}
