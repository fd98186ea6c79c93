#include "gridtrade/sim/simulation.hpp"

#include "gridtrade/apol/apol.hpp"
#include "gridtrade/codec.hpp"
#include "gridtrade/error.hpp"
#include "gridtrade/market/priority.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <random>

namespace gridtrade::sim {
namespace {

struct Advert {
  std::size_t agent = 0; // producers first, then consumers
  double reputation = 1.0;
  std::int64_t sigma = 0;
};

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Groups from what the adverts reveal: partner reputation and the bus that
// stands for its sigma. Service charges use the true buses, which only the
// grid operator knows.
market::MarketInstance assemble(const Scenario& s, const std::vector<Advert>& p_ads, const std::vector<Advert>& c_ads) {
  market::MarketInstance m;
  m.producers = s.producers;
  m.consumers = s.consumers;
  m.tariff = s.tariff;
  m.group_count = s.groups;
  const auto P = s.producers.size();
  const auto C = s.consumers.size();
  for (std::size_t i = 0; i < P; ++i)
    m.producers[i].reputation = p_ads[i].reputation;
  for (std::size_t j = 0; j < C; ++j)
    m.consumers[j].reputation = c_ads[j].reputation;

  auto seen_bus = [&](const Advert& a) { return apol::representative_bus(a.sigma, s.location_resolution); };
  auto seen_distance = [&](const Advert& a, const Advert& b) {
    const auto x = seen_bus(a), y = seen_bus(b);
    if (!s.topology->has_bus(x) || !s.topology->has_bus(y))
      throw Error(Errc::ScenarioInvalid, "location segment maps outside the topology; lower location_resolution");
    return grid::electrical_distance(*s.topology, x, y);
  };

  if (P && C) {
    m.groups_p.assign(P, std::vector<int>(C, 0));
    m.groups_c.assign(C, std::vector<int>(P, 0));
    for (std::size_t i = 0; i < P; ++i) {
      std::vector<market::Candidate> cs;
      for (std::size_t j = 0; j < C; ++j)
        cs.push_back({j, c_ads[j].reputation, seen_distance(p_ads[i], c_ads[j])});
      auto part = market::prioritize(s.producers[i].alpha, s.producers[i].beta, cs, s.groups);
      for (std::size_t j = 0; j < C; ++j)
        m.groups_p[i][j] = part.group_of(j);
    }
    for (std::size_t j = 0; j < C; ++j) {
      std::vector<market::Candidate> cs;
      for (std::size_t i = 0; i < P; ++i)
        cs.push_back({i, p_ads[i].reputation, seen_distance(c_ads[j], p_ads[i])});
      auto part = market::prioritize(s.consumers[j].alpha, s.consumers[j].beta, cs, s.groups);
      for (std::size_t i = 0; i < P; ++i)
        m.groups_c[j][i] = part.group_of(i);
    }
  }

  std::vector<grid::BusId> rows, cols;
  for (const auto& p : s.producers)
    rows.push_back(p.bus);
  for (const auto& c : s.consumers)
    cols.push_back(c.bus);
  m.gamma = grid::distance_matrix(*s.topology, rows, cols);
  for (auto& g : m.gamma)
    g = grid::grid_service_charge(s.omega, grid::ElectricalDistance{g}).charge;
  return m;
}

void accumulate(IntervalResult& r, const market::MarketInstance& m, const market::Settlement& st) {
  const auto w = market::evaluate(m, st);
  r.p2p_volume = w.p2p_volume;
  r.grid_import = w.grid_import;
  r.grid_export = w.grid_export;
  r.service_charge = w.service_charge;
  r.producer_welfare = std::accumulate(w.producers.begin(), w.producers.end(), 0.0);
  r.consumer_welfare = std::accumulate(w.consumers.begin(), w.consumers.end(), 0.0);
  r.social_welfare = w.social;
  double sold = 0.0, bought = 0.0;
  for (std::size_t i = 0; i < m.producers.size(); ++i) {
    r.agents.push_back({m.producers[i].id, true, w.producers[i], st.producer_p2p(i), st.producer_grid[i], 1.0});
    sold += st.producer_p2p(i);
  }
  for (std::size_t j = 0; j < m.consumers.size(); ++j) {
    r.agents.push_back({m.consumers[j].id, false, w.consumers[j], st.consumer_p2p(j), st.consumer_grid[j], 1.0});
    bought += st.consumer_p2p(j);
  }
  // Production plus import must equal consumption plus export, with the grid as slack.
  const double supply = sold + r.grid_export + r.grid_import;
  const double demand = bought + r.grid_import + r.grid_export;
  r.conservation_gap = std::abs(supply - demand);

  const auto& stats = st.stats;
  r.iterations = stats.iterations;
  r.messages = stats.messages;
  r.messages_per_iteration = stats.messages_per_iteration();
  r.gamma_queries = stats.gamma_queries;
  r.work_units = stats.work_units;
  for (const auto& round : stats.rounds) {
    r.producer_variables += round.producer_variables;
    r.consumer_variables += round.consumer_variables;
  }
  r.converged = st.converged;
}

} // namespace

std::size_t MarketResult::n_t() const noexcept {
  std::size_t n = 0;
  for (const auto& r : intervals)
    n += r.n_t;
  return n;
}

double MarketResult::social_welfare() const noexcept {
  double w = 0.0;
  for (const auto& r : intervals)
    w += r.social_welfare;
  return w;
}

double MarketResult::grid_import() const noexcept {
  double g = 0.0;
  for (const auto& r : intervals)
    g += r.grid_import;
  return g;
}

bool MarketResult::converged() const noexcept {
  return std::all_of(intervals.begin(), intervals.end(), [](const auto& r) { return r.converged; });
}

struct MarketSession::State {
  Scenario s;
  apol::CaRegistry ca;
  std::vector<apol::MeterIdentity> meters; // producers, consumers, then the operator's
  std::vector<apol::MerkleCommitment> commits;
  std::vector<crypto::KeyPair> producer_keys;
  std::vector<crypto::KeyPair> consumer_keys;
  ledger::Ledger ledger;
  ledger::Tick clock = 0;

  explicit State(Scenario sc)
      : s(std::move(sc)), ca(s.seed, s.location_resolution), ledger(ledger::LedgerConfig{s.ad_mode, s.reputation_penalty}) {
    std::size_t owner = 0;
    for (const auto& p : s.producers) {
      meters.push_back(ca.install_meter(p.bus));
      commits.push_back(apol::build_commitment(s.merkle_leaves, s.seed, owner++));
      producer_keys.push_back(crypto::derive_keypair(s.seed, "trade/" + p.id, 0));
      ledger.register_key(producer_keys.back().public_key, p.id);
      ledger.set_reputation(p.id, p.reputation);
    }
    for (const auto& c : s.consumers) {
      meters.push_back(ca.install_meter(c.bus));
      commits.push_back(apol::build_commitment(s.merkle_leaves, s.seed, owner++));
      consumer_keys.push_back(crypto::derive_keypair(s.seed, "trade/" + c.id, 0));
      ledger.register_key(consumer_keys.back().public_key, c.id);
      ledger.set_reputation(c.id, c.reputation);
      ledger.open_account(c.id, s.consumer_balance);
    }
    meters.push_back(ca.install_meter(s.topology->slack()));
  }
};

MarketSession::MarketSession(Scenario scenario) {
  validate(scenario);
  state_ = std::make_unique<State>(std::move(scenario));
}

MarketSession::~MarketSession() = default;
MarketSession::MarketSession(MarketSession&&) noexcept = default;
MarketSession& MarketSession::operator=(MarketSession&&) noexcept = default;

const ledger::Ledger& MarketSession::ledger() const { return state_->ledger; }
const apol::CaRegistry& MarketSession::ca() const { return state_->ca; }
const Scenario& MarketSession::scenario() const { return state_->s; }

IntervalResult MarketSession::run_interval(int interval) {
  auto& st = *state_;
  const auto& s = st.s;
  const auto P = s.producers.size();
  const auto C = s.consumers.size();
  IntervalResult r;
  r.interval = interval;
  std::mt19937_64 rng(mix(s.seed, static_cast<std::uint64_t>(interval)));
  const auto blocks_before = st.ledger.block_count();

  // Advertisement with a certificate of location from a random peer meter.
  const double opening = 0.5 * (s.tariff.feed_in + s.tariff.retail);
  std::map<PublicKey, std::size_t> by_leaf;
  std::vector<Advert> adverts(P + C);
  for (std::size_t k = 0; k < P + C; ++k) {
    const bool producer = k < P;
    const auto& id = producer ? s.producers[k].id : s.consumers[k - P].id;
    const double eta = st.ledger.reputation(id);
    const auto verifier = apol::select_verifier(st.meters.size(), k, rng);
    auto response = apol::issue_col(st.meters[verifier], apol::request_col(st.meters[k], st.commits[k]), st.ca);
    // Offers carry a price, asks the requested energy.
    const double value = producer ? opening : s.consumers[k - P].e_max;
    auto at = ledger::make_advertisement(producer ? ledger::Side::Offer : ledger::Side::Ask, value, eta,
                                         st.commits[k], response, st.meters[k].sigma);
    by_leaf[at.col->pk_a] = k;
    st.ledger.submit_advertisement(at,
                                   s.ad_mode ? ledger::Role::GridOperator
                                             : (producer ? ledger::Role::Producer : ledger::Role::Consumer),
                                   st.ca);
    adverts[k] = {k, at.reputation, at.col->sigma};
    r.adverts.push_back(at);
    ++r.advertisements;
  }
  if (s.ad_mode) {
    // Agents learn their counterparts from the database, keyed by one-time leaf keys.
    for (const auto& rec : st.ledger.query_ads({})) {
      auto it = by_leaf.find(rec.at.col->pk_a);
      if (it != by_leaf.end())
        adverts[it->second] = {it->second, rec.at.reputation, *rec.sigma};
    }
  }
  st.clock += 1;

  std::vector<Advert> p_ads(adverts.begin(), adverts.begin() + static_cast<std::ptrdiff_t>(P));
  std::vector<Advert> c_ads(adverts.begin() + static_cast<std::ptrdiff_t>(P), adverts.end());
  auto m = assemble(s, p_ads, c_ads);
  auto settlement = s.p2p ? market::negotiate(m, s.solver) : market::grid_only(m);
  accumulate(r, m, settlement);
  st.clock += settlement.stats.iterations;

  // Trading: EN, then LP and EI as an atomic pair, then DR on shortfall.
  for (const auto& tr : settlement.trades) {
    const auto& prod = s.producers[tr.producer];
    const auto& cons = s.consumers[tr.consumer];
    const auto& pk = st.producer_keys[tr.producer];
    const auto& ck = st.consumer_keys[tr.consumer];
    auto en = ledger::make_negotiation(tr.energy, tr.price, pk, ck);
    st.ledger.finalize_negotiation(en);
    auto lp = ledger::make_payment(en, tr.energy * tr.price, cons.id, st.clock + s.lp_expiry, ck);
    st.ledger.submit_lp(lp, st.clock);

    TradeRecord rec;
    rec.producer = prod.id;
    rec.consumer = cons.id;
    rec.energy = tr.energy;
    rec.delivered = tr.energy * s.delivery_fraction(prod.id, interval);
    rec.price = tr.price;
    rec.charge = tr.charge;
    rec.round = tr.round;
    rec.en_id = to_hex(en.t_id.view());
    auto ei = ledger::make_injection(rec.delivered, lp.t_id, pk, ck);
    rec.outcome = st.ledger.submit_ei(ei, st.clock + 1);
    rec.paid = lp.price;
    if (rec.outcome == ledger::EiOutcome::Disputed) {
      auto pu = st.ledger.pending_price_update(en.t_id);
      auto again = ledger::make_payment(en, pu->new_price, cons.id, st.clock + 1 + s.lp_expiry, ck, lp.t_id);
      st.ledger.submit_lp(again, st.clock + 1);
      rec.paid = again.price;
      ++r.disputes;
    } else if (rec.outcome != ledger::EiOutcome::Settled) {
      rec.paid = 0.0;
    }
    r.trades.push_back(rec);
  }
  st.clock += 2;

  st.ledger.seal_all();
  auto chain = st.ledger.blocks();
  r.blocks_sealed = chain->size() - blocks_before;
  for (auto b = chain->begin() + static_cast<std::ptrdiff_t>(blocks_before); b != chain->end(); ++b)
    for (const auto& tx : b->txs)
      r.n_t += ledger::kind_of(tx) == ledger::TxKind::EI;
  for (auto& a : r.agents)
    a.reputation = st.ledger.reputation(a.agent);

  done_.push_back(r);
  return r;
}

MarketResult MarketSession::result() const {
  const auto& s = state_->s;
  MarketResult out;
  out.scenario = s.name;
  out.seed = s.seed;
  out.omega = s.omega;
  out.groups = s.groups;
  out.ad_mode = s.ad_mode;
  out.p2p = s.p2p;
  out.intervals = done_;
  out.footprint = state_->ledger.measure_footprint();
  out.blocks = out.footprint.blocks;
  out.head = to_hex(state_->ledger.head().view());
  out.chain_valid = state_->ledger.verify();
  return out;
}

market::MarketInstance build_instance(const Scenario& s) {
  std::vector<Advert> p_ads, c_ads;
  for (std::size_t i = 0; i < s.producers.size(); ++i)
    p_ads.push_back({i, s.producers[i].reputation, apol::quantize_location(s.producers[i].bus, s.location_resolution)});
  for (std::size_t j = 0; j < s.consumers.size(); ++j)
    c_ads.push_back({j, s.consumers[j].reputation, apol::quantize_location(s.consumers[j].bus, s.location_resolution)});
  return assemble(s, p_ads, c_ads);
}

MarketResult run_scenario(const Scenario& s) {
  MarketSession session(s);
  for (int t = 0; t < s.intervals; ++t)
    session.run_interval(t);
  return session.result();
}

MarketResult run_interval(const Scenario& s, int interval) {
  if (interval < 0 || interval >= s.intervals)
    throw Error(Errc::InvalidParameter, "interval index out of range");
  MarketSession session(s);
  for (int t = 0; t <= interval; ++t)
    session.run_interval(t);
  auto out = session.result();
  out.intervals.erase(out.intervals.begin(), out.intervals.end() - 1);
  return out;
}

MarketResult run_grid_only(const Scenario& s) {
  auto off = s;
  off.p2p = false;
  return run_scenario(off);
}

std::vector<MarketResult> run_sweep(const Scenario& s, const std::vector<double>& omegas, Execution exec) {
  if (!std::is_sorted(omegas.begin(), omegas.end()))
    throw Error(Errc::InvalidParameter, "omega values must be sorted ascending");
  std::vector<MarketResult> out(omegas.size());
  std::vector<std::exception_ptr> errors(omegas.size());
  const auto n = static_cast<long>(omegas.size());
#pragma omp parallel for schedule(dynamic) if (exec == Execution::Parallel)
  for (long k = 0; k < n; ++k) {
    try {
      auto run = s;
      run.omega = omegas[static_cast<std::size_t>(k)];
      run.solver.execution = Execution::Serial;
      out[static_cast<std::size_t>(k)] = run_scenario(run);
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
  return out;
}

Comparison compare_p2p_vs_grid(const Scenario& s) {
  Comparison c;
  auto on = s;
  on.p2p = true;
  c.with_p2p = run_scenario(on);
  c.without_p2p = run_grid_only(s);
  auto total = [](const MarketResult& r, double IntervalResult::*field) {
    double v = 0.0;
    for (const auto& i : r.intervals)
      v += i.*field;
    return v;
  };
  const std::pair<const char*, double IntervalResult::*> rows[] = {
      {"grid_import_kwh", &IntervalResult::grid_import},
      {"grid_export_kwh", &IntervalResult::grid_export},
      {"consumer_welfare_cents", &IntervalResult::consumer_welfare},
      {"producer_welfare_cents", &IntervalResult::producer_welfare},
      {"service_charge_cents", &IntervalResult::service_charge},
  };
  for (const auto& [name, field] : rows)
    c.rows.push_back({name, total(c.with_p2p, field), total(c.without_p2p, field)});
  return c;
}

Ablation prioritization_ablation(const Scenario& s) {
  auto side = [](const MarketResult& r) {
    AblationSide a;
    a.groups = r.groups;
    std::size_t messages = 0;
    for (const auto& i : r.intervals) {
      a.producer_variables += i.producer_variables;
      a.consumer_variables += i.consumer_variables;
      a.iterations += i.iterations;
      a.work_units += i.work_units;
      messages += i.messages;
    }
    a.messages_per_iteration = a.iterations ? static_cast<double>(messages) / static_cast<double>(a.iterations) : 0.0;
    a.n_t = r.n_t();
    a.social_welfare = r.social_welfare();
    return a;
  };
  Ablation out;
  out.with = side(run_scenario(s));
  auto flat = s;
  flat.groups = 1;
  out.without = side(run_scenario(flat));
  return out;
}

ledger::Footprint advertisement_footprint(std::size_t ats_per_epoch, std::size_t epochs, bool ad_mode,
                                          std::uint64_t seed, std::size_t negotiations_per_epoch) {
  const auto producer = crypto::derive_keypair(seed, "footprint/producer", 0);
  const auto consumer = crypto::derive_keypair(seed, "footprint/consumer", 0);
  apol::CaRegistry ca(seed);
  std::vector<apol::MeterIdentity> meters;
  std::vector<apol::MerkleCommitment> commits;
  for (std::size_t k = 0; k < ats_per_epoch; ++k) {
    meters.push_back(ca.install_meter(static_cast<grid::BusId>(k % 32 + 1)));
    commits.push_back(apol::build_commitment(std::max<std::size_t>(epochs, 1), seed, k));
  }
  meters.push_back(ca.install_meter(33));
  ledger::Ledger ledger(ledger::LedgerConfig{ad_mode, 0.5});
  std::mt19937_64 rng(seed);
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t k = 0; k < ats_per_epoch; ++k) {
      const auto verifier = apol::select_verifier(meters.size(), k, rng);
      auto response = apol::issue_col(meters[verifier], apol::request_col(meters[k], commits[k]), ca);
      auto at = ledger::make_advertisement(ledger::Side::Offer, 15.0, 1.0, commits[k], response, meters[k].sigma);
      ledger.submit_advertisement(at, ad_mode ? ledger::Role::GridOperator : ledger::Role::Producer, ca);
    }
    for (std::size_t k = 0; k < negotiations_per_epoch; ++k)
      ledger.finalize_negotiation(ledger::make_negotiation(1.0 + static_cast<double>(e * negotiations_per_epoch + k), 12.0, producer, consumer));
    while (ledger.pending() >= ledger::kBlockCapacity)
      ledger.append_block();
  }
  if (ledger.pending() > 0)
    ledger.seal_all();
  return ledger.measure_footprint();
}

} // namespace gridtrade::sim
