#include "gridtrade/market/negotiation.hpp"

#include "gridtrade/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gridtrade::market {
namespace {

// Counted arithmetic per leg update (producer side + consumer side) and per
// agent (total and dual updates). Used as the simulated cost measure.
constexpr std::size_t kPairOps = 17;
constexpr std::size_t kAgentOps = 9;

double clamp_price(double price, const GridTariff& t) {
  return std::clamp(std::max(0.0, price), t.feed_in, t.retail);
}

void update_duals(AgentState& s, double total, double rho_mu) {
  s.duals.lower = std::max(0.0, s.duals.lower + rho_mu * (s.lower_bound - total));
  s.duals.upper = std::max(0.0, s.duals.upper + rho_mu * (total - s.upper_bound));
}

std::size_t leg_index(const AgentState& s, std::size_t partner) {
  for (std::size_t l = 0; l < s.legs.size(); ++l)
    if (s.legs[l].partner == partner)
      return l;
  throw Error(Errc::UnknownPartner, "partner " + std::to_string(partner) + " has no active leg");
}

// Reorders partner-keyed values to leg order; each leg must appear exactly once.
std::vector<double> by_leg(const AgentState& s, std::span<const PartnerValue> values) {
  std::vector<double> out(s.legs.size(), 0.0);
  std::vector<bool> seen(s.legs.size(), false);
  for (const auto& v : values) {
    auto l = leg_index(s, v.partner);
    out[l] = v.value;
    seen[l] = true;
  }
  for (std::size_t l = 0; l < seen.size(); ++l)
    if (!seen[l])
      throw Error(Errc::MismatchedPartnerLists,
                  "no value received for partner " + std::to_string(s.legs[l].partner));
  return out;
}

void apply_charges(AgentState& s, std::span<const PartnerValue> charges) {
  for (const auto& c : charges)
    s.legs[leg_index(s, c.partner)].gamma = c.value;
}

struct PeerRef {
  std::size_t agent = 0;
  std::size_t leg = 0;
};

struct Round {
  std::vector<AgentState>& prod;
  std::vector<AgentState>& cons;
  std::vector<std::vector<PeerRef>> prod_peer; // producer leg -> consumer leg
  std::vector<std::vector<PeerRef>> cons_peer; // consumer leg -> producer leg
};

template <class Params, class Step>
void sweep(std::vector<AgentState>& self, const std::vector<Params>& params,
           const std::vector<std::vector<PeerRef>>& peers, const std::vector<AgentState>& other,
           bool take_price, const StepConfig& cfg, std::vector<StepDelta>& deltas, Execution exec,
           Step step) {
  const auto n = static_cast<std::ptrdiff_t>(self.size());
  const bool parallel = exec == Execution::Parallel;
#pragma omp parallel if (parallel)
  {
    std::vector<double> received;
#pragma omp for schedule(static)
    for (std::ptrdiff_t a = 0; a < n; ++a) {
      auto& s = self[static_cast<std::size_t>(a)];
      if (s.legs.empty()) {
        deltas[static_cast<std::size_t>(a)] = {};
        continue;
      }
      const auto& refs = peers[static_cast<std::size_t>(a)];
      received.resize(refs.size());
      for (std::size_t l = 0; l < refs.size(); ++l) {
        const auto& leg = other[refs[l].agent].legs[refs[l].leg];
        received[l] = take_price ? leg.price : leg.energy;
      }
      deltas[static_cast<std::size_t>(a)] = step(s, params[static_cast<std::size_t>(a)], received, cfg);
    }
  }
}

} // namespace

double zeta_schedule(std::size_t k, double scale) {
  return 1.0 / (1.0 + static_cast<double>(k) / scale);
}

double AgentState::total() const noexcept {
  double sum = committed;
  for (const auto& l : legs)
    sum += l.energy;
  return sum;
}

const Leg* AgentState::find(std::size_t partner) const noexcept {
  for (const auto& l : legs)
    if (l.partner == partner)
      return &l;
  return nullptr;
}

StepDelta producer_step(AgentState& s, const ProducerParams& p, std::span<const double> received,
                        const StepConfig& cfg) {
  if (received.size() != s.legs.size())
    throw Error(Errc::MismatchedPartnerLists, "one received energy per leg expected");
  const double total = s.total();
  update_duals(s, total, cfg.rho_mu);
  StepDelta d;
  for (std::size_t l = 0; l < s.legs.size(); ++l) {
    auto& leg = s.legs[l];
    const double price = clamp_price(leg.price - cfg.rho_lambda * (leg.energy - received[l]), cfg.tariff);
    leg.setpoint = (price - leg.gamma - s.duals.upper + s.duals.lower - p.b) / (2.0 * p.a);
    const double energy = std::max(
        0.0, leg.energy + cfg.zeta * (leg.setpoint - total) + cfg.damping * (received[l] - leg.energy));
    d.price = std::max(d.price, std::abs(price - leg.price));
    d.energy = std::max(d.energy, std::abs(energy - leg.energy));
    leg.price = price;
    leg.energy = energy;
  }
  return d;
}

StepDelta consumer_step(AgentState& s, const ConsumerParams& c, std::span<const double> received,
                        const StepConfig& cfg) {
  if (received.size() != s.legs.size())
    throw Error(Errc::MismatchedPartnerLists, "one received price per leg expected");
  const double total = s.total();
  update_duals(s, total, cfg.rho_mu);
  StepDelta d;
  for (std::size_t l = 0; l < s.legs.size(); ++l) {
    auto& leg = s.legs[l];
    d.price = std::max(d.price, std::abs(received[l] - leg.price));
    leg.price = received[l];
    leg.setpoint = (c.b - leg.price - leg.gamma - s.duals.upper + s.duals.lower) / (2.0 * c.a);
    const double energy = std::max(0.0, leg.energy + cfg.zeta * (leg.setpoint - total));
    d.energy = std::max(d.energy, std::abs(energy - leg.energy));
    leg.energy = energy;
  }
  return d;
}

std::vector<PartnerValue> producer_step(AgentState& s, const ProducerParams& p,
                                        std::span<const PartnerValue> received_energy,
                                        std::span<const PartnerValue> charges, const StepConfig& cfg) {
  apply_charges(s, charges);
  auto received = by_leg(s, received_energy);
  producer_step(s, p, received, cfg);
  std::vector<PartnerValue> out;
  out.reserve(s.legs.size());
  for (const auto& leg : s.legs)
    out.push_back({leg.partner, leg.price});
  return out;
}

std::vector<PartnerValue> consumer_step(AgentState& s, const ConsumerParams& c,
                                        std::span<const PartnerValue> received_price,
                                        std::span<const PartnerValue> charges, const StepConfig& cfg) {
  apply_charges(s, charges);
  auto received = by_leg(s, received_price);
  consumer_step(s, c, received, cfg);
  std::vector<PartnerValue> out;
  out.reserve(s.legs.size());
  for (const auto& leg : s.legs)
    out.push_back({leg.partner, leg.energy});
  return out;
}

double Settlement::producer_p2p(std::size_t i) const {
  double sum = 0.0;
  for (const auto& t : trades)
    if (t.producer == i)
      sum += t.energy;
  return sum;
}

double Settlement::consumer_p2p(std::size_t j) const {
  double sum = 0.0;
  for (const auto& t : trades)
    if (t.consumer == j)
      sum += t.energy;
  return sum;
}

void validate(const MarketInstance& m) {
  validate(m.tariff);
  for (const auto& p : m.producers)
    validate(p);
  for (const auto& c : m.consumers)
    validate(c);
  const auto np = m.producers.size(), nc = m.consumers.size();
  if (!m.gamma.empty() && m.gamma.size() != np * nc)
    throw Error(Errc::MismatchedPartnerLists, "service charge matrix has the wrong size");
  for (double g : m.gamma)
    if (!(g >= 0.0))
      throw Error(Errc::NegativeRate, "service charges must be >= 0");
  if (m.group_count < 1)
    throw Error(Errc::InvalidParameter, "group count must be >= 1");
  if (!m.groups_p.empty() || !m.groups_c.empty()) {
    if (m.groups_p.size() != np || m.groups_c.size() != nc)
      throw Error(Errc::MismatchedPartnerLists, "group tables do not match the agent lists");
    for (const auto& row : m.groups_p)
      if (row.size() != nc)
        throw Error(Errc::MismatchedPartnerLists, "producer group row has the wrong size");
    for (const auto& row : m.groups_c)
      if (row.size() != np)
        throw Error(Errc::MismatchedPartnerLists, "consumer group row has the wrong size");
  }
}

Settlement negotiate(const MarketInstance& m, const SolverConfig& cfg) {
  validate(m);
  if (!(cfg.epsilon > 0.0 && cfg.rho_lambda > 0.0 && cfg.rho_mu > 0.0 && cfg.zeta_scale > 0.0) ||
      !(cfg.consensus_damping >= 0.0 && cfg.consensus_damping < 1.0) || cfg.max_iter == 0)
    throw Error(Errc::InvalidParameter, "solver configuration must be positive");

  const auto np = m.producers.size(), nc = m.consumers.size();
  std::vector<AgentState> prod(np), cons(nc);
  for (std::size_t i = 0; i < np; ++i) {
    const auto& p = m.producers[i];
    prod[i].lower_bound = cfg.grid_backstop ? 0.0 : p.e_min;
    prod[i].upper_bound = p.e_max;
  }
  for (std::size_t j = 0; j < nc; ++j) {
    const auto& c = m.consumers[j];
    cons[j].lower_bound = cfg.grid_backstop ? 0.0 : c.e_min;
    cons[j].upper_bound = c.e_max;
  }

  Settlement out;
  const double start_price = 0.5 * (m.tariff.feed_in + m.tariff.retail);
  std::vector<StepDelta> prod_delta(np), cons_delta(nc);

  for (int group = 1; group <= m.group_count; ++group) {
    for (auto& s : prod)
      s.legs.clear();
    for (auto& s : cons)
      s.legs.clear();
    std::vector<std::vector<PeerRef>> prod_peer(np), cons_peer(nc);
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < np; ++i) {
      if (prod[i].upper_bound - prod[i].committed <= cfg.epsilon)
        continue;
      for (std::size_t j = 0; j < nc; ++j) {
        if (m.producer_group(i, j) != group || m.consumer_group(j, i) != group)
          continue;
        if (cons[j].upper_bound - cons[j].committed <= cfg.epsilon)
          continue;
        const double gamma = m.charge(i, j);
        prod_peer[i].push_back({j, cons[j].legs.size()});
        cons_peer[j].push_back({i, prod[i].legs.size()});
        prod[i].legs.push_back({j, start_price, 0.0, 0.0, gamma});
        cons[j].legs.push_back({i, start_price, 0.0, 0.0, gamma});
        ++pairs;
      }
    }
    if (pairs == 0)
      continue;

    RoundStats rs;
    rs.group = group;
    rs.active_pairs = pairs;
    std::size_t agents = 0;
    for (const auto& s : prod)
      if (!s.legs.empty()) {
        ++rs.producers;
        rs.producer_variables += 2 * s.legs.size() + 2;
      }
    for (const auto& s : cons)
      if (!s.legs.empty()) {
        ++rs.consumers;
        rs.consumer_variables += s.legs.size() + 2;
      }
    agents = rs.producers + rs.consumers;
    out.stats.gamma_queries += pairs;

    StepConfig step{cfg.rho_lambda, cfg.rho_mu, 1.0, cfg.consensus_damping, m.tariff};
    bool converged = false;
    std::size_t k = 0;
    while (k < cfg.max_iter) {
      step.zeta = zeta_schedule(k, cfg.zeta_scale);
      sweep(prod, m.producers, prod_peer, cons, false, step, prod_delta, cfg.execution,
            [](AgentState& s, const ProducerParams& p, std::span<const double> r, const StepConfig& c) {
              return producer_step(s, p, r, c);
            });
      sweep(cons, m.consumers, cons_peer, prod, true, step, cons_delta, cfg.execution,
            [](AgentState& s, const ConsumerParams& p, std::span<const double> r, const StepConfig& c) {
              return consumer_step(s, p, r, c);
            });
      ++k;
      double price_change = 0.0, energy_change = 0.0, imbalance = 0.0;
      for (const auto& d : prod_delta)
        price_change = std::max(price_change, d.price);
      for (const auto& d : cons_delta)
        energy_change = std::max(energy_change, d.energy);
      for (std::size_t i = 0; i < np; ++i)
        for (std::size_t l = 0; l < prod[i].legs.size(); ++l) {
          const auto& ref = prod_peer[i][l];
          imbalance = std::max(imbalance, std::abs(prod[i].legs[l].energy - cons[ref.agent].legs[ref.leg].energy));
        }
      if (price_change < cfg.epsilon && energy_change < cfg.epsilon && imbalance < cfg.epsilon) {
        converged = true;
        break;
      }
    }
    rs.iterations = k;
    rs.messages = 2 * pairs * k;
    rs.work_units = k * (pairs * kPairOps + agents * kAgentOps);
    rs.converged = converged;
    out.converged = out.converged && converged;
    out.stats.iterations += rs.iterations;
    out.stats.messages += rs.messages;
    out.stats.work_units += rs.work_units;
    out.stats.rounds.push_back(rs);

    for (std::size_t i = 0; i < np; ++i)
      for (std::size_t l = 0; l < prod[i].legs.size(); ++l) {
        const auto& pl = prod[i].legs[l];
        const auto& ref = prod_peer[i][l];
        const auto& cl = cons[ref.agent].legs[ref.leg];
        const double energy = 0.5 * (pl.energy + cl.energy);
        if (energy < cfg.min_trade_kwh)
          continue;
        out.trades.push_back({i, ref.agent, energy, pl.energy, cl.energy, pl.price, pl.gamma, group});
        prod[i].committed += energy;
        cons[ref.agent].committed += energy;
      }
  }
  for (auto& s : prod)
    s.legs.clear();
  for (auto& s : cons)
    s.legs.clear();

  out.iterations = out.stats.iterations;
  std::sort(out.trades.begin(), out.trades.end(), [](const ClearedTrade& a, const ClearedTrade& b) {
    return a.producer != b.producer ? a.producer < b.producer : a.consumer < b.consumer;
  });
  settle_residuals(m, out);
  return out;
}

void settle_residuals(const MarketInstance& m, Settlement& s) {
  s.producer_grid.assign(m.producers.size(), 0.0);
  s.consumer_grid.assign(m.consumers.size(), 0.0);
  for (std::size_t i = 0; i < m.producers.size(); ++i)
    s.producer_grid[i] = std::max(0.0, m.producers[i].e_min - s.producer_p2p(i));
  for (std::size_t j = 0; j < m.consumers.size(); ++j)
    s.consumer_grid[j] = std::max(0.0, m.consumers[j].e_min - s.consumer_p2p(j));
}

WelfareReport evaluate(const MarketInstance& m, const Settlement& s) {
  WelfareReport r;
  const auto np = m.producers.size(), nc = m.consumers.size();
  std::vector<std::vector<TradeLeg>> pl(np), cl(nc);
  for (const auto& t : s.trades) {
    pl[t.producer].push_back({t.energy, t.price, t.charge});
    cl[t.consumer].push_back({t.energy, t.price, t.charge});
    r.service_charge += t.energy * t.charge;
    r.p2p_volume += t.energy;
  }
  r.producers.resize(np);
  r.consumers.resize(nc);
  for (std::size_t i = 0; i < np; ++i) {
    const double g = i < s.producer_grid.size() ? s.producer_grid[i] : 0.0;
    r.producers[i] = producer_welfare(m.producers[i], pl[i], g, m.tariff);
    r.grid_export += g;
    r.social += r.producers[i];
  }
  for (std::size_t j = 0; j < nc; ++j) {
    const double g = j < s.consumer_grid.size() ? s.consumer_grid[j] : 0.0;
    r.consumers[j] = consumer_welfare(m.consumers[j], cl[j], g, m.tariff);
    r.grid_import += g;
    r.social += r.consumers[j];
  }
  return r;
}

Settlement grid_only(const MarketInstance& m) {
  Settlement s;
  settle_residuals(m, s);
  return s;
}

} // namespace gridtrade::market
