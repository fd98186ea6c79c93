#pragma once

#include "gridtrade/market/agents.hpp"
#include "gridtrade/parallel.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace gridtrade::market {

struct SolverConfig {
  double epsilon = 1e-3;
  double rho_lambda = 0.01;
  double rho_mu = 0.001;
  double zeta_scale = 50.0;         // zeta^k = 1 / (1 + k / zeta_scale)
  // Producer pulls its proposal toward the consumer's by this fraction each
  // step. The term vanishes at any balanced point.
  double consensus_damping = 0.02;
  std::size_t max_iter = 200000;    // per group round
  double min_trade_kwh = 1e-2;      // smaller cleared volumes are dropped
  // When set, P2P volumes are bounded by [0, e_max] and any shortfall against
  // e_min is settled with the grid. Otherwise [e_min, e_max] binds the P2P total.
  bool grid_backstop = true;
  Execution execution = Execution::Serial;
};

double zeta_schedule(std::size_t k, double scale);

// One bilateral position held by one side of the negotiation.
struct Leg {
  std::size_t partner = 0;
  double price = 0.0;    // lambda_ij, producer-owned; consumer keeps the last received
  double energy = 0.0;   // own proposal e_ij (producer) or e_ji (consumer)
  double setpoint = 0.0; // e~
  double gamma = 0.0;    // service charge for this pair
};

struct Duals {
  double lower = 0.0; // mu underline
  double upper = 0.0; // mu overline
};

struct AgentState {
  std::vector<Leg> legs;
  Duals duals;
  double committed = 0.0;   // energy cleared in earlier rounds
  double lower_bound = 0.0; // bounds on committed + sum of legs
  double upper_bound = 0.0;

  double total() const noexcept;
  const Leg* find(std::size_t partner) const noexcept;
};

struct StepConfig {
  double rho_lambda = 0.01;
  double rho_mu = 0.001;
  double zeta = 1.0;
  double damping = 0.0;
  GridTariff tariff;
};

struct StepDelta {
  double price = 0.0;  // max |lambda' - lambda| over legs
  double energy = 0.0; // max |e' - e| over legs
};

// Positional kernels: received[l] belongs to state.legs[l].
// Producer receives the consumers' energies e_ji, consumer the prices lambda_ij.
StepDelta producer_step(AgentState& state, const ProducerParams& p, std::span<const double> received,
                        const StepConfig& cfg);
StepDelta consumer_step(AgentState& state, const ConsumerParams& c, std::span<const double> received,
                        const StepConfig& cfg);

struct PartnerValue {
  std::size_t partner = 0;
  double value = 0.0;
};

// Partner-keyed forms. Every active leg needs exactly one received value;
// charges are optional per partner. Throws UnknownPartner.
std::vector<PartnerValue> producer_step(AgentState& state, const ProducerParams& p,
                                        std::span<const PartnerValue> received_energy,
                                        std::span<const PartnerValue> charges, const StepConfig& cfg);
std::vector<PartnerValue> consumer_step(AgentState& state, const ConsumerParams& c,
                                        std::span<const PartnerValue> received_price,
                                        std::span<const PartnerValue> charges, const StepConfig& cfg);

// Everything negotiate needs. gamma is producers x consumers, row-major.
// groups_p[i][j] is the group producer i assigned to consumer j (1-based, 0 =
// not a candidate); groups_c[j][i] likewise. Empty means everyone in group 1.
struct MarketInstance {
  std::vector<ProducerParams> producers;
  std::vector<ConsumerParams> consumers;
  std::vector<double> gamma;
  GridTariff tariff;
  std::vector<std::vector<int>> groups_p;
  std::vector<std::vector<int>> groups_c;
  int group_count = 1;

  double charge(std::size_t i, std::size_t j) const {
    return gamma.empty() ? 0.0 : gamma[i * consumers.size() + j];
  }
  int producer_group(std::size_t i, std::size_t j) const {
    return groups_p.empty() ? 1 : groups_p[i][j];
  }
  int consumer_group(std::size_t j, std::size_t i) const {
    return groups_c.empty() ? 1 : groups_c[j][i];
  }
};

struct ClearedTrade {
  std::size_t producer = 0;
  std::size_t consumer = 0;
  double energy = 0.0;          // agreed volume, mean of both proposals
  double producer_energy = 0.0; // e_ij
  double consumer_energy = 0.0; // e_ji
  double price = 0.0;
  double charge = 0.0;
  int round = 1;
};

struct RoundStats {
  int group = 1;
  std::size_t active_pairs = 0;
  std::size_t producers = 0;
  std::size_t consumers = 0;
  std::size_t iterations = 0;
  std::size_t messages = 0;
  std::size_t work_units = 0;
  std::size_t producer_variables = 0; // 2 per leg + 2 duals, summed
  std::size_t consumer_variables = 0; // 1 per leg + 2 duals, summed
  bool converged = true;
};

struct NegotiationStats {
  std::size_t iterations = 0;     // summed over rounds; one tick each
  std::size_t messages = 0;       // price and energy messages
  std::size_t gamma_queries = 0;  // request/response pairs with the grid operator
  std::size_t work_units = 0;     // counted arithmetic, see negotiation.cpp
  std::vector<RoundStats> rounds;

  double messages_per_iteration() const noexcept {
    return iterations ? static_cast<double>(messages) / static_cast<double>(iterations) : 0.0;
  }
};

struct Settlement {
  std::vector<ClearedTrade> trades;
  std::vector<double> producer_grid; // e_i^G, exported at feed-in
  std::vector<double> consumer_grid; // e_j^G, imported at retail
  std::size_t iterations = 0;
  bool converged = true;
  NegotiationStats stats;

  double producer_p2p(std::size_t i) const;
  double consumer_p2p(std::size_t j) const;
};

void validate(const MarketInstance& m);

// Group-by-group decentralized settlement. Never throws on non-convergence;
// the settlement comes back flagged instead.
Settlement negotiate(const MarketInstance& m, const SolverConfig& cfg);

// Grid exchange that makes each agent meet its minimum given its P2P volume.
void settle_residuals(const MarketInstance& m, Settlement& s);

struct WelfareReport {
  std::vector<double> producers;
  std::vector<double> consumers;
  double social = 0.0;
  double grid_import = 0.0;    // sum e_j^G
  double grid_export = 0.0;    // sum e_i^G
  double service_charge = 0.0; // sum e * gamma over trades
  double p2p_volume = 0.0;
};

WelfareReport evaluate(const MarketInstance& m, const Settlement& s);

// Same agents without a P2P market: every agent trades its minimum with the grid.
Settlement grid_only(const MarketInstance& m);

} // namespace gridtrade::market
