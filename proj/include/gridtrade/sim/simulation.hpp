#pragma once

#include "gridtrade/apol/apol.hpp"
#include "gridtrade/ledger/ledger.hpp"
#include "gridtrade/market/negotiation.hpp"
#include "gridtrade/sim/scenario.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace gridtrade::sim {

struct TradeRecord {
  std::string producer;
  std::string consumer;
  double energy = 0.0;    // agreed kWh
  double delivered = 0.0; // injected kWh
  double price = 0.0;     // cents per kWh
  double charge = 0.0;    // service charge, cents per kWh
  double paid = 0.0;      // cents, after any dispute
  int round = 1;
  ledger::EiOutcome outcome = ledger::EiOutcome::Settled;
  std::string en_id;
};

struct AgentWelfare {
  std::string agent;
  bool producer = true;
  double welfare = 0.0;
  double p2p = 0.0;  // kWh traded with peers
  double grid = 0.0; // kWh with the grid
  double reputation = 1.0;
};

struct IntervalResult {
  int interval = 0;
  std::vector<TradeRecord> trades;
  std::vector<AgentWelfare> agents;
  std::size_t n_t = 0; // sealed EI transactions
  double p2p_volume = 0.0;
  double grid_import = 0.0;
  double grid_export = 0.0;
  double service_charge = 0.0;
  double producer_welfare = 0.0;
  double consumer_welfare = 0.0;
  double social_welfare = 0.0;
  double conservation_gap = 0.0;
  std::size_t iterations = 0; // negotiation ticks
  std::size_t messages = 0;
  double messages_per_iteration = 0.0;
  std::size_t gamma_queries = 0;
  std::size_t work_units = 0;
  std::size_t producer_variables = 0;
  std::size_t consumer_variables = 0;
  std::size_t advertisements = 0;
  std::size_t disputes = 0;
  std::size_t blocks_sealed = 0;
  bool converged = true;
  std::vector<ledger::AdvertisementTx> adverts; // with their CoLs, not part of the JSON report
};

struct MarketResult {
  std::string scenario;
  std::uint64_t seed = 0;
  double omega = 0.0;
  int groups = 1;
  bool ad_mode = true;
  bool p2p = true;
  std::vector<IntervalResult> intervals;
  ledger::Footprint footprint;
  std::size_t blocks = 0;
  std::string head;
  bool chain_valid = true;

  std::size_t n_t() const noexcept;
  double social_welfare() const noexcept;
  double grid_import() const noexcept;
  bool converged() const noexcept;
};

// One market session: CA, meters, commitments and the ledger persist across
// intervals, so reputation penalties carry into later prioritization.
class MarketSession {
public:
  explicit MarketSession(Scenario scenario);
  ~MarketSession();
  MarketSession(MarketSession&&) noexcept;
  MarketSession& operator=(MarketSession&&) noexcept;

  IntervalResult run_interval(int interval);
  MarketResult result() const;
  const ledger::Ledger& ledger() const;
  const apol::CaRegistry& ca() const;
  const Scenario& scenario() const;

private:
  struct State;
  std::unique_ptr<State> state_;
  std::vector<IntervalResult> done_;
};

// Instance the negotiation sees for the given reputations and locations.
market::MarketInstance build_instance(const Scenario& s);

MarketResult run_scenario(const Scenario& s);
// Runs intervals 0..interval and keeps only the last one.
MarketResult run_interval(const Scenario& s, int interval);
MarketResult run_grid_only(const Scenario& s);

std::vector<MarketResult> run_sweep(const Scenario& s, const std::vector<double>& omegas,
                                    Execution exec = Execution::Serial);

struct ComparisonRow {
  std::string quantity;
  double p2p = 0.0;
  double no_p2p = 0.0;
};

struct Comparison {
  MarketResult with_p2p;
  MarketResult without_p2p;
  std::vector<ComparisonRow> rows;
};

Comparison compare_p2p_vs_grid(const Scenario& s);

struct AblationSide {
  int groups = 1;
  std::size_t producer_variables = 0;
  std::size_t consumer_variables = 0;
  double messages_per_iteration = 0.0;
  std::size_t iterations = 0;
  std::size_t work_units = 0;
  std::size_t n_t = 0;
  double social_welfare = 0.0;
};

struct Ablation {
  AblationSide with;
  AblationSide without;
};

Ablation prioritization_ablation(const Scenario& s);

// Each epoch every advertiser posts one AT, followed by a fixed number of ENs.
ledger::Footprint advertisement_footprint(std::size_t ats_per_epoch, std::size_t epochs, bool ad_mode,
                                          std::uint64_t seed, std::size_t negotiations_per_epoch = 0);

} // namespace gridtrade::sim
