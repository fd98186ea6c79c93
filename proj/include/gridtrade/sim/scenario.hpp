#pragma once

#include "gridtrade/grid/topology.hpp"
#include "gridtrade/ledger/transactions.hpp"
#include "gridtrade/market/negotiation.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridtrade::sim {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Seeded sampling of the agent roster from parameter ranges. Draws are
// uniform on (lo, hi]; beta is 1 - alpha.
struct RosterGenerator {
  std::vector<grid::BusId> producer_buses;
  std::vector<grid::BusId> consumer_buses;
  Range producer_a{0.5, 1.0};
  Range producer_b{5.0, 10.0};
  Range producer_c{0.0, 1.0};
  Range producer_e_min{0.0, 5.0};
  Range producer_e_max{5.0, 10.0};
  Range consumer_a{0.5, 10.0};
  Range consumer_b{10.0, 20.0};
  Range consumer_e_min{1.0, 4.0};
  Range consumer_e_max{6.0, 10.0};
  Range reputation{0.0, 1.0};
  Range alpha{0.0, 1.0};
};

// A producer that injects only a fraction of what it agreed to.
struct Misbehavior {
  std::string producer;
  double delivery = 1.0;
  int interval = -1; // -1 applies to every interval
};

struct Scenario {
  std::string name;
  std::string topology_name;
  std::shared_ptr<const grid::NetworkTopology> topology;
  std::vector<market::ProducerParams> producers;
  std::vector<market::ConsumerParams> consumers;
  std::optional<RosterGenerator> generator;
  market::GridTariff tariff;
  double omega = 0.0;
  int groups = 1;
  market::SolverConfig solver;
  int intervals = 1;
  std::uint64_t seed = 1;
  bool ad_mode = true;
  std::vector<Misbehavior> misbehavior;
  int location_resolution = 1;
  std::size_t merkle_leaves = 8;
  double reputation_penalty = 0.5;
  ledger::Tick lp_expiry = 10;
  std::int64_t consumer_balance = 1'000'000; // cents
  bool p2p = true;

  double delivery_fraction(const std::string& producer, int interval) const;
};

// Throws ScenarioInvalid. Messages name the offending line and JSON pointer.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
Scenario load_scenario_file(const std::filesystem::path& path);

// Bundled scenarios and topologies are compiled into the library.
std::vector<std::string> bundled_scenarios();
std::optional<std::string_view> bundled_scenario_text(std::string_view name);
std::optional<std::string_view> bundled_topology_text(std::string_view name);
Scenario bundled_scenario(std::string_view name);
// Bundled name or a path on disk.
Scenario resolve_scenario(const std::string& name_or_path);

// Draws a fresh roster when the scenario has a generator.
void reseed(Scenario& s, std::uint64_t seed);
void sample_roster(Scenario& s);
void validate(const Scenario& s);

nlohmann::json to_json(const Scenario& s);

// Maps JSON pointers to the line their value starts on.
class LineIndex {
public:
  explicit LineIndex(std::string_view text);
  // Nearest enclosing value that was seen; line 1 for the root.
  int line_of(std::string_view pointer) const;

private:
  std::map<std::string, int, std::less<>> lines_;
};

} // namespace gridtrade::sim
