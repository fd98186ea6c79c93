#pragma once

#include "gridtrade/parallel.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

namespace gridtrade::grid {

using BusId = int;
using LineId = int;

struct Line {
  LineId id = 0;
  BusId from = 0;
  BusId to = 0;
  double length_km = 1.0;
};

struct ElectricalDistance {
  double km = 0.0;
};

struct ServiceCharge {
  double rate = 0.0;   // cents per kWh per km
  double charge = 0.0; // cents per kWh
};

// Validated radial feeder. Immutable once built; safe to share across threads.
class NetworkTopology {
public:
  // Throws Error{DanglingReference | CycleDetected | Disconnected | InvalidParameter}.
  NetworkTopology(std::vector<BusId> buses, std::vector<Line> lines, BusId slack);

  const std::vector<BusId>& buses() const noexcept { return buses_; }
  const std::vector<Line>& lines() const noexcept { return lines_; }
  BusId slack() const noexcept { return slack_; }

  bool has_bus(BusId bus) const noexcept { return bus_index_.contains(bus); }
  const Line& line(LineId id) const;
  // Line joining two adjacent buses, in either direction.
  const Line* find_line(BusId a, BusId b) const noexcept;

  // Ids of the lines on the unique tree path between the two buses.
  std::vector<LineId> path_lines(BusId a, BusId b) const;
  // Sum of line lengths on that path, via the lowest common ancestor.
  double path_length_km(BusId a, BusId b) const;

private:
  std::size_t index_of(BusId bus) const;

  std::vector<BusId> buses_;
  std::vector<Line> lines_;
  BusId slack_;
  std::unordered_map<BusId, std::size_t> bus_index_;
  std::unordered_map<LineId, std::size_t> line_index_;
  // Tree rooted at the slack bus, indexed by bus position.
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> parent_line_;
  std::vector<int> depth_;
  std::vector<double> root_km_;
};

NetworkTopology load_topology(const nlohmann::json& doc);
NetworkTopology load_topology_file(const std::filesystem::path& path);
nlohmann::json to_json(const NetworkTopology& topo);

// |PTDF| of a bilateral trade on one line. On a radial network this is 1 for
// lines on the path between the buses and 0 everywhere else.
int line_ptdf(const NetworkTopology& topo, LineId line, BusId inject, BusId withdraw);

// Sum over all lines of |PTDF| weighted by line length.
ElectricalDistance electrical_distance(const NetworkTopology& topo, BusId bus_i, BusId bus_j);

ServiceCharge grid_service_charge(double rate, ElectricalDistance distance);

// Row-major |rows| x |cols| matrix of path lengths. Rows are independent, so the
// parallel version splits them across threads.
std::vector<double> distance_matrix(const NetworkTopology& topo, std::span<const BusId> rows,
                                    std::span<const BusId> cols, Execution exec = Execution::Serial);

} // namespace gridtrade::grid
