#include "gridtrade/grid/topology.hpp"

#include "gridtrade/error.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_set>

namespace gridtrade::grid {
namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b)
      return false;
    parent[b] = a;
    return true;
  }
};

} // namespace

NetworkTopology::NetworkTopology(std::vector<BusId> buses, std::vector<Line> lines, BusId slack)
    : buses_(std::move(buses)), lines_(std::move(lines)), slack_(slack) {
  if (buses_.empty())
    throw Error(Errc::Disconnected, "topology has no buses");
  for (std::size_t k = 0; k < buses_.size(); ++k) {
    if (buses_[k] < 1)
      throw Error(Errc::InvalidParameter, "bus ids must be >= 1, got " + std::to_string(buses_[k]));
    if (!bus_index_.emplace(buses_[k], k).second)
      throw Error(Errc::DanglingReference, "duplicate bus " + std::to_string(buses_[k]));
  }
  if (!has_bus(slack_))
    throw Error(Errc::DanglingReference, "slack bus " + std::to_string(slack_) + " is not declared");

  for (std::size_t k = 0; k < lines_.size(); ++k) {
    const auto& ln = lines_[k];
    if (!line_index_.emplace(ln.id, k).second)
      throw Error(Errc::DanglingReference, "duplicate line id " + std::to_string(ln.id));
    if (!has_bus(ln.from) || !has_bus(ln.to))
      throw Error(Errc::DanglingReference,
                  "line " + std::to_string(ln.id) + " references an undeclared bus");
    if (!(ln.length_km > 0.0))
      throw Error(Errc::InvalidParameter, "line " + std::to_string(ln.id) + " has non-positive length");
  }

  DisjointSet components(buses_.size());
  for (const auto& ln : lines_) {
    if (!components.unite(index_of(ln.from), index_of(ln.to)))
      throw Error(Errc::CycleDetected, "line " + std::to_string(ln.id) + " closes a loop");
  }
  if (lines_.size() + 1 != buses_.size())
    throw Error(Errc::Disconnected, std::to_string(buses_.size() - lines_.size()) + " islands");

  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacent(buses_.size());
  for (std::size_t k = 0; k < lines_.size(); ++k) {
    auto a = index_of(lines_[k].from);
    auto b = index_of(lines_[k].to);
    adjacent[a].emplace_back(b, k);
    adjacent[b].emplace_back(a, k);
  }
  parent_.assign(buses_.size(), kNone);
  parent_line_.assign(buses_.size(), kNone);
  depth_.assign(buses_.size(), 0);
  root_km_.assign(buses_.size(), 0.0);
  std::vector<bool> seen(buses_.size(), false);
  std::deque<std::size_t> queue{index_of(slack_)};
  seen[queue.front()] = true;
  while (!queue.empty()) {
    auto at = queue.front();
    queue.pop_front();
    for (auto [next, line] : adjacent[at]) {
      if (seen[next])
        continue;
      seen[next] = true;
      parent_[next] = at;
      parent_line_[next] = line;
      depth_[next] = depth_[at] + 1;
      root_km_[next] = root_km_[at] + lines_[line].length_km;
      queue.push_back(next);
    }
  }
}

std::size_t NetworkTopology::index_of(BusId bus) const {
  auto it = bus_index_.find(bus);
  if (it == bus_index_.end())
    throw Error(Errc::UnknownBus, "bus " + std::to_string(bus));
  return it->second;
}

const Line& NetworkTopology::line(LineId id) const {
  auto it = line_index_.find(id);
  if (it == line_index_.end())
    throw Error(Errc::UnknownLine, "line " + std::to_string(id));
  return lines_[it->second];
}

const Line* NetworkTopology::find_line(BusId a, BusId b) const noexcept {
  for (const auto& ln : lines_) {
    if ((ln.from == a && ln.to == b) || (ln.from == b && ln.to == a))
      return &ln;
  }
  return nullptr;
}

std::vector<LineId> NetworkTopology::path_lines(BusId a, BusId b) const {
  auto x = index_of(a);
  auto y = index_of(b);
  std::vector<LineId> up;
  std::vector<LineId> down;
  while (depth_[x] > depth_[y]) {
    up.push_back(lines_[parent_line_[x]].id);
    x = parent_[x];
  }
  while (depth_[y] > depth_[x]) {
    down.push_back(lines_[parent_line_[y]].id);
    y = parent_[y];
  }
  while (x != y) {
    up.push_back(lines_[parent_line_[x]].id);
    down.push_back(lines_[parent_line_[y]].id);
    x = parent_[x];
    y = parent_[y];
  }
  up.insert(up.end(), down.rbegin(), down.rend());
  return up;
}

double NetworkTopology::path_length_km(BusId a, BusId b) const {
  auto x = index_of(a);
  auto y = index_of(b);
  auto lca_x = x;
  auto lca_y = y;
  while (depth_[lca_x] > depth_[lca_y])
    lca_x = parent_[lca_x];
  while (depth_[lca_y] > depth_[lca_x])
    lca_y = parent_[lca_y];
  while (lca_x != lca_y) {
    lca_x = parent_[lca_x];
    lca_y = parent_[lca_y];
  }
  return (root_km_[x] - root_km_[lca_x]) + (root_km_[y] - root_km_[lca_x]);
}

NetworkTopology load_topology(const nlohmann::json& doc) {
  auto fail = [](const std::string& why) -> void { throw Error(Errc::InvalidParameter, why); };
  if (!doc.is_object())
    fail("topology document must be an object");
  if (!doc.contains("buses") || !doc["buses"].is_array())
    fail("topology document needs a 'buses' array");
  if (!doc.contains("lines") || !doc["lines"].is_array())
    fail("topology document needs a 'lines' array");
  if (!doc.contains("slack") || !doc["slack"].is_number_integer())
    fail("topology document needs an integer 'slack'");

  std::vector<BusId> buses;
  for (const auto& b : doc["buses"]) {
    if (!b.is_number_integer())
      fail("bus ids must be integers");
    buses.push_back(b.get<BusId>());
  }
  std::vector<Line> lines;
  for (const auto& l : doc["lines"]) {
    if (!l.is_object() || !l.contains("id") || !l.contains("from") || !l.contains("to"))
      fail("each line needs id, from and to");
    Line ln;
    ln.id = l["id"].get<LineId>();
    ln.from = l["from"].get<BusId>();
    ln.to = l["to"].get<BusId>();
    ln.length_km = l.value("length_km", 1.0);
    lines.push_back(ln);
  }
  return NetworkTopology(std::move(buses), std::move(lines), doc["slack"].get<BusId>());
}

NetworkTopology load_topology_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::InvalidParameter, "cannot open topology file " + path.string());
  return load_topology(nlohmann::json::parse(in));
}

nlohmann::json to_json(const NetworkTopology& topo) {
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& ln : topo.lines())
    lines.push_back({{"id", ln.id}, {"from", ln.from}, {"to", ln.to}, {"length_km", ln.length_km}});
  return {{"buses", topo.buses()}, {"lines", lines}, {"slack", topo.slack()}};
}

int line_ptdf(const NetworkTopology& topo, LineId line, BusId inject, BusId withdraw) {
  topo.line(line);
  if (!topo.has_bus(inject))
    throw Error(Errc::UnknownBus, "bus " + std::to_string(inject));
  if (!topo.has_bus(withdraw))
    throw Error(Errc::UnknownBus, "bus " + std::to_string(withdraw));
  auto path = topo.path_lines(inject, withdraw);
  return std::find(path.begin(), path.end(), line) != path.end() ? 1 : 0;
}

ElectricalDistance electrical_distance(const NetworkTopology& topo, BusId bus_i, BusId bus_j) {
  auto path = topo.path_lines(bus_i, bus_j);
  std::unordered_set<LineId> on_path(path.begin(), path.end());
  double km = 0.0;
  for (const auto& ln : topo.lines()) {
    int ptdf = on_path.contains(ln.id) ? 1 : 0;
    km += ptdf * ln.length_km;
  }
  return {km};
}

ServiceCharge grid_service_charge(double rate, ElectricalDistance distance) {
  if (rate < 0.0)
    throw Error(Errc::NegativeRate, "service charge rate must be >= 0");
  return {rate, rate * distance.km};
}

std::vector<double> distance_matrix(const NetworkTopology& topo, std::span<const BusId> rows,
                                    std::span<const BusId> cols, Execution exec) {
  for (auto b : rows)
    if (!topo.has_bus(b))
      throw Error(Errc::UnknownBus, "bus " + std::to_string(b));
  for (auto b : cols)
    if (!topo.has_bus(b))
      throw Error(Errc::UnknownBus, "bus " + std::to_string(b));

  std::vector<double> out(rows.size() * cols.size(), 0.0);
  const auto n_rows = static_cast<std::ptrdiff_t>(rows.size());
  const auto n_cols = cols.size();
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < n_rows; ++r)
      for (std::size_t c = 0; c < n_cols; ++c)
        out[r * n_cols + c] = topo.path_length_km(rows[r], cols[c]);
  } else {
    for (std::ptrdiff_t r = 0; r < n_rows; ++r)
      for (std::size_t c = 0; c < n_cols; ++c)
        out[r * n_cols + c] = topo.path_length_km(rows[r], cols[c]);
  }
  return out;
}

} // namespace gridtrade::grid
