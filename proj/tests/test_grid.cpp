#include "gridtrade/error.hpp"
#include "gridtrade/grid/topology.hpp"

#include <doctest.h>

#include <map>
#include <queue>

using namespace gridtrade;
using namespace gridtrade::grid;

namespace {

NetworkTopology case33() { return load_topology_file(GRIDTRADE_DATA_DIR "/topologies/case33.json"); }

// Weighted BFS over an adjacency list; independent of the library's tree walk.
std::map<BusId, double> bfs_lengths(const NetworkTopology& topo, BusId from) {
  std::map<BusId, std::vector<std::pair<BusId, double>>> adj;
  for (const auto& l : topo.lines()) {
    adj[l.from].push_back({l.to, l.length_km});
    adj[l.to].push_back({l.from, l.length_km});
  }
  std::map<BusId, double> dist{{from, 0.0}};
  std::queue<BusId> open;
  open.push(from);
  while (!open.empty()) {
    auto b = open.front();
    open.pop();
    for (auto [n, w] : adj[b])
      if (!dist.contains(n)) {
        dist[n] = dist[b] + w;
        open.push(n);
      }
  }
  return dist;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::BadFlags;
}

} // namespace

TEST_CASE("minimal two-bus tree") {
  NetworkTopology t({1, 2}, {{1, 1, 2, 1.0}}, 1);
  CHECK(t.lines().size() == 1);
  CHECK(line_ptdf(t, 1, 1, 2) == 1);
  CHECK(line_ptdf(t, 1, 2, 2) == 0);
}

TEST_CASE("triangle is rejected as a cycle") {
  CHECK(code_of([] { NetworkTopology({1, 2, 3}, {{1, 1, 2, 1}, {2, 2, 3, 1}, {3, 3, 1, 1}}, 1); }) ==
        Errc::CycleDetected);
}

TEST_CASE("forest is rejected as disconnected") {
  CHECK(code_of([] { NetworkTopology({1, 2, 3, 4}, {{1, 1, 2, 1}, {2, 3, 4, 1}}, 1); }) ==
        Errc::Disconnected);
}

TEST_CASE("line to an undeclared bus") {
  CHECK(code_of([] { NetworkTopology({1, 2}, {{1, 1, 5, 1}}, 1); }) == Errc::DanglingReference);
  CHECK(code_of([] { NetworkTopology({1, 2, 3}, {{1, 1, 2, 1}, {1, 2, 3, 1}}, 1); }) ==
        Errc::DanglingReference);
}

TEST_CASE("json loader") {
  auto doc = nlohmann::json::parse(R"({"buses":[1,2,3],"lines":[{"id":1,"from":1,"to":2},
    {"id":2,"from":2,"to":3,"length_km":2.5}],"slack":1})");
  auto t = load_topology(doc);
  CHECK(t.line(1).length_km == 1.0);
  CHECK(electrical_distance(t, 1, 3).km == doctest::Approx(3.5));
  auto again = load_topology(to_json(t));
  CHECK(again.lines().size() == 2);
  CHECK(code_of([] { load_topology(nlohmann::json::parse(R"({"buses":[1]})")); }) ==
        Errc::InvalidParameter);
}

TEST_CASE("three-bus chain distances") {
  NetworkTopology t({1, 2, 3}, {{1, 1, 2, 1}, {2, 2, 3, 1}}, 1);
  CHECK(electrical_distance(t, 1, 3).km == 2.0);
  CHECK(electrical_distance(t, 2, 2).km == 0.0);
  CHECK(code_of([&] { electrical_distance(t, 1, 9); }) == Errc::UnknownBus);
  CHECK(code_of([&] { line_ptdf(t, 9, 1, 2); }) == Errc::UnknownLine);
}

TEST_CASE("33-bus feeder") {
  auto t = case33();
  CHECK(t.buses().size() == 33);
  CHECK(t.lines().size() == 32);

  // bus 18 hangs off bus 1, so an 18 -> 1 trade does not touch line 1-2
  const auto* l12 = t.find_line(1, 2);
  REQUIRE(l12 != nullptr);
  CHECK(line_ptdf(t, l12->id, 18, 1) == 0);
  CHECK(line_ptdf(t, l12->id, 18, 2) == 1);

  for (auto a : t.buses()) {
    auto oracle = bfs_lengths(t, a);
    for (auto b : t.buses()) {
      const double d = electrical_distance(t, a, b).km;
      CHECK(d == doctest::Approx(oracle.at(b)));
      CHECK(d == electrical_distance(t, b, a).km);
      CHECK((d == 0.0) == (a == b));
    }
  }
}

TEST_CASE("distance is additive along a path") {
  auto t = case33();
  // 17 -> 9 -> 3: bus 9 lies on the main-feeder path between 17 and 3
  CHECK(electrical_distance(t, 17, 3).km ==
        doctest::Approx(electrical_distance(t, 17, 9).km + electrical_distance(t, 9, 3).km));
  CHECK(electrical_distance(t, 21, 32).km ==
        doctest::Approx(electrical_distance(t, 21, 1).km + electrical_distance(t, 1, 32).km));
}

TEST_CASE("service charge") {
  CHECK(grid_service_charge(2.0, {3.0}).charge == 6.0);
  CHECK(grid_service_charge(0.0, {7.0}).charge == 0.0);
  CHECK(grid_service_charge(2.0, {0.0}).charge == 0.0);
  CHECK(grid_service_charge(4.0, {3.0}).charge == 2.0 * grid_service_charge(2.0, {3.0}).charge);
  CHECK(code_of([] { grid_service_charge(-1.0, {1.0}); }) == Errc::NegativeRate);
}

TEST_CASE("parallel distance matrix matches the serial one") {
  auto t = case33();
  std::vector<BusId> rows{4, 6, 9, 10, 12, 14, 18, 21, 22, 24, 26, 27, 29, 31};
  std::vector<BusId> cols(t.buses().begin(), t.buses().end());
  auto serial = distance_matrix(t, rows, cols, Execution::Serial);
  auto parallel = distance_matrix(t, rows, cols, Execution::Parallel);
  CHECK(serial == parallel);
  CHECK(serial[0 * cols.size() + 0] == electrical_distance(t, 4, cols[0]).km);
}
