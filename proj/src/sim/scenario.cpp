#include "gridtrade/sim/scenario.hpp"

#include "gridtrade/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace gridtrade::sim {
namespace detail {
extern const std::pair<std::string_view, std::string_view> k_scenarios[];
extern const std::pair<std::string_view, std::string_view> k_topologies[];
} // namespace detail

namespace {

using nlohmann::json;

std::optional<std::string_view> lookup(const std::pair<std::string_view, std::string_view>* table,
                                       std::string_view name) {
  for (auto* e = table; !e->first.empty(); ++e)
    if (e->first == name)
      return e->second;
  return std::nullopt;
}

std::string escape_token(std::string_view key) {
  std::string out;
  for (char c : key) {
    if (c == '~')
      out += "~0";
    else if (c == '/')
      out += "~1";
    else
      out += c;
  }
  return out;
}

// Schema checks with the line of the offending value in every message.
class Reader {
public:
  Reader(const json& root, const LineIndex& lines) : root_(root), lines_(lines) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& why) const {
    throw Error(Errc::ScenarioInvalid,
                "line " + std::to_string(lines_.line_of(pointer)) + ": " + (pointer.empty() ? "/" : pointer) + ": " + why);
  }

  const json& at(const json& obj, const std::string& ptr, const char* key) const {
    if (!obj.contains(key))
      fail(ptr, std::string("missing required field '") + key + "'");
    return obj[key];
  }

  double number(const json& v, const std::string& ptr) const {
    if (!v.is_number())
      fail(ptr, "expected a number");
    return v.get<double>();
  }

  double number(const json& obj, const std::string& ptr, const char* key) const {
    return number(at(obj, ptr, key), ptr + "/" + key);
  }

  double number_or(const json& obj, const std::string& ptr, const char* key, double fallback) const {
    return obj.contains(key) ? number(obj[key], ptr + "/" + key) : fallback;
  }

  long long integer(const json& v, const std::string& ptr) const {
    if (!v.is_number_integer())
      fail(ptr, "expected an integer");
    return v.get<long long>();
  }

  long long integer_or(const json& obj, const std::string& ptr, const char* key, long long fallback) const {
    return obj.contains(key) ? integer(obj[key], ptr + "/" + key) : fallback;
  }

  bool boolean_or(const json& obj, const std::string& ptr, const char* key, bool fallback) const {
    if (!obj.contains(key))
      return fallback;
    if (!obj[key].is_boolean())
      fail(ptr + "/" + key, "expected true or false");
    return obj[key].get<bool>();
  }

  std::string string(const json& obj, const std::string& ptr, const char* key) const {
    const auto& v = at(obj, ptr, key);
    if (!v.is_string())
      fail(ptr + "/" + key, "expected a string");
    return v.get<std::string>();
  }

  const json& object(const json& v, const std::string& ptr) const {
    if (!v.is_object())
      fail(ptr, "expected an object");
    return v;
  }

  const json& array(const json& v, const std::string& ptr) const {
    if (!v.is_array())
      fail(ptr, "expected an array");
    return v;
  }

  Range range(const json& obj, const std::string& ptr, const char* key, Range fallback) const {
    if (!obj.contains(key))
      return fallback;
    const auto p = ptr + "/" + key;
    const auto& v = array(obj[key], p);
    if (v.size() != 2)
      fail(p, "a range is [low, high]");
    Range r{number(v[0], p + "/0"), number(v[1], p + "/1")};
    if (r.lo > r.hi)
      fail(p, "range low end exceeds high end");
    return r;
  }

  std::vector<grid::BusId> buses(const json& obj, const std::string& ptr, const char* key) const {
    const auto p = ptr + "/" + key;
    std::vector<grid::BusId> out;
    const auto& v = array(at(obj, ptr, key), p);
    for (std::size_t k = 0; k < v.size(); ++k)
      out.push_back(static_cast<grid::BusId>(integer(v[k], p + "/" + std::to_string(k))));
    return out;
  }

private:
  const json& root_;
  const LineIndex& lines_;
};

void check_unknown(const Reader& rd, const json& obj, const std::string& ptr, std::initializer_list<const char*> known) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      rd.fail(ptr + "/" + escape_token(key), "unknown field '" + key + "'");
  }
}

// Uniform on (lo, hi], from the top 53 bits so every platform draws the same values.
double draw(std::mt19937_64& rng, Range r) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return r.hi - (r.hi - r.lo) * u;
}

} // namespace

LineIndex::LineIndex(std::string_view s) {
  struct Frame {
    bool object;
    std::size_t index;
    std::string key;
    bool expect_key;
  };
  std::vector<Frame> stack;
  int line = 1;
  auto mark = [&] {
    std::string p;
    for (const auto& f : stack)
      p += "/" + (f.object ? escape_token(f.key) : std::to_string(f.index));
    lines_.emplace(std::move(p), line);
  };
  lines_.emplace("", 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char ch = s[i];
    if (ch == '\n') {
      ++line;
    } else if (ch == '"') {
      std::string str;
      std::size_t j = i + 1;
      for (; j < s.size() && s[j] != '"'; ++j) {
        if (s[j] == '\\' && j + 1 < s.size())
          ++j;
        str += s[j];
      }
      if (!stack.empty() && stack.back().object && stack.back().expect_key) {
        stack.back().key = std::move(str);
        stack.back().expect_key = false;
      } else if (!stack.empty()) {
        mark();
      }
      i = j;
    } else if (ch == '{' || ch == '[') {
      if (!stack.empty())
        mark();
      stack.push_back({ch == '{', 0, {}, ch == '{'});
    } else if (ch == '}' || ch == ']') {
      if (!stack.empty())
        stack.pop_back();
    } else if (ch == ',') {
      if (!stack.empty()) {
        if (stack.back().object)
          stack.back().expect_key = true;
        else
          ++stack.back().index;
      }
    } else if (ch != ':' && !std::isspace(static_cast<unsigned char>(ch))) {
      if (!stack.empty())
        mark();
      while (i + 1 < s.size() && std::string_view(",]} \t\r\n").find(s[i + 1]) == std::string_view::npos)
        ++i;
    }
  }
}

int LineIndex::line_of(std::string_view pointer) const {
  std::string p(pointer);
  while (true) {
    if (auto it = lines_.find(p); it != lines_.end())
      return it->second;
    auto cut = p.rfind('/');
    if (cut == std::string::npos)
      return 1;
    p.resize(cut);
  }
}

double Scenario::delivery_fraction(const std::string& producer, int interval) const {
  for (const auto& m : misbehavior)
    if (m.producer == producer && (m.interval < 0 || m.interval == interval))
      return m.delivery;
  return 1.0;
}

void sample_roster(Scenario& s) {
  if (!s.generator)
    return;
  const auto& g = *s.generator;
  std::mt19937_64 rng(s.seed);
  s.producers.clear();
  s.consumers.clear();
  for (auto bus : g.producer_buses) {
    market::ProducerParams p;
    p.id = "p" + std::to_string(bus);
    p.bus = bus;
    p.a = draw(rng, g.producer_a);
    p.b = draw(rng, g.producer_b);
    p.c = draw(rng, g.producer_c);
    p.e_min = draw(rng, g.producer_e_min);
    p.e_max = draw(rng, g.producer_e_max);
    p.reputation = draw(rng, g.reputation);
    p.alpha = draw(rng, g.alpha);
    p.beta = 1.0 - p.alpha;
    s.producers.push_back(p);
  }
  for (auto bus : g.consumer_buses) {
    market::ConsumerParams c;
    c.id = "c" + std::to_string(bus);
    c.bus = bus;
    c.a = draw(rng, g.consumer_a);
    c.b = draw(rng, g.consumer_b);
    c.e_min = draw(rng, g.consumer_e_min);
    c.e_max = draw(rng, g.consumer_e_max);
    c.reputation = draw(rng, g.reputation);
    c.alpha = draw(rng, g.alpha);
    c.beta = 1.0 - c.alpha;
    s.consumers.push_back(c);
  }
}

void reseed(Scenario& s, std::uint64_t seed) {
  s.seed = seed;
  sample_roster(s);
}

void validate(const Scenario& s) {
  auto bad = [](const std::string& why) { throw Error(Errc::ScenarioInvalid, why); };
  if (!s.topology)
    bad("scenario has no topology");
  if (s.producers.empty() && s.consumers.empty())
    bad("scenario has no agents");
  std::set<std::string> ids;
  for (const auto& p : s.producers) {
    if (!s.topology->has_bus(p.bus))
      bad("producer " + p.id + " sits on unknown bus " + std::to_string(p.bus));
    if (!ids.insert(p.id).second)
      bad("duplicate agent id " + p.id);
    try {
      market::validate(p);
    } catch (const Error& e) {
      bad("producer " + p.id + ": " + e.what());
    }
  }
  for (const auto& c : s.consumers) {
    if (!s.topology->has_bus(c.bus))
      bad("consumer " + c.id + " sits on unknown bus " + std::to_string(c.bus));
    if (!ids.insert(c.id).second)
      bad("duplicate agent id " + c.id);
    try {
      market::validate(c);
    } catch (const Error& e) {
      bad("consumer " + c.id + ": " + e.what());
    }
  }
  try {
    market::validate(s.tariff);
  } catch (const Error& e) {
    bad(e.what());
  }
  if (s.omega < 0.0)
    bad("omega must be non-negative");
  if (s.groups < 1)
    bad("groups must be at least 1");
  if (s.intervals < 1)
    bad("intervals must be at least 1");
  if (s.merkle_leaves < 1)
    bad("merkle_leaves must be at least 1");
  if (s.location_resolution < 1)
    bad("location_resolution must be at least 1");
  if (!(s.solver.epsilon > 0.0))
    bad("epsilon must be positive");
  for (const auto& m : s.misbehavior) {
    if (std::none_of(s.producers.begin(), s.producers.end(), [&](const auto& p) { return p.id == m.producer; }))
      bad("misbehavior names unknown producer " + m.producer);
    if (m.delivery < 0.0 || m.delivery > 1.0)
      bad("delivery fraction for " + m.producer + " must lie in [0, 1]");
  }
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw Error(Errc::ScenarioInvalid, "line " + std::to_string(line) + ": malformed JSON");
  }
  LineIndex lines(text);
  Reader rd(doc, lines);
  rd.object(doc, "");
  check_unknown(rd, doc, "",
                {"name", "topology", "tariff", "omega", "groups", "intervals", "seed", "ad_mode", "p2p", "solver",
                 "generate", "producers", "consumers", "misbehavior", "location_resolution", "merkle_leaves",
                 "reputation_penalty", "lp_expiry", "consumer_balance"});

  Scenario s;
  s.name = rd.string(doc, "", "name");

  const auto& topo = rd.at(doc, "", "topology");
  try {
    if (topo.is_string()) {
      s.topology_name = topo.get<std::string>();
      if (auto bundled = bundled_topology_text(s.topology_name)) {
        s.topology = std::make_shared<grid::NetworkTopology>(grid::load_topology(json::parse(*bundled)));
      } else {
        auto path = base_dir / s.topology_name;
        if (!std::filesystem::exists(path))
          rd.fail("/topology", "no bundled topology or file named '" + s.topology_name + "'");
        s.topology = std::make_shared<grid::NetworkTopology>(grid::load_topology_file(path));
      }
    } else {
      rd.object(topo, "/topology");
      s.topology_name = topo.value("name", s.name);
      s.topology = std::make_shared<grid::NetworkTopology>(grid::load_topology(topo));
    }
  } catch (const Error& e) {
    if (e.code() == Errc::ScenarioInvalid)
      throw;
    rd.fail("/topology", e.what());
  }

  if (doc.contains("tariff")) {
    const auto& t = rd.object(doc["tariff"], "/tariff");
    check_unknown(rd, t, "/tariff", {"feed_in", "retail"});
    s.tariff.feed_in = rd.number(t, "/tariff", "feed_in");
    s.tariff.retail = rd.number(t, "/tariff", "retail");
  }
  s.omega = rd.number_or(doc, "", "omega", 0.0);
  s.groups = static_cast<int>(rd.integer_or(doc, "", "groups", 1));
  s.intervals = static_cast<int>(rd.integer_or(doc, "", "intervals", 1));
  s.seed = static_cast<std::uint64_t>(rd.integer_or(doc, "", "seed", 1));
  s.ad_mode = rd.boolean_or(doc, "", "ad_mode", true);
  s.p2p = rd.boolean_or(doc, "", "p2p", true);
  s.location_resolution = static_cast<int>(rd.integer_or(doc, "", "location_resolution", 1));
  s.merkle_leaves = static_cast<std::size_t>(rd.integer_or(doc, "", "merkle_leaves", 8));
  s.reputation_penalty = rd.number_or(doc, "", "reputation_penalty", 0.5);
  s.lp_expiry = static_cast<ledger::Tick>(rd.integer_or(doc, "", "lp_expiry", 10));
  s.consumer_balance = rd.integer_or(doc, "", "consumer_balance", 1'000'000);

  if (doc.contains("solver")) {
    const auto& sv = rd.object(doc["solver"], "/solver");
    check_unknown(rd, sv, "/solver",
                  {"epsilon", "rho_lambda", "rho_mu", "zeta_scale", "consensus_damping", "max_iter", "min_trade_kwh",
                   "grid_backstop"});
    auto& c = s.solver;
    c.epsilon = rd.number_or(sv, "/solver", "epsilon", c.epsilon);
    c.rho_lambda = rd.number_or(sv, "/solver", "rho_lambda", c.rho_lambda);
    c.rho_mu = rd.number_or(sv, "/solver", "rho_mu", c.rho_mu);
    c.zeta_scale = rd.number_or(sv, "/solver", "zeta_scale", c.zeta_scale);
    c.consensus_damping = rd.number_or(sv, "/solver", "consensus_damping", c.consensus_damping);
    c.max_iter = static_cast<std::size_t>(rd.integer_or(sv, "/solver", "max_iter", static_cast<long long>(c.max_iter)));
    c.min_trade_kwh = rd.number_or(sv, "/solver", "min_trade_kwh", c.min_trade_kwh);
    c.grid_backstop = rd.boolean_or(sv, "/solver", "grid_backstop", c.grid_backstop);
  }

  const bool has_generator = doc.contains("generate");
  const bool has_roster = doc.contains("producers") || doc.contains("consumers");
  if (has_generator == has_roster)
    rd.fail("", "give either 'generate' or explicit 'producers'/'consumers'");

  if (has_generator) {
    const auto& g = rd.object(doc["generate"], "/generate");
    check_unknown(rd, g, "/generate",
                  {"producer_buses", "consumer_buses", "producer", "consumer", "reputation", "alpha"});
    RosterGenerator gen;
    gen.producer_buses = rd.buses(g, "/generate", "producer_buses");
    gen.consumer_buses = rd.buses(g, "/generate", "consumer_buses");
    if (g.contains("producer")) {
      const auto& p = rd.object(g["producer"], "/generate/producer");
      check_unknown(rd, p, "/generate/producer", {"a", "b", "c", "e_min", "e_max"});
      gen.producer_a = rd.range(p, "/generate/producer", "a", gen.producer_a);
      gen.producer_b = rd.range(p, "/generate/producer", "b", gen.producer_b);
      gen.producer_c = rd.range(p, "/generate/producer", "c", gen.producer_c);
      gen.producer_e_min = rd.range(p, "/generate/producer", "e_min", gen.producer_e_min);
      gen.producer_e_max = rd.range(p, "/generate/producer", "e_max", gen.producer_e_max);
    }
    if (g.contains("consumer")) {
      const auto& c = rd.object(g["consumer"], "/generate/consumer");
      check_unknown(rd, c, "/generate/consumer", {"a", "b", "e_min", "e_max"});
      gen.consumer_a = rd.range(c, "/generate/consumer", "a", gen.consumer_a);
      gen.consumer_b = rd.range(c, "/generate/consumer", "b", gen.consumer_b);
      gen.consumer_e_min = rd.range(c, "/generate/consumer", "e_min", gen.consumer_e_min);
      gen.consumer_e_max = rd.range(c, "/generate/consumer", "e_max", gen.consumer_e_max);
    }
    gen.reputation = rd.range(g, "/generate", "reputation", gen.reputation);
    gen.alpha = rd.range(g, "/generate", "alpha", gen.alpha);
    for (const auto* list : {&gen.producer_buses, &gen.consumer_buses})
      for (std::size_t k = 0; k < list->size(); ++k)
        if (!s.topology->has_bus((*list)[k]))
          rd.fail(std::string(list == &gen.producer_buses ? "/generate/producer_buses/" : "/generate/consumer_buses/") +
                      std::to_string(k),
                  "bus " + std::to_string((*list)[k]) + " is not in the topology");
    s.generator = gen;
    sample_roster(s);
  } else {
    auto agent_common = [&](const json& a, const std::string& ptr, auto& out) {
      out.id = rd.string(a, ptr, "id");
      out.bus = static_cast<grid::BusId>(rd.integer(rd.at(a, ptr, "bus"), ptr + "/bus"));
      if (!s.topology->has_bus(out.bus))
        rd.fail(ptr + "/bus", "bus " + std::to_string(out.bus) + " is not in the topology");
      out.a = rd.number(a, ptr, "a");
      out.b = rd.number(a, ptr, "b");
      out.e_min = rd.number(a, ptr, "e_min");
      out.e_max = rd.number(a, ptr, "e_max");
      out.reputation = rd.number_or(a, ptr, "reputation", 1.0);
      out.alpha = rd.number_or(a, ptr, "alpha", 0.5);
      out.beta = rd.number_or(a, ptr, "beta", 1.0 - out.alpha);
    };
    if (doc.contains("producers")) {
      const auto& list = rd.array(doc["producers"], "/producers");
      for (std::size_t k = 0; k < list.size(); ++k) {
        const auto ptr = "/producers/" + std::to_string(k);
        const auto& a = rd.object(list[k], ptr);
        check_unknown(rd, a, ptr, {"id", "bus", "a", "b", "c", "e_min", "e_max", "reputation", "alpha", "beta"});
        market::ProducerParams p;
        agent_common(a, ptr, p);
        p.c = rd.number_or(a, ptr, "c", 0.0);
        try {
          market::validate(p);
        } catch (const Error& e) {
          rd.fail(ptr, e.what());
        }
        s.producers.push_back(p);
      }
    }
    if (doc.contains("consumers")) {
      const auto& list = rd.array(doc["consumers"], "/consumers");
      for (std::size_t k = 0; k < list.size(); ++k) {
        const auto ptr = "/consumers/" + std::to_string(k);
        const auto& a = rd.object(list[k], ptr);
        check_unknown(rd, a, ptr, {"id", "bus", "a", "b", "e_min", "e_max", "reputation", "alpha", "beta"});
        market::ConsumerParams c;
        agent_common(a, ptr, c);
        try {
          market::validate(c);
        } catch (const Error& e) {
          rd.fail(ptr, e.what());
        }
        s.consumers.push_back(c);
      }
    }
  }

  if (doc.contains("misbehavior")) {
    const auto& list = rd.array(doc["misbehavior"], "/misbehavior");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto ptr = "/misbehavior/" + std::to_string(k);
      const auto& m = rd.object(list[k], ptr);
      check_unknown(rd, m, ptr, {"producer", "delivery", "interval"});
      Misbehavior mb;
      mb.producer = rd.string(m, ptr, "producer");
      mb.delivery = rd.number(m, ptr, "delivery");
      mb.interval = static_cast<int>(rd.integer_or(m, ptr, "interval", -1));
      s.misbehavior.push_back(mb);
    }
  }

  validate(s);
  return s;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::ScenarioInvalid, "cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path());
}

std::vector<std::string> bundled_scenarios() {
  std::vector<std::string> out;
  for (auto* e = detail::k_scenarios; !e->first.empty(); ++e)
    out.emplace_back(e->first);
  return out;
}

std::optional<std::string_view> bundled_scenario_text(std::string_view name) {
  return lookup(detail::k_scenarios, name);
}

std::optional<std::string_view> bundled_topology_text(std::string_view name) {
  return lookup(detail::k_topologies, name);
}

Scenario bundled_scenario(std::string_view name) {
  auto text = bundled_scenario_text(name);
  if (!text)
    throw Error(Errc::ScenarioInvalid, "no bundled scenario named '" + std::string(name) + "'");
  return parse_scenario(*text);
}

Scenario resolve_scenario(const std::string& name_or_path) {
  if (bundled_scenario_text(name_or_path))
    return bundled_scenario(name_or_path);
  return load_scenario_file(name_or_path);
}

json to_json(const Scenario& s) {
  json producers = json::array();
  for (const auto& p : s.producers)
    producers.push_back({{"id", p.id}, {"bus", p.bus}, {"a", p.a}, {"b", p.b}, {"c", p.c}, {"e_min", p.e_min},
                         {"e_max", p.e_max}, {"reputation", p.reputation}, {"alpha", p.alpha}, {"beta", p.beta}});
  json consumers = json::array();
  for (const auto& c : s.consumers)
    consumers.push_back({{"id", c.id}, {"bus", c.bus}, {"a", c.a}, {"b", c.b}, {"e_min", c.e_min},
                         {"e_max", c.e_max}, {"reputation", c.reputation}, {"alpha", c.alpha}, {"beta", c.beta}});
  json misbehavior = json::array();
  for (const auto& m : s.misbehavior)
    misbehavior.push_back({{"producer", m.producer}, {"delivery", m.delivery}, {"interval", m.interval}});
  return {{"name", s.name},
          {"topology", s.topology_name},
          {"tariff", {{"feed_in", s.tariff.feed_in}, {"retail", s.tariff.retail}}},
          {"omega", s.omega},
          {"groups", s.groups},
          {"intervals", s.intervals},
          {"seed", s.seed},
          {"ad_mode", s.ad_mode},
          {"p2p", s.p2p},
          {"solver",
           {{"epsilon", s.solver.epsilon},
            {"rho_lambda", s.solver.rho_lambda},
            {"rho_mu", s.solver.rho_mu},
            {"zeta_scale", s.solver.zeta_scale},
            {"consensus_damping", s.solver.consensus_damping},
            {"max_iter", s.solver.max_iter},
            {"min_trade_kwh", s.solver.min_trade_kwh},
            {"grid_backstop", s.solver.grid_backstop}}},
          {"producers", producers},
          {"consumers", consumers},
          {"misbehavior", misbehavior}};
}

} // namespace gridtrade::sim
