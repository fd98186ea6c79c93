#include "gridtrade/sim/report.hpp"

#include <cstdio>
#include <sstream>

namespace gridtrade::sim {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000")
    s = "0.000000";
  return s;
}

json to_json(const IntervalResult& r) {
  json trades = json::array();
  for (const auto& t : r.trades)
    trades.push_back({{"producer", t.producer},
                      {"consumer", t.consumer},
                      {"energy_kwh", t.energy},
                      {"delivered_kwh", t.delivered},
                      {"price", t.price},
                      {"service_charge", t.charge},
                      {"paid_cents", t.paid},
                      {"round", t.round},
                      {"outcome", ledger::outcome_name(t.outcome)},
                      {"en", t.en_id}});
  json agents = json::array();
  for (const auto& a : r.agents)
    agents.push_back({{"agent", a.agent},
                      {"role", a.producer ? "producer" : "consumer"},
                      {"welfare", a.welfare},
                      {"p2p_kwh", a.p2p},
                      {"grid_kwh", a.grid},
                      {"reputation", a.reputation}});
  return {{"interval", r.interval},
          {"n_t", r.n_t},
          {"p2p_kwh", r.p2p_volume},
          {"grid_import_kwh", r.grid_import},
          {"grid_export_kwh", r.grid_export},
          {"service_charge_cents", r.service_charge},
          {"producer_welfare", r.producer_welfare},
          {"consumer_welfare", r.consumer_welfare},
          {"social_welfare", r.social_welfare},
          {"conservation_gap_kwh", r.conservation_gap},
          {"iterations", r.iterations},
          {"messages", r.messages},
          {"messages_per_iteration", r.messages_per_iteration},
          {"gamma_queries", r.gamma_queries},
          {"work_units", r.work_units},
          {"decision_variables", {{"producers", r.producer_variables}, {"consumers", r.consumer_variables}}},
          {"advertisements", r.advertisements},
          {"disputes", r.disputes},
          {"blocks_sealed", r.blocks_sealed},
          {"converged", r.converged},
          {"trades", trades},
          {"agents", agents}};
}

json to_json(const MarketResult& r) {
  json intervals = json::array();
  for (const auto& i : r.intervals)
    intervals.push_back(to_json(i));
  json footprint{{"blocks", r.footprint.blocks},
                 {"transactions", r.footprint.transactions},
                 {"total_bytes", r.footprint.total_bytes},
                 {"bytes_by_kind", r.footprint.bytes_by_kind},
                 {"count_by_kind", r.footprint.count_by_kind}};
  return {{"scenario", r.scenario},
          {"seed", r.seed},
          {"omega", r.omega},
          {"groups", r.groups},
          {"ad_mode", r.ad_mode},
          {"p2p", r.p2p},
          {"n_t", r.n_t()},
          {"social_welfare", r.social_welfare()},
          {"grid_import_kwh", r.grid_import()},
          {"converged", r.converged()},
          {"blocks", r.blocks},
          {"head", r.head},
          {"chain_valid", r.chain_valid},
          {"footprint", footprint},
          {"intervals", intervals}};
}

json to_json(const Comparison& c) {
  json rows = json::array();
  for (const auto& row : c.rows)
    rows.push_back({{"quantity", row.quantity}, {"p2p", row.p2p}, {"no_p2p", row.no_p2p}});
  return {{"scenario", c.with_p2p.scenario}, {"seed", c.with_p2p.seed}, {"omega", c.with_p2p.omega}, {"rows", rows}};
}

namespace {

json side_json(const AblationSide& a) {
  return {{"groups", a.groups},
          {"decision_variables", {{"producers", a.producer_variables}, {"consumers", a.consumer_variables}}},
          {"messages_per_iteration", a.messages_per_iteration},
          {"iterations", a.iterations},
          {"work_units", a.work_units},
          {"n_t", a.n_t},
          {"social_welfare", a.social_welfare}};
}

} // namespace

json to_json(const Ablation& a) { return {{"with_prioritization", side_json(a.with)}, {"without_prioritization", side_json(a.without)}}; }

json sweep_json(const std::vector<MarketResult>& runs) {
  json out = json::array();
  for (const auto& r : runs) {
    json row = to_json(r);
    row.erase("intervals");
    out.push_back(row);
  }
  return out;
}

std::string trades_csv(const MarketResult& r) {
  std::ostringstream out;
  out << "interval,row,producer,consumer,energy_kwh,delivered_kwh,price_cents_per_kwh,service_charge_cents_per_kwh,"
         "paid_cents,round,outcome,n_t,p2p_kwh,grid_import_kwh,grid_export_kwh,social_welfare_cents,iterations\n";
  for (const auto& i : r.intervals) {
    for (const auto& t : i.trades)
      out << i.interval << ",trade," << t.producer << ',' << t.consumer << ',' << fmt(t.energy) << ','
          << fmt(t.delivered) << ',' << fmt(t.price) << ',' << fmt(t.charge) << ',' << fmt(t.paid) << ',' << t.round
          << ',' << ledger::outcome_name(t.outcome) << ",,,,,,\n";
    out << i.interval << ",summary,,,,,,,,,," << i.n_t << ',' << fmt(i.p2p_volume) << ',' << fmt(i.grid_import) << ','
        << fmt(i.grid_export) << ',' << fmt(i.social_welfare) << ',' << i.iterations << '\n';
  }
  return out.str();
}

std::string sweep_csv(const std::vector<MarketResult>& runs) {
  std::ostringstream out;
  out << "omega,n_t,p2p_kwh,grid_import_kwh,grid_export_kwh,service_charge_cents,social_welfare_cents,iterations,"
         "messages_per_iteration,work_units,converged\n";
  for (const auto& r : runs) {
    double p2p = 0, exp = 0, charge = 0;
    std::size_t it = 0, msgs = 0, work = 0;
    for (const auto& i : r.intervals) {
      p2p += i.p2p_volume;
      exp += i.grid_export;
      charge += i.service_charge;
      it += i.iterations;
      msgs += i.messages;
      work += i.work_units;
    }
    out << fmt(r.omega) << ',' << r.n_t() << ',' << fmt(p2p) << ',' << fmt(r.grid_import()) << ',' << fmt(exp) << ','
        << fmt(charge) << ',' << fmt(r.social_welfare()) << ',' << it << ','
        << fmt(it ? static_cast<double>(msgs) / static_cast<double>(it) : 0.0) << ',' << work << ','
        << (r.converged() ? "true" : "false") << '\n';
  }
  return out.str();
}

std::string comparison_csv(const Comparison& c) {
  std::ostringstream out;
  out << "quantity,p2p,no_p2p\n";
  for (const auto& row : c.rows)
    out << row.quantity << ',' << fmt(row.p2p) << ',' << fmt(row.no_p2p) << '\n';
  return out.str();
}

std::string ablation_csv(const Ablation& a) {
  std::ostringstream out;
  out << "metric,with_prioritization,without_prioritization\n";
  out << "groups," << a.with.groups << ',' << a.without.groups << '\n';
  out << "producer_decision_variables," << a.with.producer_variables << ',' << a.without.producer_variables << '\n';
  out << "consumer_decision_variables," << a.with.consumer_variables << ',' << a.without.consumer_variables << '\n';
  out << "messages_per_iteration," << fmt(a.with.messages_per_iteration) << ','
      << fmt(a.without.messages_per_iteration) << '\n';
  out << "iterations," << a.with.iterations << ',' << a.without.iterations << '\n';
  out << "work_units," << a.with.work_units << ',' << a.without.work_units << '\n';
  out << "n_t," << a.with.n_t << ',' << a.without.n_t << '\n';
  out << "social_welfare_cents," << fmt(a.with.social_welfare) << ',' << fmt(a.without.social_welfare) << '\n';
  return out.str();
}

} // namespace gridtrade::sim
