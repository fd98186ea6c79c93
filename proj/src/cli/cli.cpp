#include "gridtrade/cli/cli.hpp"

#include "gridtrade/error.hpp"
#include "gridtrade/sim/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace gridtrade::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Overrides {
  std::string scenario;
  std::string out_dir = "out";
  std::string format = "csv";
  std::optional<double> omega;
  std::optional<int> groups;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<std::string> ad_mode;
};

void add_common(CLI::App* cmd, Overrides& o, bool single_omega) {
  cmd->add_option("--scenario", o.scenario, "bundled scenario name or path to a scenario JSON")->required();
  cmd->add_option("--out", o.out_dir, "directory for report files")->capture_default_str();
  cmd->add_option("--format", o.format, "report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  if (single_omega)
    cmd->add_option("--omega", o.omega, "grid service charge rate, cents/kWh/km")->check(CLI::NonNegativeNumber);
  cmd->add_option("--groups", o.groups, "number of priority groups")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "seed for roster sampling and verifier choice");
  cmd->add_option("--epsilon", o.epsilon, "convergence tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--ad-mode", o.ad_mode, "keep adverts in the advertisement database")
      ->check(CLI::IsMember({"on", "off"}));
}

sim::Scenario load(const Overrides& o) {
  auto s = sim::resolve_scenario(o.scenario);
  if (o.seed)
    sim::reseed(s, *o.seed);
  if (o.omega)
    s.omega = *o.omega;
  if (o.groups)
    s.groups = *o.groups;
  if (o.epsilon)
    s.solver.epsilon = *o.epsilon;
  if (o.ad_mode)
    s.ad_mode = *o.ad_mode == "on";
  sim::validate(s);
  return s;
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw Error(Errc::InvalidParameter, "cannot write " + path.string());
  f << body;
}

fs::path out_dir(const Overrides& o) {
  fs::path dir(o.out_dir);
  fs::create_directories(dir);
  return dir;
}

std::string num(double v, int digits = 2) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::vector<double> parse_omegas(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v < 0.0)
      throw Error(Errc::BadFlags, "--omega expects comma-separated non-negative numbers, got '" + text + "'");
    out.push_back(v);
  }
  if (out.empty())
    throw Error(Errc::BadFlags, "--omega needs at least one value");
  if (!std::is_sorted(out.begin(), out.end()))
    throw Error(Errc::BadFlags, "--omega values must be ascending");
  return out;
}

int cmd_run(const Overrides& o, std::ostream& out) {
  auto s = load(o);
  sim::MarketSession session(s);
  for (int t = 0; t < s.intervals; ++t)
    session.run_interval(t);
  auto r = session.result();
  auto dir = out_dir(o);
  write_file(dir / "summary.json", sim::to_json(r).dump(2) + "\n");
  write_file(dir / "trades.csv", sim::trades_csv(r));
  std::ostringstream chain;
  session.ledger().export_jsonl(chain);
  write_file(dir / "ledger.jsonl", chain.str());
  std::ostringstream ads;
  for (const auto& at : r.intervals.back().adverts)
    ads << json{{"message", crypto::base64_encode(ledger::advertisement_content(at.side, at.value, at.reputation))},
                {"proof", apol::to_json(*at.col)}}
               .dump()
        << '\n';
  write_file(dir / "adverts.jsonl", ads.str());

  out << "run " << r.scenario << ": n_T=" << r.n_t() << " welfare=" << num(r.social_welfare())
      << " blocks=" << r.blocks << (r.converged() ? "" : " NOT CONVERGED") << '\n';
  return r.converged() ? kOk : kNotConverged;
}

int cmd_sweep(const Overrides& o, const std::string& omega_text, std::ostream& out) {
  auto omegas = parse_omegas(omega_text);
  auto s = load(o);
  auto runs = sim::run_sweep(s, omegas, Execution::Parallel);
  auto dir = out_dir(o);
  if (o.format == "json")
    write_file(dir / "sweep.json", sim::sweep_json(runs).dump(2) + "\n");
  else
    write_file(dir / "sweep.csv", sim::sweep_csv(runs));
  bool converged = true;
  out << "sweep " << s.name << ":";
  for (const auto& r : runs) {
    out << " omega=" << num(r.omega, 3) << " n_T=" << r.n_t() << ';';
    converged = converged && r.converged();
  }
  out << '\n';
  return converged ? kOk : kNotConverged;
}

int cmd_compare(const Overrides& o, std::ostream& out) {
  auto s = load(o);
  auto c = sim::compare_p2p_vs_grid(s);
  auto dir = out_dir(o);
  if (o.format == "json")
    write_file(dir / "comparison.json", sim::to_json(c).dump(2) + "\n");
  else
    write_file(dir / "comparison.csv", sim::comparison_csv(c));
  out << "compare " << s.name << ": grid import " << num(c.rows[0].p2p) << " kWh with P2P, " << num(c.rows[0].no_p2p)
      << " kWh without; n_T=" << c.with_p2p.n_t() << " welfare=" << num(c.with_p2p.social_welfare())
      << " blocks=" << c.with_p2p.blocks << '\n';
  return c.with_p2p.converged() ? kOk : kNotConverged;
}

int cmd_ablate(const Overrides& o, std::ostream& out) {
  auto s = load(o);
  auto a = sim::prioritization_ablation(s);
  auto dir = out_dir(o);
  if (o.format == "json")
    write_file(dir / "ablation.json", sim::to_json(a).dump(2) + "\n");
  else
    write_file(dir / "ablation.csv", sim::ablation_csv(a));
  out << "ablate " << s.name << ": messages/iteration " << num(a.with.messages_per_iteration) << " (N=" << a.with.groups
      << ") vs " << num(a.without.messages_per_iteration) << " (N=1); work units " << a.with.work_units << " vs "
      << a.without.work_units << '\n';
  return kOk;
}

int cmd_verify(const Overrides& o, const std::string& proof_path, const std::optional<std::string>& message,
               std::ostream& out) {
  auto s = load(o);
  std::ifstream in(proof_path);
  if (!in)
    throw Error(Errc::BadFlags, "cannot open proof file " + proof_path);
  json doc;
  try {
    std::string first;
    std::getline(in, first);
    doc = json::parse(first);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidCoL, std::string("proof file is not JSON: ") + e.what());
  }
  const json& proof_doc = doc.contains("proof") ? doc["proof"] : doc;
  Bytes msg;
  if (message) {
    msg.assign(message->begin(), message->end());
  } else if (doc.contains("message") && doc["message"].is_string()) {
    auto raw = crypto::base64_decode(doc["message"].get<std::string>());
    if (!raw)
      throw Error(Errc::InvalidCoL, "message is not base64");
    msg = *raw;
  } else {
    throw Error(Errc::BadFlags, "no message: pass --message or include one in the proof file");
  }
  sim::MarketSession session(s);
  auto verdict = apol::verify_col(apol::proof_from_json(proof_doc), session.ca(), msg);
  if (verdict) {
    out << "verify-col: accepted\n";
    return kOk;
  }
  out << "verify-col: rejected at step " << verdict.failed_step << ": " << verdict.reason << '\n';
  return kFailure;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Peer-to-peer energy market simulator", "gridtrade"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gridtrade 1.0");

  Overrides run_o, sweep_o, cmp_o, abl_o, ver_o;
  std::string omega_list;
  std::string proof_path;
  std::optional<std::string> message;

  auto* run_cmd = app.add_subcommand("run", "settle every interval of a scenario and write trades, summary and ledger");
  add_common(run_cmd, run_o, true);
  auto* sweep_cmd = app.add_subcommand("sweep", "repeat the run over several service-charge rates");
  add_common(sweep_cmd, sweep_o, false);
  sweep_cmd->add_option("--omega", omega_list, "comma-separated ascending rates, e.g. 0,1,2,4")->required();
  auto* abl_cmd = app.add_subcommand("ablate", "compare the configured group count against a single group");
  add_common(abl_cmd, abl_o, true);
  auto* cmp_cmd = app.add_subcommand("compare", "P2P market against grid-only trading");
  add_common(cmp_cmd, cmp_o, true);
  auto* ver_cmd = app.add_subcommand("verify-col", "check a certificate of location against the scenario's meters");
  add_common(ver_cmd, ver_o, true);
  ver_cmd->add_option("--proof", proof_path, "JSON file with a proof, e.g. one line of adverts.jsonl")->required();
  ver_cmd->add_option("--message", message, "signed message as text; defaults to the one in the proof file");

  std::vector<std::string> argv_store{"gridtrade"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store)
    argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << "gridtrade 1.0\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kBadFlags;
  }

  try {
    if (*run_cmd)
      return cmd_run(run_o, out);
    if (*sweep_cmd)
      return cmd_sweep(sweep_o, omega_list, out);
    if (*abl_cmd)
      return cmd_ablate(abl_o, out);
    if (*cmp_cmd)
      return cmd_compare(cmp_o, out);
    return cmd_verify(ver_o, proof_path, message, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.code()) {
    case Errc::BadFlags:
      return kBadFlags;
    case Errc::ScenarioInvalid:
      return kBadScenario;
    default:
      return kFailure;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

} // namespace gridtrade::cli
