#include "gridtrade/cli/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gridtrade;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  Invocation r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("gridtrade-test-" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

} // namespace

TEST_CASE("run writes the stable report files") {
  TempDir dir("run");
  auto r = invoke({"run", "--scenario", "tiny2x2", "--out", dir / "out"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.rfind("run tiny2x2: n_T=", 0) == 0);
  CHECK(r.out.find("blocks=") != std::string::npos);
  for (const char* f : {"trades.csv", "summary.json", "ledger.jsonl", "adverts.jsonl"})
    CHECK(fs::exists(dir.path / "out" / f));

  auto ok = invoke({"verify-col", "--scenario", "tiny2x2", "--proof", dir / "out/adverts.jsonl"});
  CHECK(ok.code == cli::kOk);
  CHECK(ok.out == "verify-col: accepted\n");
  auto wrong = invoke({"verify-col", "--scenario", "tiny2x2", "--proof", dir / "out/adverts.jsonl", "--message", "x"});
  CHECK(wrong.code == cli::kFailure);
  CHECK(wrong.out.find("step 2") != std::string::npos);
  // another seed installs different meters, so the verifier is no longer genuine
  auto other = invoke({"verify-col", "--scenario", "tiny2x2", "--seed", "99", "--proof", dir / "out/adverts.jsonl"});
  CHECK(other.code == cli::kFailure);
}

TEST_CASE("overrides reach the run") {
  TempDir dir("overrides");
  auto base = invoke({"run", "--scenario", "tiny2x2", "--out", dir / "a"});
  auto blocked = invoke({"run", "--scenario", "tiny2x2", "--omega", "10000", "--out", dir / "b"});
  CHECK(blocked.code == cli::kOk);
  CHECK(blocked.out.find("n_T=0") != std::string::npos);
  CHECK(base.out != blocked.out);
  auto off = invoke({"run", "--scenario", "tiny2x2", "--ad-mode", "off", "--groups", "2", "--epsilon", "0.0005",
                     "--out", dir / "c"});
  CHECK(off.code == cli::kOk);
  std::ifstream summary(dir / "c/summary.json");
  std::stringstream text;
  text << summary.rdbuf();
  CHECK(text.str().find("\"AT\"") != std::string::npos);
  CHECK(text.str().find("\"groups\": 2") != std::string::npos);
}

TEST_CASE("sweep, compare and ablate emit their tables") {
  TempDir dir("tables");
  auto s = invoke({"sweep", "--scenario", "tiny2x2", "--omega", "0,1,2", "--out", dir / "s"});
  CHECK(s.code == cli::kOk);
  CHECK(fs::exists(dir.path / "s/sweep.csv"));
  auto c = invoke({"compare", "--scenario", "tiny2x2", "--format", "json", "--out", dir / "c"});
  CHECK(c.code == cli::kOk);
  CHECK(fs::exists(dir.path / "c/comparison.json"));
  auto a = invoke({"ablate", "--scenario", "tiny2x2", "--groups", "2", "--out", dir / "a"});
  CHECK(a.code == cli::kOk);
  CHECK(fs::exists(dir.path / "a/ablation.csv"));
}

TEST_CASE("bad flags exit 2") {
  CHECK(invoke({}).code == cli::kBadFlags);
  CHECK(invoke({"launch"}).code == cli::kBadFlags);
  CHECK(invoke({"run"}).code == cli::kBadFlags);
  CHECK(invoke({"run", "--scenario", "tiny1x1", "--omega", "-1"}).code == cli::kBadFlags);
  CHECK(invoke({"run", "--scenario", "tiny1x1", "--format", "xml"}).code == cli::kBadFlags);
  CHECK(invoke({"run", "--scenario", "tiny1x1", "--ad-mode", "maybe"}).code == cli::kBadFlags);
  CHECK(invoke({"sweep", "--scenario", "tiny1x1", "--omega", "2,1"}).code == cli::kBadFlags);
  CHECK(invoke({"sweep", "--scenario", "tiny1x1", "--omega", "a,b"}).code == cli::kBadFlags);
  auto usage = invoke({"run", "-x"});
  CHECK(usage.err.find("--scenario") != std::string::npos);
  CHECK(invoke({"--help"}).code == cli::kOk);
}

TEST_CASE("invalid scenarios exit 3 with a line number") {
  TempDir dir("invalid");
  {
    std::ofstream f(dir / "bad.json");
    f << "{\n  \"name\": \"x\",\n  \"topology\": \"case33\",\n  \"omega\": true,\n  \"generate\": {}\n}\n";
  }
  auto r = invoke({"run", "--scenario", dir / "bad.json", "--out", dir / "o"});
  CHECK(r.code == cli::kBadScenario);
  CHECK(r.err.find("line 4") != std::string::npos);
  CHECK(invoke({"run", "--scenario", dir / "missing.json"}).code == cli::kBadScenario);
}

TEST_CASE("non-convergence exits 4 after writing reports") {
  TempDir dir("stall");
  {
    std::ofstream f(dir / "stall.json");
    f << R"({"name": "stall", "topology": "case33", "omega": 1, "solver": {"max_iter": 5},
  "producers": [{"id": "p4", "bus": 4, "a": 1, "b": 5, "e_min": 0, "e_max": 10}],
  "consumers": [{"id": "c5", "bus": 5, "a": 1, "b": 20, "e_min": 0, "e_max": 10}]})";
  }
  auto r = invoke({"run", "--scenario", dir / "stall.json", "--out", dir / "o"});
  CHECK(r.code == cli::kNotConverged);
  CHECK(r.out.find("NOT CONVERGED") != std::string::npos);
  CHECK(fs::exists(dir.path / "o/summary.json"));
}
