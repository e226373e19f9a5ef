#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dynamo/cli.hpp"
#include "dynamo/dataset.hpp"
#include "dynamo/metrics.hpp"

using namespace dynamo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("dynamo_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> quick_run_flags(const fs::path& out) {
  return {"run", "--task", "branin", "--optimizer", "adam", "--b", "8", "--k", "16", "--n", "200",
          "--epochs", "10", "--max-iterations", "4", "--out", out.string()};
}

}  // namespace

TEST_CASE("gen-data") {
  TempDir dir("gen");
  const auto a = dir.path / "a.csv", b = dir.path / "b.csv";
  CHECK(cli({"gen-data", "--task", "branin", "--n", "800", "--seed", "7", "--ceiling", "0.9", "--out", a.string()}) == 0);
  CHECK(cli({"gen-data", "--task", "branin", "--n", "800", "--seed", "7", "--ceiling", "0.9", "--out", b.string()}) == 0);
  CHECK(load_dataset(a).size() == 720);
  CHECK(slurp(a) == slurp(b));
  const auto j = dir.path / "c.json";
  CHECK(cli({"gen-data", "--task", "seq-toy", "--n", "50", "--out", j.string()}) == 0);
  CHECK(load_dataset(j).kind() == DesignKind::kDiscreteRelaxed);
}

TEST_CASE("usage errors exit with 2") {
  std::string text;
  CHECK(cli({"gen-data", "--n", "10"}, &text) == 2);
  CHECK(text.find("--task") != std::string::npos);
  CHECK(cli({}) == 2);
  CHECK(cli({"frobnicate"}) == 2);
  CHECK(cli({"run", "--optimizer", "simplex"}) == 2);
  CHECK(cli({"run", "--dynamo", "--baseline"}) == 2);
  CHECK(cli({"--help"}) == 0);
}

TEST_CASE("run writes per-seed results and an aggregate") {
  TempDir dir("run");
  auto args = quick_run_flags(dir.path);
  args.insert(args.end(), {"--seeds", "0..9", "--jobs", "2"});
  CHECK(cli(args) == 0);
  int jsons = 0;
  for (const auto& e : fs::directory_iterator(dir.path)) jsons += e.path().extension() == ".json";
  CHECK(jsons == 10);
  CHECK(fs::exists(dir.path / "dynamo-adam_seed3_iterations.csv"));
  const auto agg = parse_csv_table(slurp(dir.path / "aggregate.csv"));
  CHECK(agg.rows.size() >= 1);
  const auto j = nlohmann::json::parse(slurp(dir.path / "dynamo-adam_seed0.json"));
  CHECK(j["top_k_designs"].size() == 16);
}

TEST_CASE("beta 0 matches the baseline flag") {
  TempDir a("beta0"), b("baseline");
  auto args_a = quick_run_flags(a.path);
  args_a.insert(args_a.end(), {"--beta", "0", "--pinned-lambda", "0"});
  auto args_b = quick_run_flags(b.path);
  args_b.push_back("--baseline");
  REQUIRE(cli(args_a) == 0);
  REQUIRE(cli(args_b) == 0);
  const auto ja = nlohmann::json::parse(slurp(a.path / "dynamo-adam_seed0.json"));
  const auto jb = nlohmann::json::parse(slurp(b.path / "adam_seed0.json"));
  CHECK(ja["metrics"]["best_at_k"] == jb["metrics"]["best_at_k"]);
}

TEST_CASE("report ranks methods") {
  TempDir dir("report");
  auto write = [&](const std::string& label, const std::string& task, double best, double ref) {
    nlohmann::json j;
    j["label"] = label;
    j["config"] = {{"task", task}};
    MetricReport m, r;
    m.best_at_k = best;
    r.best_at_k = ref;
    j["metrics"] = m.to_json();
    j["reference"] = r.to_json();
    std::ofstream(dir.path / (label + "_" + task + ".json")) << j.dump();
  };
  write("good", "t1", 0.9, 0.5);
  write("bad", "t1", 0.4, 0.5);
  write("good", "t2", 0.8, 0.6);
  write("bad", "t2", 0.7, 0.6);
  REQUIRE(cli({"report", "--dir", dir.path.string()}) == 0);
  const auto t = parse_csv_table(slurp(dir.path / "rank_gap.csv"));
  bool seen_good = false, seen_bad = false;
  for (const auto& row : t.rows) {
    if (row[0] != "best_at_k") continue;
    if (row[1] == "good") {
      seen_good = true;
      CHECK(std::stod(row[2]) == 1.0);
      CHECK(std::stod(row[3]) == doctest::Approx(0.3));
    }
    if (row[1] == "bad") {
      seen_bad = true;
      CHECK(std::stod(row[2]) == 2.0);
    }
  }
  CHECK(seen_good);
  CHECK(seen_bad);

  TempDir empty("report_empty");
  CHECK(cli({"report", "--dir", empty.path.string()}) == 2);
  CHECK(cli({"report", "--dir", (empty.path / "missing").string()}) == 2);
}

TEST_CASE("output directory from the environment") {
  TempDir dir("env");
  ::setenv("DYNAMO_OUT_DIR", dir.path.c_str(), 1);
  CHECK(cli({"gen-data", "--task", "gaussian-modes", "--n", "30"}) == 0);
  ::unsetenv("DYNAMO_OUT_DIR");
  CHECK(fs::exists(dir.path / "gaussian-modes.csv"));
}

TEST_CASE("check subcommand passes") {
  std::string text;
  CHECK(cli({"check"}, &text) == 0);
  CHECK(text.find("FAIL") == std::string::npos);
}
