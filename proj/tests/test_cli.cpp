// End-to-end checks of the command-line surface: each subcommand runs as
// a child process against real files in a temp directory.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "concord/io.hpp"
#include "concord/simulate.hpp"

using namespace concord;
using nlohmann::json;
namespace fs = std::filesystem;

#ifndef CONCORD_CLI_PATH
#error "CONCORD_CLI_PATH must point at the concord binary"
#endif

namespace {

struct CliRun {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("concord-cli-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

CliRun run_cli(const TempDir& dir, const std::string& args) {
  std::string log = dir.file("cli-log.txt");
  std::string command = std::string(CONCORD_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  int status = std::system(command.c_str());
  CliRun result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.output = read_file(log);
  return result;
}

void write_dataset(const std::string& path, int instances = 5, int items = 6, uint64_t seed = 21) {
  SimulateOptions gen;
  gen.instances = instances;
  gen.items = items;
  gen.seed = seed;
  write_instances_jsonl(path, generate_dataset(gen));
}

}  // namespace

TEST_CASE("evaluate produces reports and is byte-deterministic per seed") {
  TempDir dir;
  write_dataset(dir.file("data.jsonl"));

  std::string base = "evaluate -i " + dir.file("data.jsonl") + " --backend simulated --seed 42 --flip 0.2";
  auto r1 = run_cli(dir, base + " -o " + dir.file("out1"));
  REQUIRE(r1.exit_code == 0);
  auto r2 = run_cli(dir, base + " -o " + dir.file("out2"));
  REQUIRE(r2.exit_code == 0);

  CHECK(read_file(dir.file("out1/reports.jsonl")) == read_file(dir.file("out2/reports.jsonl")));
  CHECK(read_file(dir.file("out1/reports.csv")) == read_file(dir.file("out2/reports.csv")));
  CHECK(read_file(dir.file("out1/aggregate.json")) == read_file(dir.file("out2/aggregate.json")));

  auto different = run_cli(dir, base + " --m-cap 500 -o " + dir.file("out3"));
  REQUIRE(different.exit_code == 0);
}

TEST_CASE("evaluate with a perfect simulated backend reports 1.0 everywhere") {
  TempDir dir;
  write_dataset(dir.file("data.jsonl"));
  auto r = run_cli(dir, "evaluate -i " + dir.file("data.jsonl") + " -o " + dir.file("out") +
                            " --self-agreement --graphs");
  REQUIRE(r.exit_code == 0);

  auto agg = json::parse(read_file(dir.file("out/aggregate.json")));
  for (const char* metric : {"s_tran_3", "s_tran_4", "s_tran_5", "s_comm", "s_neg",
                             "human_agreement", "self_agreement"}) {
    INFO(metric);
    CHECK(agg.at("metrics").at(metric).at("mean").get<double>() == 1.0);
    CHECK(agg.at("metrics").at(metric).at("defined").get<int>() == 5);
  }
  CHECK(fs::exists(dir.file("out/graphs/sim-1.json")));
}

TEST_CASE("the --k list controls which transitivity columns exist") {
  TempDir dir;
  write_dataset(dir.file("data.jsonl"));
  auto r = run_cli(dir, "evaluate -i " + dir.file("data.jsonl") + " -o " + dir.file("out") + " --k 3,4");
  REQUIRE(r.exit_code == 0);
  std::string csv = read_file(dir.file("out/reports.csv"));
  CHECK(csv.find("s_tran_3") != std::string::npos);
  CHECK(csv.find("s_tran_4") != std::string::npos);
  CHECK(csv.find("s_tran_5") == std::string::npos);

  auto reports = read_reports_jsonl(dir.file("out/reports.jsonl"));
  for (const auto& rep : reports) {
    CHECK(rep.s_tran.count(3) == 1);
    CHECK(rep.s_tran.count(4) == 1);
    CHECK(rep.s_tran.count(5) == 0);
  }
}

TEST_CASE("augment then replay evaluation verifies perfect consistency") {
  TempDir dir;
  write_dataset(dir.file("data.jsonl"), 6, 6, 33);
  auto r = run_cli(dir, "augment -i " + dir.file("data.jsonl") + " -o " + dir.file("aug.jsonl") +
                            " --flip-fraction 0.1 --seed 7 --with-negated");
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("flipped 9 label(s)") != std::string::npos);

  auto e = run_cli(dir, "evaluate -i " + dir.file("aug.jsonl") + " -o " + dir.file("out") +
                            " --backend replay");
  REQUIRE(e.exit_code == 0);
  auto agg = json::parse(read_file(dir.file("out/aggregate.json")));
  CHECK(agg.at("metrics").at("s_tran_5").at("mean").get<double>() == 1.0);
  CHECK(agg.at("metrics").at("s_comm").at("mean").get<double>() == 1.0);
  CHECK(agg.at("metrics").at("s_neg").at("mean").get<double>() == 1.0);
}

TEST_CASE("rank emits sort reports and repeats byte-identically per seed") {
  TempDir dir;
  write_dataset(dir.file("data.jsonl"));
  std::string base = "rank -i " + dir.file("data.jsonl") + " --runs 3 --seed 5 --flip 0.1";
  auto r1 = run_cli(dir, base + " -o " + dir.file("r1"));
  REQUIRE(r1.exit_code == 0);
  auto r2 = run_cli(dir, base + " -o " + dir.file("r2"));
  REQUIRE(r2.exit_code == 0);
  CHECK(read_file(dir.file("r1/rank_reports.jsonl")) == read_file(dir.file("r2/rank_reports.jsonl")));

  std::istringstream lines(read_file(dir.file("r1/rank_reports.jsonl")));
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    auto rec = json::parse(line);
    CHECK(rec.at("predicted_ranking").size() == 6);
    CHECK(rec.at("comparator_calls").get<int>() <= 6 * 3);
    ++rows;
  }
  CHECK(rows == 15);  // 5 instances x 3 runs
}

TEST_CASE("rank --grid sweeps the noise grid into a CSV") {
  TempDir dir;
  write_dataset(dir.file("data.jsonl"), 2, 6, 3);
  atomic_write_file(dir.file("grid.json"),
                    R"([{"p_flip": 0.0}, {"p_flip": 0.3, "positional_bias": 0.2}])");
  auto r = run_cli(dir, "rank -i " + dir.file("data.jsonl") + " -o " + dir.file("out") + " --grid " +
                            dir.file("grid.json") + " --repetitions 10 --seed 3");
  REQUIRE(r.exit_code == 0);
  std::string csv = read_file(dir.file("out/sweep.csv"));
  std::istringstream lines(csv);
  std::string header, row0;
  std::getline(lines, header);
  std::getline(lines, row0);
  CHECK(header.find("spearman_raw") != std::string::npos);
  CHECK(row0.rfind("0,0,0,20,1,1,0,", 0) == 0);  // zero noise: spearman 1 both modes
}

TEST_CASE("correlate finds the planted relationship and rejects unknown metrics") {
  TempDir dir;
  write_dataset(dir.file("data.jsonl"), 4, 6, 17);
  for (int i = 0; i < 3; ++i) {
    double flip = 0.05 + 0.2 * i;
    auto r = run_cli(dir, "evaluate -i " + dir.file("data.jsonl") + " -o " + dir.file("out" + std::to_string(i)) +
                              " --flip " + std::to_string(flip) + " --seed 4");
    REQUIRE(r.exit_code == 0);
  }
  std::string reports = dir.file("out0/reports.jsonl") + " " + dir.file("out1/reports.jsonl") + " " +
                        dir.file("out2/reports.jsonl");
  auto r = run_cli(dir, "correlate --reports " + reports + " --x p_flip --y s_tran_5 --out " +
                            dir.file("scatter.csv"));
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("spearman(p_flip, s_tran_5)") != std::string::npos);
  CHECK(r.output.find("= -") != std::string::npos);  // more flips, less transitivity
  CHECK(read_file(dir.file("scatter.csv")).rfind("p_flip,s_tran_5\n", 0) == 0);

  auto bad = run_cli(dir, "correlate --reports " + reports + " --x nope --y s_comm");
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("unknown metric") != std::string::npos);

  // x == y column correlates to exactly 1.
  auto self = run_cli(dir, "correlate --reports " + reports + " --x s_comm --y s_comm");
  REQUIRE(self.exit_code == 0);
  CHECK(self.output.find("= 1") != std::string::npos);
}

TEST_CASE("report re-emits CSV and aggregate from saved reports") {
  TempDir dir;
  write_dataset(dir.file("data.jsonl"), 3, 5, 8);
  REQUIRE(run_cli(dir, "evaluate -i " + dir.file("data.jsonl") + " -o " + dir.file("out")).exit_code == 0);
  auto r = run_cli(dir, "report --reports " + dir.file("out/reports.jsonl") + " --csv " +
                            dir.file("again.csv") + " --aggregate " + dir.file("again.json") +
                            " --graphs " + dir.file("graphs"));
  REQUIRE(r.exit_code == 0);
  CHECK(read_file(dir.file("again.csv")) == read_file(dir.file("out/reports.csv")));
  CHECK(fs::exists(dir.file("graphs/sim-3.json")));
  auto graph = json::parse(read_file(dir.file("graphs/sim-3.json")));
  CHECK(graph.contains("nodes"));
  CHECK(graph.contains("edges"));
}

TEST_CASE("malformed dataset lines are skipped; all-bad input is a data error") {
  TempDir dir;
  write_dataset(dir.file("data.jsonl"), 3, 5, 2);
  std::string contents = read_file(dir.file("data.jsonl"));
  atomic_write_file(dir.file("mixed.jsonl"), "garbage line\n" + contents);
  auto r = run_cli(dir, "evaluate -i " + dir.file("mixed.jsonl") + " -o " + dir.file("out"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("skipped malformed line") != std::string::npos);
  CHECK(r.output.find("evaluated 3 instance(s)") != std::string::npos);

  atomic_write_file(dir.file("bad.jsonl"), "garbage\nmore garbage\n");
  auto bad = run_cli(dir, "evaluate -i " + dir.file("bad.jsonl") + " -o " + dir.file("out"));
  CHECK(bad.exit_code == 2);
}

TEST_CASE("exit codes distinguish config and data errors") {
  TempDir dir;
  write_dataset(dir.file("data.jsonl"), 2, 4, 1);
  CHECK(run_cli(dir, "evaluate -i " + dir.file("missing.jsonl") + " -o " + dir.file("out")).exit_code == 2);
  CHECK(run_cli(dir, "evaluate -i " + dir.file("data.jsonl") + " --backend bogus -o " +
                         dir.file("out")).exit_code == 1);
  CHECK(run_cli(dir, "evaluate --no-such-flag").exit_code == 1);
  CHECK(run_cli(dir, "").exit_code == 1);
  CHECK(run_cli(dir, "--help").exit_code == 0);
}

TEST_CASE("a config file provides defaults that flags override") {
  TempDir dir;
  write_dataset(dir.file("data.jsonl"), 2, 5, 6);
  atomic_write_file(dir.file("concord.toml"), "[evaluate]\nseed = 9\nk = [3]\n");
  auto r = run_cli(dir, "--config " + dir.file("concord.toml") + " evaluate -i " +
                            dir.file("data.jsonl") + " -o " + dir.file("out"));
  REQUIRE(r.exit_code == 0);
  auto reports = read_reports_jsonl(dir.file("out/reports.jsonl"));
  REQUIRE_FALSE(reports.empty());
  CHECK(reports[0].sampling.seed == 9);
  CHECK(reports[0].s_tran.size() == 1);

  auto overridden = run_cli(dir, "--config " + dir.file("concord.toml") + " evaluate -i " +
                                     dir.file("data.jsonl") + " -o " + dir.file("out2") + " --seed 4");
  REQUIRE(overridden.exit_code == 0);
  CHECK(read_reports_jsonl(dir.file("out2/reports.jsonl"))[0].sampling.seed == 4);
}
