// concord: measure the logical consistency of pairwise comparators,
// refine noisy preference datasets into self-consistent ones, and run a
// calibrated merge-sort rank aggregator scored against gold rankings.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "concord/augment.hpp"
#include "concord/comparator.hpp"
#include "concord/core.hpp"
#include "concord/evaluation.hpp"
#include "concord/io.hpp"
#include "concord/metrics.hpp"
#include "concord/pairs.hpp"
#include "concord/remote.hpp"
#include "concord/simulate.hpp"

namespace fs = std::filesystem;
using namespace concord;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;

// Flag-level problems that CLI11 cannot catch on its own.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------
// Backend selection
// ---------------------------------------------------------------------

struct SimulatedFlags {
  double flip = 0.0;
  double bias = 0.0;
  double neg_fail = 0.0;
  double confidence = 0.9;
  double bias_confidence = 0.75;
  uint64_t seed = 42;
};

struct RemoteFlags {
  RemoteModelConfig config;
  std::string template_path;
  std::string cot_template_path;
  bool chain_of_thought = false;
  std::string audit_path;
};

// Builds the comparator for each instance. Simulated and replay backends
// are per-instance; the remote client is shared.
class BackendFactory {
 public:
  BackendFactory(std::string kind, SimulatedFlags sim, const RemoteFlags& remote)
      : kind_(std::move(kind)), sim_(sim) {
    if (kind_ == "remote") {
      PromptTemplate direct = remote.template_path.empty()
                                  ? PromptTemplate::direct_default()
                                  : template_from_file(remote.template_path, PromptMode::Direct);
      PromptTemplate cot = remote.cot_template_path.empty()
                               ? PromptTemplate::chain_of_thought_default()
                               : template_from_file(remote.cot_template_path, PromptMode::ChainOfThought);
      shared_ = std::make_unique<RemoteComparator>(remote.config, std::move(direct), std::move(cot),
                                                   remote.chain_of_thought, remote.audit_path);
    } else if (kind_ != "simulated" && kind_ != "replay") {
      throw ConfigError("unknown backend '" + kind_ + "' (expected simulated, replay or remote)");
    }
  }

  Comparator& for_instance(const Instance& inst) {
    if (shared_) return *shared_;
    if (kind_ == "replay") {
      current_ = std::make_unique<ReplayComparator>(inst);
    } else {
      current_ = std::make_unique<SimulatedComparator>(simulated_config(inst), inst.instance_id);
    }
    return *current_;
  }

  // Fresh simulated judge for one (instance, run) pair; rank sweeps want
  // independent noise per repetition.
  std::unique_ptr<Comparator> for_run(const Instance& inst, uint64_t run_seed) const {
    auto cfg = simulated_config(inst);
    cfg.seed = hash_combine(run_seed, 0x636f6d7061726572ull);
    return std::make_unique<SimulatedComparator>(cfg, inst.instance_id);
  }

  bool is_simulated() const { return kind_ == "simulated"; }

  // Numeric columns describing the backend, attached to each report so
  // downstream correlation can regress scores against noise levels.
  std::map<std::string, double> metadata() const {
    if (kind_ != "simulated") return {};
    return {{"p_flip", sim_.flip}, {"positional_bias", sim_.bias}, {"p_neg_fail", sim_.neg_fail}};
  }

 private:
  SimulatedComparatorConfig simulated_config(const Instance& inst) const {
    SimulatedComparatorConfig cfg;
    if (inst.gold_ranking.size() == inst.items.size()) {
      cfg.ground_ranking = inst.gold_ranking;
    } else {
      for (const auto& it : inst.items) cfg.ground_ranking.push_back(it.id);
    }
    cfg.p_flip = sim_.flip;
    cfg.positional_bias = sim_.bias;
    cfg.p_neg_fail = sim_.neg_fail;
    cfg.honest_confidence = sim_.confidence;
    cfg.bias_confidence = sim_.bias_confidence;
    cfg.seed = sim_.seed;
    return cfg;
  }

  std::string kind_;
  SimulatedFlags sim_;
  std::unique_ptr<Comparator> shared_;
  std::unique_ptr<Comparator> current_;
};

std::vector<Instance> load_dataset(const std::string& path) {
  auto result = read_instances_jsonl(path);
  for (const auto& [line, message] : result.errors)
    std::cerr << path << ":" << line << ": skipped malformed line: " << message << "\n";
  if (result.instances.empty())
    throw Error("no usable instances in " + path +
                (result.errors.empty() ? "" : " (" + std::to_string(result.errors.size()) + " bad lines)"));
  return result.instances;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir + ": " + ec.message());
}

// ---------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------

struct EvaluateArgs {
  std::string input;
  std::string out_dir = "out";
  std::string backend = "simulated";
  std::vector<int> k_values{3, 4, 5};
  int m_cap = 1000;
  uint64_t seed = 42;
  bool no_negation = false;
  bool both_orders = false;
  int self_agreement = 0;
  int jobs = 1;
  bool graphs = false;
  bool weighted = false;
  SimulatedFlags sim;
  RemoteFlags remote;
};

int cmd_evaluate(const EvaluateArgs& args) {
  auto dataset = load_dataset(args.input);
  BackendFactory backend(args.backend, args.sim, args.remote);

  EvaluateOptions opts;
  opts.k_values = args.k_values;
  opts.m_cap = args.m_cap;
  opts.seed = args.seed;
  opts.include_negation = !args.no_negation;
  opts.self_agreement_samples = args.self_agreement;
  opts.graph_mode = args.both_orders ? GraphMode::BothOrders : GraphMode::Canonical;
  opts.jobs = args.jobs;

  std::vector<ConsistencyReport> reports;
  reports.reserve(dataset.size());
  for (const auto& inst : dataset) {
    auto report = evaluate_instance(inst, backend.for_instance(inst), opts);
    report.metadata = backend.metadata();
    reports.push_back(std::move(report));
  }

  ensure_dir(args.out_dir);
  auto out = [&args](const std::string& name) { return (fs::path(args.out_dir) / name).string(); };
  write_reports_jsonl(out("reports.jsonl"), reports);
  atomic_write_file(out("reports.csv"), reports_to_csv(reports));
  auto aggregate = aggregate_reports(reports, args.weighted);
  atomic_write_file(out("aggregate.json"), aggregate_to_json(aggregate).dump(2) + "\n");
  if (args.graphs) {
    ensure_dir(out("graphs"));
    for (const auto& r : reports)
      atomic_write_file(out("graphs/" + r.instance_id + ".json"), graph_to_json(r.graph).dump() + "\n");
  }

  std::cout << "evaluated " << reports.size() << " instance(s) with backend " << args.backend << "\n";
  for (const auto& [name, m] : aggregate.metrics)
    std::cout << "  " << name << "  mean " << fmt(m.mean) << "  (" << m.defined << " defined)\n";
  std::cout << "wrote " << out("reports.jsonl") << ", " << out("reports.csv") << ", "
            << out("aggregate.json") << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------

struct AugmentArgs {
  std::string input;
  std::string output;
  double flip_fraction = -1.0;  // < 0 means off
  uint64_t seed = 42;
  bool total_order = false;
  bool with_negated = false;
  bool no_verify = false;
  std::string export_pairs;
  std::string template_path;
};

// Mean s_tran(min(5, N)) and s_comm of a dataset, measured by replaying
// each instance's own annotations through the metrics pipeline.
std::pair<std::string, std::string> verified_scores(const std::vector<Instance>& dataset) {
  double tran_sum = 0.0, comm_sum = 0.0;
  int tran_n = 0, comm_n = 0;
  for (const auto& inst : dataset) {
    if (inst.annotations.empty() || inst.items.size() < 2) continue;
    ReplayComparator cmp(inst);
    EvaluateOptions opts;
    opts.k_values = {std::min<int>(5, static_cast<int>(inst.items.size()))};
    opts.include_negation = false;
    auto report = evaluate_instance(inst, cmp, opts);
    if (!report.s_tran.empty()) {
      tran_sum += report.s_tran.begin()->second;
      ++tran_n;
    }
    if (report.s_comm) {
      comm_sum += *report.s_comm;
      ++comm_n;
    }
  }
  return {tran_n ? fmt(tran_sum / tran_n) : "-", comm_n ? fmt(comm_sum / comm_n) : "-"};
}

int cmd_augment(const AugmentArgs& args) {
  auto dataset = load_dataset(args.input);

  AugmentOptions opts;
  if (args.flip_fraction >= 0.0) opts.flip_fraction = args.flip_fraction;
  opts.seed = args.seed;
  opts.tie_mode = args.total_order ? TieMode::TotalOrder : TieMode::Partial;
  opts.with_negated = args.with_negated;

  auto result = augment_dataset(dataset, opts);
  write_instances_jsonl(args.output, result.instances);

  auto print_row = [](const std::string& stage, const std::string& tran, const std::string& comm,
                      const DatasetStats& s) {
    std::printf("  %-14s %10s %8s %10zu %12.4g\n", stage.c_str(), tran.c_str(), comm.c_str(),
                s.data_size, s.avg_comp_per_inst);
  };
  std::printf("  %-14s %10s %8s %10s %12s\n", "stage", "s_tran(5)", "s_comm", "data", "avg/inst");
  print_row("input", "-", "-", result.input_stats);
  if (opts.flip_fraction) {
    std::cout << "  flipped " << result.flipped << " label(s) (fraction "
              << fmt(*opts.flip_fraction) << ", seed " << args.seed << ")\n";
    print_row("perturbed", "-", "-", result.perturbed_stats);
  }
  if (args.no_verify) {
    print_row("augmented", "-", "-", result.output_stats);
  } else {
    auto [tran, comm] = verified_scores(result.instances);
    print_row(args.with_negated ? "augmented+neg" : "augmented", tran, comm, result.output_stats);
  }
  std::cout << "wrote " << args.output << "\n";

  if (!args.export_pairs.empty()) {
    PromptTemplate tmpl = args.template_path.empty()
                              ? PromptTemplate::direct_default()
                              : template_from_file(args.template_path, PromptMode::Direct);
    auto n = export_training_pairs(result.instances, tmpl, args.export_pairs, args.seed);
    std::cout << "exported " << n << " training pair(s) to " << args.export_pairs << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------
// rank
// ---------------------------------------------------------------------

struct RankArgs {
  std::string input;
  std::string out_dir = "out";
  std::string backend = "simulated";
  bool calibrated = false;
  uint64_t seed = 42;
  int runs = 1;
  bool no_shuffle = false;
  std::string grid_path;
  int repetitions = 100;
  SimulatedFlags sim;
  RemoteFlags remote;
};

int cmd_rank(const RankArgs& args) {
  auto dataset = load_dataset(args.input);
  ensure_dir(args.out_dir);
  auto out = [&args](const std::string& name) { return (fs::path(args.out_dir) / name).string(); };

  if (!args.grid_path.empty()) {
    auto grid = sweep_grid_from_json(json::parse(read_file(args.grid_path)));
    auto rows = sweep_experiment(grid, dataset, args.repetitions, args.seed);
    atomic_write_file(out("sweep.csv"), sweep_to_csv(rows));
    std::cout << "swept " << rows.size() << " grid point(s), " << args.repetitions
              << " repetition(s) per instance\n";
    for (const auto& r : rows)
      std::cout << "  flip " << fmt(r.point.p_flip) << "  bias " << fmt(r.point.positional_bias)
                << "  raw " << fmt(r.mean_spearman_raw) << "  calibrated "
                << fmt(r.mean_spearman_calibrated) << "  gain "
                << fmt(r.mean_spearman_calibrated - r.mean_spearman_raw) << "\n";
    std::cout << "wrote " << out("sweep.csv") << "\n";
    return kExitOk;
  }

  BackendFactory backend(args.backend, args.sim, args.remote);
  std::ostringstream lines;
  double spearman_sum = 0.0;
  int spearman_n = 0;
  long long calls = 0, fallbacks = 0, total_runs = 0;
  for (std::size_t ii = 0; ii < dataset.size(); ++ii) {
    const Instance& inst = dataset[ii];
    for (int run = 0; run < args.runs; ++run) {
      uint64_t run_seed = hash_combine(hash_combine(args.seed, static_cast<uint64_t>(ii)),
                                       static_cast<uint64_t>(run));
      std::unique_ptr<Comparator> owned;
      Comparator* cmp;
      if (backend.is_simulated()) {
        owned = backend.for_run(inst, run_seed);
        cmp = owned.get();
      } else {
        cmp = &backend.for_instance(inst);
      }
      auto report = pairs_rank(inst, *cmp, args.calibrated, run_seed, !args.no_shuffle);
      lines << sort_report_to_json(report).dump() << '\n';
      if (report.spearman_vs_gold) {
        spearman_sum += *report.spearman_vs_gold;
        ++spearman_n;
      }
      calls += report.comparator_calls;
      fallbacks += report.fallbacks;
      ++total_runs;
    }
  }
  atomic_write_file(out("rank_reports.jsonl"), lines.str());

  std::cout << "ranked " << dataset.size() << " instance(s) x " << args.runs << " run(s)"
            << (args.calibrated ? " (calibrated)" : "") << "\n";
  if (spearman_n > 0)
    std::cout << "  mean spearman_vs_gold " << fmt(spearman_sum / spearman_n) << "  (" << spearman_n
              << " scored)\n";
  std::cout << "  mean comparator calls " << fmt(static_cast<double>(calls) / total_runs)
            << "  fallbacks " << fallbacks << "\n";
  std::cout << "wrote " << out("rank_reports.jsonl") << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------
// simulate / correlate / report
// ---------------------------------------------------------------------

int cmd_simulate(const SimulateOptions& opts, const std::string& output) {
  auto dataset = generate_dataset(opts);
  write_instances_jsonl(output, dataset);
  auto stats = dataset_stats(dataset);
  std::cout << "wrote " << dataset.size() << " instance(s), " << stats.data_size
            << " annotation(s) to " << output << "\n";
  return kExitOk;
}

struct CorrelateArgs {
  std::vector<std::string> report_files;
  std::string x_metric;
  std::string y_metric;
  std::string method = "spearman";
  std::string scatter_out;
};

int cmd_correlate(const CorrelateArgs& args) {
  if (!known_metric_name(args.x_metric) && args.x_metric.empty())
    throw ConfigError("missing --x metric");
  CorrelationMethod method;
  if (args.method == "pearson")
    method = CorrelationMethod::Pearson;
  else if (args.method == "spearman")
    method = CorrelationMethod::Spearman;
  else
    throw ConfigError("unknown method '" + args.method + "' (expected pearson or spearman)");

  std::vector<ConsistencyReport> rows;
  for (const auto& path : args.report_files)
    for (auto& r : read_reports_jsonl(path)) rows.push_back(std::move(r));

  // Unknown names are schema errors; names that merely have no defined
  // value in these rows surface as "too few rows" below.
  bool x_seen = known_metric_name(args.x_metric);
  bool y_seen = known_metric_name(args.y_metric);
  std::vector<double> xs, ys;
  std::ostringstream scatter;
  scatter << args.x_metric << ',' << args.y_metric << '\n';
  for (const auto& r : rows) {
    auto x = report_metric(r, args.x_metric);
    auto y = report_metric(r, args.y_metric);
    x_seen = x_seen || x.has_value();
    y_seen = y_seen || y.has_value();
    if (!x || !y) continue;
    xs.push_back(*x);
    ys.push_back(*y);
    scatter << *x << ',' << *y << '\n';
  }
  if (!x_seen) throw Error("unknown metric '" + args.x_metric + "'");
  if (!y_seen) throw Error("unknown metric '" + args.y_metric + "'");
  if (xs.size() < 3)
    throw Error("need at least 3 report rows defining both metrics, found " +
                std::to_string(xs.size()));

  double coefficient = correlate(xs, ys, method);
  std::cout << args.method << "(" << args.x_metric << ", " << args.y_metric << ") over "
            << xs.size() << " rows = " << fmt(coefficient) << "\n";
  if (!args.scatter_out.empty()) {
    atomic_write_file(args.scatter_out, scatter.str());
    std::cout << "wrote " << args.scatter_out << "\n";
  }
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> report_files;
  std::string csv_out;
  std::string aggregate_out;
  std::string graphs_dir;
  bool weighted = false;
};

int cmd_report(const ReportArgs& args) {
  std::vector<ConsistencyReport> rows;
  for (const auto& path : args.report_files)
    for (auto& r : read_reports_jsonl(path)) rows.push_back(std::move(r));
  if (rows.empty()) throw Error("no report rows found");

  if (!args.csv_out.empty()) {
    atomic_write_file(args.csv_out, reports_to_csv(rows));
    std::cout << "wrote " << args.csv_out << "\n";
  }
  auto aggregate = aggregate_reports(rows, args.weighted);
  if (!args.aggregate_out.empty()) {
    atomic_write_file(args.aggregate_out, aggregate_to_json(aggregate).dump(2) + "\n");
    std::cout << "wrote " << args.aggregate_out << "\n";
  }
  if (!args.graphs_dir.empty()) {
    ensure_dir(args.graphs_dir);
    for (const auto& r : rows)
      atomic_write_file((fs::path(args.graphs_dir) / (r.instance_id + ".json")).string(),
                        graph_to_json(r.graph).dump() + "\n");
    std::cout << "wrote " << rows.size() << " graph file(s) to " << args.graphs_dir << "\n";
  }
  std::cout << rows.size() << " instance(s)\n";
  for (const auto& [name, m] : aggregate.metrics)
    std::cout << "  " << name << "  mean " << fmt(m.mean) << "  (" << m.defined << " defined)\n";
  return kExitOk;
}

// ---------------------------------------------------------------------
// Flag wiring
// ---------------------------------------------------------------------

void add_simulated_flags(CLI::App* cmd, SimulatedFlags& sim) {
  cmd->add_option("--flip", sim.flip, "simulated: probability of flipping the correct winner")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--bias", sim.bias, "simulated: probability of answering with the first-presented item")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--neg-fail", sim.neg_fail, "simulated: probability of ignoring a negated prompt")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--confidence", sim.confidence, "simulated: probability mass on the honest winner");
  cmd->add_option("--bias-confidence", sim.bias_confidence,
                  "simulated: probability mass on the first item when bias fires");
}

void add_remote_flags(CLI::App* cmd, RemoteFlags& remote) {
  cmd->add_option("--endpoint", remote.config.endpoint, "remote: chat-completion endpoint URL");
  cmd->add_option("--model", remote.config.model, "remote: model name");
  cmd->add_option("--temperature", remote.config.temperature, "remote: temperature for direct judgments");
  cmd->add_option("--sampling-temperature", remote.config.sampling_temperature,
                  "remote: temperature for self-agreement sampling");
  cmd->add_option("--max-tokens", remote.config.max_tokens, "remote: completion token limit");
  cmd->add_option("--retries", remote.config.retry_count, "remote: retries after a failed request");
  cmd->add_option("--timeout", remote.config.timeout_seconds, "remote: per-request timeout in seconds");
  cmd->add_option("--credential-env", remote.config.credential_env,
                  "remote: environment variable holding the API key");
  cmd->add_option("--concurrency", remote.config.max_concurrency, "remote: max in-flight requests");
  cmd->add_option("--template", remote.template_path, "remote: direct prompt template file");
  cmd->add_option("--cot-template", remote.cot_template_path, "remote: chain-of-thought template file");
  cmd->add_flag("--cot", remote.chain_of_thought, "remote: use chain-of-thought prompting");
  cmd->add_option("--audit", remote.audit_path, "remote: JSONL audit log for raw transcripts");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"logical-consistency toolkit for pairwise comparators"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read defaults from a TOML/INI config file");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "measure consistency metrics over a dataset");
  evaluate->add_option("-i,--input", ev.input, "dataset JSONL, one instance per line")->required();
  evaluate->add_option("-o,--out-dir", ev.out_dir, "output directory");
  evaluate->add_option("--backend", ev.backend, "comparator backend: simulated, replay or remote");
  evaluate->add_option("--k", ev.k_values, "subset sizes for s_tran")->delimiter(',');
  evaluate->add_option("--m-cap", ev.m_cap, "max sampled subsets per K")->check(CLI::PositiveNumber);
  evaluate->add_option("--seed", ev.seed, "sampling seed");
  evaluate->add_flag("--no-negation", ev.no_negation, "skip the negated-relation matrix and s_neg");
  evaluate->add_flag("--both-orders", ev.both_orders,
                     "build the relation graph from order-agreed pairs instead of canonical queries");
  evaluate->add_flag("--self-agreement{10}", ev.self_agreement,
                     "sample each pair for self-agreement; =N overrides the 10-sample protocol");
  evaluate->add_option("--jobs", ev.jobs, "parallel comparator calls")->check(CLI::PositiveNumber);
  evaluate->add_flag("--graphs", ev.graphs, "also write per-instance relation graph JSON");
  evaluate->add_flag("--weighted", ev.weighted, "weight the aggregate by per-metric pair counts");
  add_simulated_flags(evaluate, ev.sim);
  add_remote_flags(evaluate, ev.remote);

  AugmentArgs au;
  auto* augment = app.add_subcommand("augment", "refine annotations via win-loss rank aggregation");
  augment->add_option("-i,--input", au.input, "dataset JSONL")->required();
  augment->add_option("-o,--output", au.output, "augmented dataset JSONL")->required();
  augment->add_option("--flip-fraction", au.flip_fraction,
                      "perturb this fraction of labels before refining")
      ->check(CLI::Range(0.0, 1.0));
  augment->add_option("--seed", au.seed, "seed for perturbation and export order balancing");
  bool partial_flag = false;
  augment->add_flag("--partial", partial_flag, "keep rate ties as tie tiers (the default)");
  augment->add_flag("--total", au.total_order, "break rate ties by input order instead");
  augment->callback([&au, &partial_flag] {
    if (partial_flag && au.total_order) throw CLI::ValidationError("--partial and --total conflict");
  });
  augment->add_flag("--with-negated", au.with_negated, "double the output with negated counterparts");
  augment->add_flag("--no-verify", au.no_verify, "skip re-measuring s_tran/s_comm of the output");
  augment->add_option("--export-pairs", au.export_pairs, "also write {prompt, response} JSONL here");
  augment->add_option("--template", au.template_path, "prompt template file for --export-pairs");

  RankArgs rk;
  auto* rank = app.add_subcommand("rank", "aggregate rankings with comparator-driven merge sort");
  rank->add_option("-i,--input", rk.input, "dataset JSONL")->required();
  rank->add_option("-o,--out-dir", rk.out_dir, "output directory");
  rank->add_option("--backend", rk.backend, "comparator backend: simulated, replay or remote");
  rank->add_flag("--calibrated", rk.calibrated, "average probabilities over both presentation orders");
  rank->add_option("--seed", rk.seed, "base seed for shuffles and simulated noise");
  rank->add_option("--runs", rk.runs, "sort runs per instance")->check(CLI::PositiveNumber);
  rank->add_flag("--no-shuffle", rk.no_shuffle, "start from dataset item order instead of a shuffle");
  rank->add_option("--grid", rk.grid_path, "JSON noise grid; sweeps the simulated backend");
  rank->add_option("--repetitions", rk.repetitions, "repetitions per grid point and instance")
      ->check(CLI::PositiveNumber);
  add_simulated_flags(rank, rk.sim);
  add_remote_flags(rank, rk.remote);

  SimulateOptions sim_opts;
  std::string sim_output;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset with known truth");
  simulate->add_option("-o,--output", sim_output, "dataset JSONL to write")->required();
  simulate->add_option("--instances", sim_opts.instances, "number of instances")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--items", sim_opts.items, "items per instance")->check(CLI::PositiveNumber);
  simulate->add_option("--density", sim_opts.density, "fraction of pairs annotated")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--noise", sim_opts.noise, "fraction of annotations flipped")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--seed", sim_opts.seed, "generation seed");

  CorrelateArgs co;
  auto* correlate_cmd = app.add_subcommand("correlate", "correlate two metrics across report rows");
  correlate_cmd->add_option("--reports", co.report_files, "report JSONL file(s)")->required();
  correlate_cmd->add_option("--x", co.x_metric, "x metric name (e.g. s_comm, s_tran_5, p_flip)")
      ->required();
  correlate_cmd->add_option("--y", co.y_metric, "y metric name")->required();
  correlate_cmd->add_option("--method", co.method, "pearson or spearman");
  correlate_cmd->add_option("--out", co.scatter_out, "scatter CSV for external plotting");

  ReportArgs rp;
  auto* report = app.add_subcommand("report", "re-emit CSV/aggregate/graphs from saved reports");
  report->add_option("--reports", rp.report_files, "report JSONL file(s)")->required();
  report->add_option("--csv", rp.csv_out, "write a per-instance CSV here");
  report->add_option("--aggregate", rp.aggregate_out, "write the aggregate JSON here");
  report->add_option("--graphs", rp.graphs_dir, "write per-instance relation graphs here");
  report->add_flag("--weighted", rp.weighted, "weight the aggregate by per-metric pair counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*evaluate) return cmd_evaluate(ev);
    if (*augment) return cmd_augment(au);
    if (*rank) return cmd_rank(rk);
    if (*simulate) return cmd_simulate(sim_opts, sim_output);
    if (*correlate_cmd) return cmd_correlate(co);
    if (*report) return cmd_report(rp);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TransportError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const UnsupportedCapabilityError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}
