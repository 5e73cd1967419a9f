#pragma once
// File formats and serialization. Datasets are JSONL, one instance per
// line; relation graphs serialize as {nodes, edges}; consistency reports
// have a JSON form and a flat CSV row per instance. Output files are
// written atomically (temp file + rename).

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "concord/augment.hpp"
#include "concord/core.hpp"
#include "concord/evaluation.hpp"
#include "concord/pairs.hpp"
#include "concord/rng.hpp"

namespace concord {

using json = nlohmann::json;

// ---------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void atomic_write_file(const std::string& path, const std::string& contents) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + tmp);
    out << contents;
    if (!out.good()) throw Error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("cannot move " + tmp + " into place");
  }
}

// ---------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------

inline json instance_to_json(const Instance& inst) {
  json j;
  j["instance_id"] = inst.instance_id;
  j["context"] = inst.context;
  j["items"] = json::array();
  for (const auto& it : inst.items) j["items"].push_back({{"id", it.id}, {"text", it.text}});
  j["annotations"] = json::array();
  for (const auto& a : inst.annotations) {
    json aj{{"first", a.first}, {"second", a.second}, {"winner", a.winner}};
    if (a.negated) aj["negated"] = true;
    j["annotations"].push_back(std::move(aj));
  }
  if (!inst.gold_ranking.empty()) j["gold_ranking"] = inst.gold_ranking;
  j["relation"] = {{"name", inst.relation.name},
                   {"statement", inst.relation.statement},
                   {"negated_statement", inst.relation.negated_statement}};
  return j;
}

inline Instance instance_from_json(const json& j) {
  Instance inst;
  inst.instance_id = j.at("instance_id").get<std::string>();
  inst.context = j.value("context", std::string{});
  for (const auto& it : j.at("items"))
    inst.items.push_back(Item{it.at("id").get<std::string>(), it.value("text", std::string{})});
  if (j.contains("annotations")) {
    for (const auto& a : j.at("annotations")) {
      PairwiseAnnotation ann;
      ann.first = a.at("first").get<std::string>();
      ann.second = a.at("second").get<std::string>();
      ann.winner = a.at("winner").get<std::string>();
      ann.negated = a.value("negated", false);
      inst.annotations.push_back(std::move(ann));
    }
  }
  if (j.contains("gold_ranking")) inst.gold_ranking = j.at("gold_ranking").get<std::vector<std::string>>();
  const auto& r = j.at("relation");
  inst.relation.name = r.value("name", std::string{});
  inst.relation.statement = r.at("statement").get<std::string>();
  inst.relation.negated_statement = r.at("negated_statement").get<std::string>();
  validate(inst);
  return inst;
}

struct JsonlReadResult {
  std::vector<Instance> instances;
  std::vector<std::pair<int, std::string>> errors;  // (1-based line, message)
};

// Reads a dataset, skipping malformed lines but recording their line
// numbers so the caller can log them and decide whether to continue.
inline JsonlReadResult read_instances_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset: " + path);
  JsonlReadResult res;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      res.instances.push_back(instance_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      res.errors.emplace_back(line_no, e.what());
    }
  }
  return res;
}

inline void write_instances_jsonl(const std::string& path, const std::vector<Instance>& instances) {
  std::ostringstream out;
  for (const auto& inst : instances) out << instance_to_json(inst).dump() << '\n';
  atomic_write_file(path, out.str());
}

// ---------------------------------------------------------------------
// Relation graphs
// ---------------------------------------------------------------------

inline json graph_to_json(const RelationGraph& g) {
  json j;
  j["nodes"] = g.nodes();
  j["edges"] = json::array();
  for (const auto& [u, v] : g.edges()) j["edges"].push_back(json::array({u, v}));
  return j;
}

inline RelationGraph graph_from_json(const json& j) {
  RelationGraph g;
  for (const auto& n : j.at("nodes")) g.add_node(n.get<std::string>());
  for (const auto& e : j.at("edges")) g.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>());
  return g;
}

// ---------------------------------------------------------------------
// Consistency reports
// ---------------------------------------------------------------------

inline json report_to_json(const ConsistencyReport& r) {
  json j;
  j["instance_id"] = r.instance_id;
  j["n_items"] = r.n_items;
  json tran = json::object();
  for (const auto& [k, v] : r.s_tran) tran[std::to_string(k)] = v;
  j["s_tran"] = std::move(tran);
  j["s_comm"] = r.s_comm ? json(*r.s_comm) : json(nullptr);
  j["s_neg"] = r.s_neg ? json(*r.s_neg) : json(nullptr);
  j["human_agreement"] = r.human_agreement ? json(*r.human_agreement) : json(nullptr);
  j["self_agreement"] = r.self_agreement ? json(*r.self_agreement) : json(nullptr);
  j["counts"] = {{"pairs_queried", r.counts.pairs_queried},
                 {"abstained", r.counts.abstained},
                 {"missing", r.counts.missing},
                 {"comm_counted", r.counts.comm_counted},
                 {"comm_excluded", r.counts.comm_excluded},
                 {"neg_counted", r.counts.neg_counted},
                 {"neg_excluded", r.counts.neg_excluded},
                 {"agreement_counted", r.counts.agreement_counted},
                 {"agreement_excluded", r.counts.agreement_excluded},
                 {"self_pairs", r.counts.self_pairs},
                 {"self_pairs_skipped", r.counts.self_pairs_skipped},
                 {"self_samples", r.counts.self_samples}};
  json m_used = json::object();
  for (const auto& [k, m] : r.sampling.m_used) m_used[std::to_string(k)] = m;
  j["sampling"] = {{"m_cap", r.sampling.m_cap}, {"seed", r.sampling.seed}, {"m_used", std::move(m_used)}};
  if (!r.metadata.empty()) j["metadata"] = r.metadata;
  j["graph"] = graph_to_json(r.graph);
  return j;
}

inline ConsistencyReport report_from_json(const json& j) {
  ConsistencyReport r;
  r.instance_id = j.at("instance_id").get<std::string>();
  r.n_items = j.at("n_items").get<int>();
  for (const auto& [k, v] : j.at("s_tran").items()) r.s_tran[std::stoi(k)] = v.get<double>();
  auto opt = [&j](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  r.s_comm = opt("s_comm");
  r.s_neg = opt("s_neg");
  r.human_agreement = opt("human_agreement");
  r.self_agreement = opt("self_agreement");
  if (j.contains("counts")) {
    const auto& c = j.at("counts");
    r.counts.pairs_queried = c.value("pairs_queried", 0);
    r.counts.abstained = c.value("abstained", 0);
    r.counts.missing = c.value("missing", 0);
    r.counts.comm_counted = c.value("comm_counted", 0);
    r.counts.comm_excluded = c.value("comm_excluded", 0);
    r.counts.neg_counted = c.value("neg_counted", 0);
    r.counts.neg_excluded = c.value("neg_excluded", 0);
    r.counts.agreement_counted = c.value("agreement_counted", 0);
    r.counts.agreement_excluded = c.value("agreement_excluded", 0);
    r.counts.self_pairs = c.value("self_pairs", 0);
    r.counts.self_pairs_skipped = c.value("self_pairs_skipped", 0);
    r.counts.self_samples = c.value("self_samples", 0);
  }
  if (j.contains("sampling")) {
    const auto& s = j.at("sampling");
    r.sampling.m_cap = s.value("m_cap", 1000);
    r.sampling.seed = s.value("seed", uint64_t{0});
    if (s.contains("m_used"))
      for (const auto& [k, v] : s.at("m_used").items()) r.sampling.m_used[std::stoi(k)] = v.get<int>();
  }
  if (j.contains("metadata"))
    for (const auto& [k, v] : j.at("metadata").items()) r.metadata[k] = v.get<double>();
  if (j.contains("graph")) r.graph = graph_from_json(j.at("graph"));
  return r;
}

inline void write_reports_jsonl(const std::string& path, const std::vector<ConsistencyReport>& reports) {
  std::ostringstream out;
  for (const auto& r : reports) out << report_to_json(r).dump() << '\n';
  atomic_write_file(path, out.str());
}

inline std::vector<ConsistencyReport> read_reports_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open reports: " + path);
  std::vector<ConsistencyReport> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(report_from_json(json::parse(line)));
  }
  return out;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace detail

// One CSV row per instance. The s_tran columns are the union of Ks seen
// across the reports; undefined scores leave their cell empty.
inline std::string reports_to_csv(const std::vector<ConsistencyReport>& reports) {
  std::set<int> ks;
  std::set<std::string> meta_keys;
  for (const auto& r : reports) {
    for (const auto& [k, v] : r.s_tran) ks.insert(k);
    for (const auto& [key, v] : r.metadata) meta_keys.insert(key);
  }

  std::ostringstream out;
  out << "instance_id,n_items";
  for (int k : ks) out << ",s_tran_" << k;
  out << ",s_comm,s_neg,human_agreement,self_agreement,pairs_queried,abstained,missing";
  for (const auto& key : meta_keys) out << ',' << key;
  out << '\n';

  auto cell = [](const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string{}; };
  for (const auto& r : reports) {
    out << r.instance_id << ',' << r.n_items;
    for (int k : ks) {
      auto it = r.s_tran.find(k);
      out << ',' << (it != r.s_tran.end() ? detail::format_double(it->second) : std::string{});
    }
    out << ',' << cell(r.s_comm) << ',' << cell(r.s_neg) << ',' << cell(r.human_agreement) << ','
        << cell(r.self_agreement) << ',' << r.counts.pairs_queried << ',' << r.counts.abstained << ','
        << r.counts.missing;
    for (const auto& key : meta_keys) {
      auto it = r.metadata.find(key);
      out << ',' << (it != r.metadata.end() ? detail::format_double(it->second) : std::string{});
    }
    out << '\n';
  }
  return out.str();
}

inline json aggregate_to_json(const AggregateReport& agg) {
  json j;
  j["instances"] = agg.instances;
  j["weighted"] = agg.weighted;
  json metrics = json::object();
  for (const auto& [name, m] : agg.metrics)
    metrics[name] = {{"mean", m.mean}, {"defined", m.defined}};
  j["metrics"] = std::move(metrics);
  return j;
}

// ---------------------------------------------------------------------
// Sort-run reports and sweeps
// ---------------------------------------------------------------------

inline json sort_report_to_json(const SortRunReport& r) {
  json j;
  j["instance_id"] = r.instance_id;
  j["predicted_ranking"] = r.predicted_ranking;
  j["comparator_calls"] = r.comparator_calls;
  j["fallbacks"] = r.fallbacks;
  j["calibrated"] = r.calibrated;
  j["spearman_vs_gold"] = r.spearman_vs_gold ? json(*r.spearman_vs_gold) : json(nullptr);
  j["seed"] = r.seed;
  return j;
}

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "p_flip,positional_bias,p_neg_fail,runs,spearman_raw,spearman_calibrated,calibration_gain,"
         "calls_raw,calls_calibrated\n";
  for (const auto& r : rows) {
    out << detail::format_double(r.point.p_flip) << ',' << detail::format_double(r.point.positional_bias)
        << ',' << detail::format_double(r.point.p_neg_fail) << ',' << r.runs << ','
        << detail::format_double(r.mean_spearman_raw) << ','
        << detail::format_double(r.mean_spearman_calibrated) << ','
        << detail::format_double(r.mean_spearman_calibrated - r.mean_spearman_raw) << ','
        << detail::format_double(r.mean_calls_raw) << ',' << detail::format_double(r.mean_calls_calibrated)
        << '\n';
  }
  return out.str();
}

inline std::vector<SweepPoint> sweep_grid_from_json(const json& j) {
  std::vector<SweepPoint> grid;
  for (const auto& p : j) {
    SweepPoint point;
    point.p_flip = p.value("p_flip", 0.0);
    point.positional_bias = p.value("positional_bias", 0.0);
    point.p_neg_fail = p.value("p_neg_fail", 0.0);
    grid.push_back(point);
  }
  if (grid.empty()) throw InvalidInputError("sweep grid is empty");
  return grid;
}

// ---------------------------------------------------------------------
// Prompt templates and training-pair export
// ---------------------------------------------------------------------

inline PromptTemplate template_from_file(const std::string& path, PromptMode mode,
                                         std::pair<std::string, std::string> labels = {"A", "B"}) {
  PromptTemplate t;
  t.name = path;
  t.body = read_file(path);
  t.mode = mode;
  t.answer_labels = std::move(labels);
  validate(t);
  return t;
}

// Writes one {prompt, response} JSONL record per annotation. Each record
// draws its presentation order from the seed, so label positions are
// balanced in expectation and reruns are byte-identical. Refuses datasets
// whose non-negated annotations contradict each other.
inline std::size_t export_training_pairs(const std::vector<Instance>& dataset, const PromptTemplate& tmpl,
                                         const std::string& path, uint64_t seed) {
  validate(tmpl);
  for (const auto& inst : dataset) validate_consistent_annotations(inst);

  Rng rng(seed);
  std::ostringstream out;
  std::size_t count = 0;
  for (const auto& inst : dataset) {
    for (const auto& a : inst.annotations) {
      bool winner_first = rng.bernoulli(0.5);
      const std::string& shown_first = winner_first ? a.winner : a.loser();
      const std::string& shown_second = winner_first ? a.loser() : a.winner;
      const std::string& statement = a.negated ? inst.relation.negated_statement : inst.relation.statement;
      json rec;
      rec["prompt"] = tmpl.render(inst.context, inst.item_by_id(shown_first).text,
                                  inst.item_by_id(shown_second).text, statement);
      rec["response"] = winner_first ? tmpl.answer_labels.first : tmpl.answer_labels.second;
      out << rec.dump() << '\n';
      ++count;
    }
  }
  atomic_write_file(path, out.str());
  return count;
}

}  // namespace concord
