#pragma once
// Drives a full consistency evaluation of one instance: queries the
// preference matrices, derives the relation graph, computes every metric
// the inputs allow, and assembles a ConsistencyReport. Dataset-level
// aggregation is the unweighted mean of instance scores (a pair-count
// weighted variant is available).

#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "concord/comparator.hpp"
#include "concord/core.hpp"
#include "concord/graph.hpp"
#include "concord/metrics.hpp"
#include "concord/rng.hpp"

namespace concord {

enum class GraphMode : uint8_t {
  Canonical,   // one query per unordered pair, first = earlier list position
  BothOrders,  // edge only when both presentation orders agree on the winner
};

struct EvaluateOptions {
  std::vector<int> k_values{3, 4, 5};
  int m_cap = 1000;
  uint64_t seed = 42;
  bool include_negation = true;
  int self_agreement_samples = 0;  // 0 disables self-agreement sampling
  GraphMode graph_mode = GraphMode::Canonical;
  int jobs = 1;
};

struct ReportCounts {
  int pairs_queried = 0;  // comparator calls for the matrices
  int abstained = 0;
  int missing = 0;
  int comm_counted = 0;
  int comm_excluded = 0;
  int neg_counted = 0;
  int neg_excluded = 0;
  int agreement_counted = 0;
  int agreement_excluded = 0;
  int self_pairs = 0;          // pairs with a defined self-agreement
  int self_pairs_skipped = 0;  // pairs with < 2 usable samples
  int self_samples = 0;        // extra comparator calls spent on sampling
};

struct SamplingInfo {
  int m_cap = 1000;
  uint64_t seed = 0;
  std::map<int, int> m_used;  // K -> subsets actually checked
};

// Everything measured for one instance, plus the graph it was measured
// on. Scores a metric could not define (empty denominator, missing
// capability) stay unset rather than defaulting to 0.
struct ConsistencyReport {
  std::string instance_id;
  int n_items = 0;
  std::map<int, double> s_tran;
  std::optional<double> s_comm;
  std::optional<double> s_neg;
  std::optional<double> human_agreement;
  std::optional<double> self_agreement;
  ReportCounts counts;
  SamplingInfo sampling;
  std::map<std::string, double> metadata;  // extra numeric columns (e.g. backend noise knobs)
  RelationGraph graph;
};

namespace detail {

inline RelationGraph graph_from_matrix_canonical(const PreferenceMatrix& m) {
  RelationGraph g;
  for (const auto& id : m.item_ids()) g.add_node(id);
  for (int i = 0; i < m.size(); ++i) {
    for (int j = i + 1; j < m.size(); ++j) {
      switch (m.at(i, j)) {
        case MatrixEntry::FirstWins: g.add_edge(m.item_ids()[static_cast<std::size_t>(i)],
                                                m.item_ids()[static_cast<std::size_t>(j)]); break;
        case MatrixEntry::SecondWins: g.add_edge(m.item_ids()[static_cast<std::size_t>(j)],
                                                 m.item_ids()[static_cast<std::size_t>(i)]); break;
        default: break;
      }
    }
  }
  return g;
}

inline RelationGraph graph_from_matrix_agreement(const PreferenceMatrix& m) {
  RelationGraph g;
  for (const auto& id : m.item_ids()) g.add_node(id);
  for (int i = 0; i < m.size(); ++i) {
    for (int j = i + 1; j < m.size(); ++j) {
      auto w1 = m.winner_at(i, j);
      auto w2 = m.winner_at(j, i);
      if (w1 && w2 && *w1 == *w2) {
        const std::string& winner = *w1;
        const std::string& loser = winner == m.item_ids()[static_cast<std::size_t>(i)]
                                       ? m.item_ids()[static_cast<std::size_t>(j)]
                                       : m.item_ids()[static_cast<std::size_t>(i)];
        g.add_edge(winner, loser);
      }
    }
  }
  return g;
}

// Canonical-order judgments reconstructed from the matrix cells, for
// scoring against human annotations.
inline std::vector<Judgment> canonical_judgments(const PreferenceMatrix& m) {
  std::vector<Judgment> out;
  for (int i = 0; i < m.size(); ++i) {
    for (int j = i + 1; j < m.size(); ++j) {
      Judgment jd;
      jd.left = m.item_ids()[static_cast<std::size_t>(i)];
      jd.right = m.item_ids()[static_cast<std::size_t>(j)];
      switch (m.at(i, j)) {
        case MatrixEntry::FirstWins: jd.winner = Winner::Left; break;
        case MatrixEntry::SecondWins: jd.winner = Winner::Right; break;
        default: jd.winner = Winner::Abstain; break;
      }
      out.push_back(std::move(jd));
    }
  }
  return out;
}

}  // namespace detail

inline ConsistencyReport evaluate_instance(const Instance& inst, Comparator& comparator,
                                           const EvaluateOptions& opts) {
  validate(inst);

  ConsistencyReport report;
  report.instance_id = inst.instance_id;
  report.n_items = static_cast<int>(inst.items.size());
  report.sampling.m_cap = opts.m_cap;
  report.sampling.seed = opts.seed;

  const bool with_negated = opts.include_negation && comparator.supports_negated();
  MatrixPair matrices = evaluate_full_matrix(inst, comparator, with_negated, opts.jobs);
  report.counts.pairs_queried = matrices.calls;
  report.counts.abstained = matrices.abstained;
  report.counts.missing = matrices.missing;

  report.graph = opts.graph_mode == GraphMode::Canonical
                     ? detail::graph_from_matrix_canonical(matrices.original)
                     : detail::graph_from_matrix_agreement(matrices.original);

  const int n = report.n_items;
  for (int k : opts.k_values) {
    if (k < 3 || k > n) continue;
    SubsetSampler sampler;
    sampler.n = n;
    sampler.k = k;
    sampler.m_cap = opts.m_cap;
    sampler.seed = hash_combine(opts.seed, static_cast<uint64_t>(k));
    TransitivityResult tr = transitivity_score(report.graph, sampler);
    report.s_tran[k] = tr.value;
    report.sampling.m_used[k] = tr.samples;
  }

  try {
    MetricResult r = commutativity_score(matrices.original);
    report.s_comm = r.value;
    report.counts.comm_counted = r.counted;
    report.counts.comm_excluded = r.excluded;
  } catch (const UndefinedScoreError&) {
    report.counts.comm_excluded = n * (n - 1) / 2;
  }

  if (matrices.negated) {
    try {
      MetricResult r = negation_score(matrices.original, *matrices.negated);
      report.s_neg = r.value;
      report.counts.neg_counted = r.counted;
      report.counts.neg_excluded = r.excluded;
    } catch (const UndefinedScoreError&) {
      report.counts.neg_excluded = n * (n - 1);
    }
  }

  bool has_original_annotations = false;
  for (const auto& a : inst.annotations)
    if (!a.negated) has_original_annotations = true;
  if (has_original_annotations) {
    try {
      MetricResult r = human_agreement(detail::canonical_judgments(matrices.original), inst.annotations);
      report.human_agreement = r.value;
      report.counts.agreement_counted = r.counted;
      report.counts.agreement_excluded = r.excluded;
    } catch (const UndefinedScoreError&) {
    }
  }

  if (opts.self_agreement_samples >= 2) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        std::vector<Judgment> samples;
        samples.reserve(static_cast<std::size_t>(opts.self_agreement_samples));
        for (int s = 0; s < opts.self_agreement_samples; ++s) {
          try {
            samples.push_back(comparator.compare_sampled(inst.context, inst.items[static_cast<std::size_t>(i)],
                                                         inst.items[static_cast<std::size_t>(j)], inst.relation,
                                                         false, s + 1));
          } catch (const TransportError&) {
          }
          ++report.counts.self_samples;
        }
        try {
          sum += self_agreement(samples).value;
          ++report.counts.self_pairs;
        } catch (const UndefinedScoreError&) {
          ++report.counts.self_pairs_skipped;
        }
      }
    }
    if (report.counts.self_pairs > 0)
      report.self_agreement = sum / report.counts.self_pairs;
  }

  return report;
}

// ---------------------------------------------------------------------
// Dataset-level aggregation
// ---------------------------------------------------------------------

struct MetricAggregate {
  double mean = 0.0;
  int defined = 0;  // instances contributing to the mean
};

struct AggregateReport {
  int instances = 0;
  bool weighted = false;
  std::map<std::string, MetricAggregate> metrics;
};

// Mean of each instance-level score across the dataset. Unweighted by
// default; the weighted variant weights each instance by the metric's
// denominator (counted pairs, or subsets checked for s_tran).
inline AggregateReport aggregate_reports(const std::vector<ConsistencyReport>& reports,
                                         bool weighted = false) {
  AggregateReport agg;
  agg.instances = static_cast<int>(reports.size());
  agg.weighted = weighted;

  std::map<std::string, std::pair<double, double>> acc;  // name -> (weighted sum, weight)
  std::map<std::string, int> defined;
  auto add = [&](const std::string& name, double value, double weight) {
    acc[name].first += value * weight;
    acc[name].second += weight;
    ++defined[name];
  };

  for (const auto& r : reports) {
    for (const auto& [k, v] : r.s_tran) {
      double w = weighted ? static_cast<double>(r.sampling.m_used.at(k)) : 1.0;
      add("s_tran_" + std::to_string(k), v, w);
    }
    if (r.s_comm) add("s_comm", *r.s_comm, weighted ? r.counts.comm_counted : 1.0);
    if (r.s_neg) add("s_neg", *r.s_neg, weighted ? r.counts.neg_counted : 1.0);
    if (r.human_agreement)
      add("human_agreement", *r.human_agreement, weighted ? r.counts.agreement_counted : 1.0);
    if (r.self_agreement)
      add("self_agreement", *r.self_agreement, weighted ? r.counts.self_pairs : 1.0);
  }

  for (const auto& [name, sums] : acc) {
    MetricAggregate m;
    m.mean = sums.second > 0 ? sums.first / sums.second : 0.0;
    m.defined = defined[name];
    agg.metrics[name] = m;
  }
  return agg;
}

// Numeric value of a named report column, used by correlation tooling.
// Understands the score names ("s_comm", "s_tran_3", ...), count names
// and metadata keys.
inline std::optional<double> report_metric(const ConsistencyReport& r, const std::string& name) {
  if (name == "s_comm") return r.s_comm;
  if (name == "s_neg") return r.s_neg;
  if (name == "human_agreement") return r.human_agreement;
  if (name == "self_agreement") return r.self_agreement;
  if (name == "n_items") return static_cast<double>(r.n_items);
  if (name.rfind("s_tran_", 0) == 0) {
    int k = std::atoi(name.c_str() + 7);
    auto it = r.s_tran.find(k);
    if (it == r.s_tran.end()) return std::nullopt;
    return it->second;
  }
  if (name == "pairs_queried") return static_cast<double>(r.counts.pairs_queried);
  if (name == "abstained") return static_cast<double>(r.counts.abstained);
  if (name == "missing") return static_cast<double>(r.counts.missing);
  auto it = r.metadata.find(name);
  if (it != r.metadata.end()) return it->second;
  return std::nullopt;
}

// True when `name` is a column this report schema could ever contain.
inline bool known_metric_name(const std::string& name) {
  static const std::set<std::string> fixed{"s_comm",         "s_neg",    "human_agreement",
                                           "self_agreement", "n_items",  "pairs_queried",
                                           "abstained",      "missing"};
  if (fixed.count(name)) return true;
  return name.rfind("s_tran_", 0) == 0;
}

}  // namespace concord
