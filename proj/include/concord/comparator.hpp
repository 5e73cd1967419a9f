#pragma once
// The comparator-oracle abstraction and its local backends. A comparator
// answers "which of these two items better satisfies the relation": an
// LLM, a lookup table, a replay of existing annotations, or a simulated
// noisy judge whose error modes are controllable.

#include <atomic>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "concord/core.hpp"
#include "concord/graph.hpp"
#include "concord/rng.hpp"

namespace concord {

// ---------------------------------------------------------------------
// Interface
// ---------------------------------------------------------------------

class Comparator {
 public:
  virtual ~Comparator() = default;

  virtual bool supports_probability() const { return false; }
  virtual bool supports_negated() const { return true; }

  // Judge the (possibly negated) relation between two items; `first` is
  // presented first. Implementations must be safe for concurrent calls.
  virtual Judgment compare(const std::string& context, const Item& first, const Item& second,
                           const RelationSpec& relation, bool negated) = 0;

  // Stochastic re-judgment of the same pair, used for self-agreement
  // sampling. sample_index selects the draw; deterministic backends may
  // ignore it and return their fixed answer.
  virtual Judgment compare_sampled(const std::string& context, const Item& first, const Item& second,
                                   const RelationSpec& relation, bool negated, int sample_index) {
    (void)sample_index;
    return compare(context, first, second, relation, negated);
  }
};

// ---------------------------------------------------------------------
// Prompt templates and output parsing
// ---------------------------------------------------------------------

enum class PromptMode : uint8_t { Direct, ChainOfThought };

// A pairwise-comparison prompt with four placeholders, each required
// exactly once: {context}, {item_a}, {item_b}, {relation_statement}.
// The shipped defaults are editable starting points, not canon.
struct PromptTemplate {
  std::string name = "direct-default";
  std::string body;
  std::pair<std::string, std::string> answer_labels{"A", "B"};
  PromptMode mode = PromptMode::Direct;

  std::string render(const std::string& context, const std::string& item_a,
                     const std::string& item_b, const std::string& relation_statement) const {
    std::string out = body;
    auto fill = [&out](const std::string& key, const std::string& value) {
      auto pos = out.find(key);
      if (pos == std::string::npos)
        throw ValidationError("prompt template is missing placeholder " + key);
      out.replace(pos, key.size(), value);
    };
    fill("{context}", context);
    fill("{item_a}", item_a);
    fill("{item_b}", item_b);
    fill("{relation_statement}", relation_statement);
    return out;
  }

  static PromptTemplate direct_default() {
    PromptTemplate t;
    t.name = "direct-default";
    t.mode = PromptMode::Direct;
    t.body =
        "You are comparing two candidates.\n"
        "\n"
        "Context:\n"
        "{context}\n"
        "\n"
        "Candidate A:\n"
        "{item_a}\n"
        "\n"
        "Candidate B:\n"
        "{item_b}\n"
        "\n"
        "Judge the following relation between the candidates: {relation_statement}\n"
        "\n"
        "Reply with a single letter, A or B, naming the candidate for which the relation holds.\n"
        "Answer:";
    return t;
  }

  static PromptTemplate chain_of_thought_default() {
    PromptTemplate t;
    t.name = "cot-default";
    t.mode = PromptMode::ChainOfThought;
    t.body =
        "You are comparing two candidates.\n"
        "\n"
        "Context:\n"
        "{context}\n"
        "\n"
        "Candidate A:\n"
        "{item_a}\n"
        "\n"
        "Candidate B:\n"
        "{item_b}\n"
        "\n"
        "Judge the following relation between the candidates: {relation_statement}\n"
        "\n"
        "Reason step by step about both candidates, then finish with exactly one line of the\n"
        "form \"Answer: A\" or \"Answer: B\".";
    return t;
  }
};

inline void validate(const PromptTemplate& t) {
  auto count = [&t](const std::string& key) {
    std::size_t n = 0;
    for (auto pos = t.body.find(key); pos != std::string::npos; pos = t.body.find(key, pos + key.size())) ++n;
    return n;
  };
  for (const char* key : {"{context}", "{item_a}", "{item_b}", "{relation_statement}"})
    if (count(key) != 1)
      throw ValidationError("prompt template '" + t.name + "' must contain " + key + " exactly once");
  if (t.answer_labels.first.empty() || t.answer_labels.second.empty() ||
      t.answer_labels.first == t.answer_labels.second)
    throw ValidationError("prompt template '" + t.name + "' needs two distinct non-empty answer labels");
}

namespace detail {

// Byte offsets of occurrences of `label` that sit on word boundaries.
inline std::vector<std::size_t> isolated_occurrences(const std::string& text, const std::string& label) {
  std::vector<std::size_t> out;
  if (label.empty()) return out;
  auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  for (auto pos = text.find(label); pos != std::string::npos; pos = text.find(label, pos + 1)) {
    bool left_ok = pos == 0 || !alnum(text[pos - 1]);
    std::size_t end = pos + label.size();
    bool right_ok = end >= text.size() || !alnum(text[end]);
    if (left_ok && right_ok) out.push_back(pos);
  }
  return out;
}

}  // namespace detail

// Extract the chosen label from a model transcript. Direct mode accepts a
// leading label or a transcript mentioning exactly one of the labels;
// chain-of-thought mode takes the last isolated label (the final answer
// after the reasoning). Anything ambiguous is an abstention.
inline Winner parse_choice(const std::string& raw, const std::pair<std::string, std::string>& labels,
                           PromptMode mode) {
  auto occ_a = detail::isolated_occurrences(raw, labels.first);
  auto occ_b = detail::isolated_occurrences(raw, labels.second);
  if (occ_a.empty() && occ_b.empty()) return Winner::Abstain;

  if (mode == PromptMode::ChainOfThought) {
    std::size_t last_a = occ_a.empty() ? 0 : occ_a.back();
    std::size_t last_b = occ_b.empty() ? 0 : occ_b.back();
    if (occ_a.empty()) return Winner::Right;
    if (occ_b.empty()) return Winner::Left;
    return last_a > last_b ? Winner::Left : Winner::Right;
  }

  // Direct: a label at the very start of the (trimmed) reply wins.
  std::size_t lead = raw.find_first_not_of(" \t\r\n");
  if (lead != std::string::npos) {
    bool a_leads = !occ_a.empty() && occ_a.front() == lead;
    bool b_leads = !occ_b.empty() && occ_b.front() == lead;
    if (a_leads && !b_leads) return Winner::Left;
    if (b_leads && !a_leads) return Winner::Right;
  }
  if (!occ_a.empty() && occ_b.empty()) return Winner::Left;
  if (!occ_b.empty() && occ_a.empty()) return Winner::Right;
  return Winner::Abstain;
}

// ---------------------------------------------------------------------
// Table-driven and function-driven comparators (test backends)
// ---------------------------------------------------------------------

class ScriptedComparator : public Comparator {
 public:
  // Script the outcome for one ordered presentation.
  void set(const std::string& left, const std::string& right, bool negated, Winner winner,
           std::optional<double> prob_left_wins = std::nullopt) {
    table_[key(left, right, negated)] = std::make_pair(winner, prob_left_wins);
    if (prob_left_wins) has_probs_ = true;
  }

  // Script the same winner for both presentation orders of {a, b}.
  void set_pair_winner(const std::string& a, const std::string& b, const std::string& winner,
                       bool negated = false) {
    set(a, b, negated, winner == a ? Winner::Left : Winner::Right);
    set(b, a, negated, winner == b ? Winner::Left : Winner::Right);
  }

  bool supports_probability() const override { return has_probs_; }

  Judgment compare(const std::string&, const Item& first, const Item& second,
                   const RelationSpec&, bool negated) override {
    Judgment j;
    j.left = first.id;
    j.right = second.id;
    j.negated = negated;
    auto it = table_.find(key(first.id, second.id, negated));
    if (it != table_.end()) {
      j.winner = it->second.first;
      j.prob_left_wins = it->second.second;
    }
    return j;
  }

 private:
  static std::string key(const std::string& l, const std::string& r, bool negated) {
    return l + "\x1f" + r + (negated ? "\x1f!" : "\x1f.");
  }

  std::map<std::string, std::pair<Winner, std::optional<double>>> table_;
  bool has_probs_ = false;
};

// Wraps an arbitrary function, handy for rule-based oracles in tests.
class FunctionComparator : public Comparator {
 public:
  using Fn = std::function<Judgment(const std::string&, const Item&, const Item&, const RelationSpec&, bool)>;

  explicit FunctionComparator(Fn fn, bool provides_probability = false)
      : fn_(std::move(fn)), provides_probability_(provides_probability) {}

  bool supports_probability() const override { return provides_probability_; }

  Judgment compare(const std::string& context, const Item& first, const Item& second,
                   const RelationSpec& relation, bool negated) override {
    return fn_(context, first, second, relation, negated);
  }

 private:
  Fn fn_;
  bool provides_probability_;
};

// Answers queries from an instance's own annotations: the majority label
// for the queried pair under the queried relation direction, abstaining
// on unannotated pairs and on exact conflicts.
class ReplayComparator : public Comparator {
 public:
  explicit ReplayComparator(const Instance& inst) {
    for (const auto& a : inst.annotations) {
      auto& tally = votes_[pair_key(a.first, a.second, a.negated)];
      ++(a.winner == min_id(a.first, a.second) ? tally.first : tally.second);
    }
  }

  Judgment compare(const std::string&, const Item& first, const Item& second,
                   const RelationSpec&, bool negated) override {
    Judgment j;
    j.left = first.id;
    j.right = second.id;
    j.negated = negated;
    auto it = votes_.find(pair_key(first.id, second.id, negated));
    if (it != votes_.end()) {
      auto [for_min, for_max] = it->second;
      if (for_min != for_max) {
        const std::string& winner = for_min > for_max ? min_id(first.id, second.id) : max_id(first.id, second.id);
        j.winner = winner == first.id ? Winner::Left : Winner::Right;
      }
    }
    return j;
  }

 private:
  static const std::string& min_id(const std::string& a, const std::string& b) { return a < b ? a : b; }
  static const std::string& max_id(const std::string& a, const std::string& b) { return a < b ? b : a; }
  static std::string pair_key(const std::string& a, const std::string& b, bool negated) {
    return min_id(a, b) + "\x1f" + max_id(a, b) + (negated ? "\x1f!" : "\x1f.");
  }

  // unordered pair -> (votes for the lexicographically smaller id, votes for the larger)
  std::map<std::string, std::pair<int, int>> votes_;
};

// ---------------------------------------------------------------------
// Simulated comparator
// ---------------------------------------------------------------------

// A judge with a known ground ranking and three controllable failure
// modes, so every consistency metric has an analytic expectation.
struct SimulatedComparatorConfig {
  std::vector<std::string> ground_ranking;  // truth, most-preferred first
  double p_flip = 0.0;           // probability of inverting the correct winner
  double positional_bias = 0.0;  // probability of overriding with the first-presented item
  double p_neg_fail = 0.0;       // probability of ignoring a negated prompt
  uint64_t seed = 0;

  // Probability mass put on the chosen winner when answering honestly,
  // and on the first item when the positional override fires. The bias
  // mass must stay below the honest mass for order-averaging to be able
  // to tell the two apart.
  double honest_confidence = 0.9;
  double bias_confidence = 0.75;
};

inline void validate(const SimulatedComparatorConfig& c) {
  auto check01 = [](double p, const char* name) {
    if (p < 0.0 || p > 1.0) throw ValidationError(std::string("simulated comparator: ") + name + " must be in [0,1]");
  };
  check01(c.p_flip, "p_flip");
  check01(c.positional_bias, "positional_bias");
  check01(c.p_neg_fail, "p_neg_fail");
  if (c.honest_confidence <= 0.5 || c.honest_confidence > 1.0)
    throw ValidationError("simulated comparator: honest_confidence must be in (0.5, 1]");
  if (c.bias_confidence <= 0.5 || c.bias_confidence > 1.0)
    throw ValidationError("simulated comparator: bias_confidence must be in (0.5, 1]");
  std::set<std::string> seen;
  for (const auto& id : c.ground_ranking)
    if (!seen.insert(id).second)
      throw ValidationError("simulated comparator: ground ranking repeats item '" + id + "'");
  if (c.ground_ranking.size() < 2)
    throw ValidationError("simulated comparator: ground ranking needs at least 2 items");
}

class SimulatedComparator : public Comparator {
 public:
  explicit SimulatedComparator(SimulatedComparatorConfig cfg, std::string instance_key = "")
      : cfg_(std::move(cfg)), instance_key_(std::move(instance_key)) {
    validate(cfg_);
    for (std::size_t i = 0; i < cfg_.ground_ranking.size(); ++i)
      rank_[cfg_.ground_ranking[i]] = static_cast<int>(i);
  }

  bool supports_probability() const override { return true; }

  Judgment compare(const std::string&, const Item& first, const Item& second,
                   const RelationSpec&, bool negated) override {
    return judge(first, second, negated, 0);
  }

  Judgment compare_sampled(const std::string&, const Item& first, const Item& second,
                           const RelationSpec&, bool negated, int sample_index) override {
    return judge(first, second, negated, sample_index);
  }

  const SimulatedComparatorConfig& config() const { return cfg_; }

 private:
  // Noise is keyed by (seed, instance, left, right, negated, draw) so
  // repeating a query reproduces the same answer bit for bit, while a
  // fresh draw index resamples it.
  Judgment judge(const Item& first, const Item& second, bool negated, int draw) const {
    if (first.id == second.id) throw InvalidInputError("simulated comparator: identical items");
    uint64_t key = cfg_.seed;
    key = hash_combine(key, stable_hash(instance_key_));
    key = hash_combine(key, stable_hash(first.id));
    key = hash_combine(key, stable_hash(second.id));
    key = hash_combine(key, negated ? 0x6e65676174656421ull : 0x6f726967696e616cull);
    key = hash_combine(key, static_cast<uint64_t>(draw));
    Rng rng(key);

    bool left_wins = rank_of(first.id) < rank_of(second.id);
    if (rng.bernoulli(cfg_.p_flip)) left_wins = !left_wins;
    if (negated && !rng.bernoulli(cfg_.p_neg_fail)) left_wins = !left_wins;
    double prob_left = left_wins ? cfg_.honest_confidence : 1.0 - cfg_.honest_confidence;
    if (rng.bernoulli(cfg_.positional_bias)) {
      left_wins = true;
      prob_left = cfg_.bias_confidence;
    }

    Judgment j;
    j.left = first.id;
    j.right = second.id;
    j.winner = left_wins ? Winner::Left : Winner::Right;
    j.prob_left_wins = prob_left;
    j.negated = negated;
    return j;
  }

  int rank_of(const std::string& id) const {
    auto it = rank_.find(id);
    if (it == rank_.end())
      throw InvalidInputError("simulated comparator: item '" + id + "' not in ground ranking");
    return it->second;
  }

  SimulatedComparatorConfig cfg_;
  std::string instance_key_;
  std::map<std::string, int> rank_;
};

// ---------------------------------------------------------------------
// Querying machinery
// ---------------------------------------------------------------------

struct PairCounts {
  int queried = 0;
  int abstained = 0;
  int missing = 0;
};

namespace detail {

// Runs fn(0..task_count-1), possibly on several threads. Results must be
// written into pre-sized slots so the fold stays order-independent.
inline void run_indexed(int task_count, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || task_count <= 1) {
    for (int i = 0; i < task_count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < task_count; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::thread> threads;
  int n = std::min(jobs, task_count);
  threads.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) threads.emplace_back(worker);
  for (auto& th : threads) th.join();
}

}  // namespace detail

// Builds the relation graph from one comparator query per unordered pair,
// in canonical order: item i is presented before item j when i precedes j
// in the instance's item list. The judgment favoring the first item
// (probability >= 1/2 when available) orients the edge i -> j, otherwise
// j -> i. Abstentions leave the pair undecided; transport failures are
// counted as missing.
inline RelationGraph build_relation_graph(const Instance& inst, Comparator& comparator,
                                          PairCounts* counts = nullptr, int jobs = 1) {
  if (inst.items.size() < 2)
    throw InvalidInputError("build_relation_graph: instance needs at least 2 items");

  const int n = static_cast<int>(inst.items.size());
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  enum class Outcome : uint8_t { First, Second, Abstain, Missing };
  std::vector<Outcome> results(pairs.size(), Outcome::Missing);

  detail::run_indexed(static_cast<int>(pairs.size()), jobs, [&](int t) {
    auto [i, j] = pairs[static_cast<std::size_t>(t)];
    try {
      Judgment jd = comparator.compare(inst.context, inst.items[static_cast<std::size_t>(i)],
                                       inst.items[static_cast<std::size_t>(j)], inst.relation, false);
      if (jd.prob_left_wins)
        results[static_cast<std::size_t>(t)] = *jd.prob_left_wins >= 0.5 ? Outcome::First : Outcome::Second;
      else if (jd.winner == Winner::Left)
        results[static_cast<std::size_t>(t)] = Outcome::First;
      else if (jd.winner == Winner::Right)
        results[static_cast<std::size_t>(t)] = Outcome::Second;
      else
        results[static_cast<std::size_t>(t)] = Outcome::Abstain;
    } catch (const TransportError&) {
      results[static_cast<std::size_t>(t)] = Outcome::Missing;
    }
  });

  RelationGraph g;
  for (const auto& it : inst.items) g.add_node(it.id);
  PairCounts c;
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    auto [i, j] = pairs[t];
    const std::string& a = inst.items[static_cast<std::size_t>(i)].id;
    const std::string& b = inst.items[static_cast<std::size_t>(j)].id;
    ++c.queried;
    switch (results[t]) {
      case Outcome::First: g.add_edge(a, b); break;
      case Outcome::Second: g.add_edge(b, a); break;
      case Outcome::Abstain: ++c.abstained; break;
      case Outcome::Missing: ++c.missing; break;
    }
  }
  if (counts) *counts = c;
  return g;
}

struct MatrixPair {
  PreferenceMatrix original;
  std::optional<PreferenceMatrix> negated;
  int calls = 0;
  int abstained = 0;
  int missing = 0;
};

// Queries all N(N-1) ordered pairs under the original relation and, when
// requested, under the negated relation too. Entries are recorded exactly
// as returned; transport failures become Missing. Fails only if every
// single call failed.
inline MatrixPair evaluate_full_matrix(const Instance& inst, Comparator& comparator,
                                       bool include_negated, int jobs = 1) {
  if (inst.items.size() < 2)
    throw InvalidInputError("evaluate_full_matrix: instance needs at least 2 items");
  if (include_negated && !comparator.supports_negated())
    throw UnsupportedCapabilityError("evaluate_full_matrix: backend does not support negated prompts");

  const int n = static_cast<int>(inst.items.size());
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (const auto& it : inst.items) ids.push_back(it.id);

  struct Task {
    int i, j;
    bool negated;
  };
  std::vector<Task> tasks;
  for (int pass = 0; pass < (include_negated ? 2 : 1); ++pass)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) tasks.push_back({i, j, pass == 1});

  std::vector<MatrixEntry> results(tasks.size(), MatrixEntry::Missing);
  detail::run_indexed(static_cast<int>(tasks.size()), jobs, [&](int t) {
    const Task& task = tasks[static_cast<std::size_t>(t)];
    try {
      Judgment jd = comparator.compare(inst.context, inst.items[static_cast<std::size_t>(task.i)],
                                       inst.items[static_cast<std::size_t>(task.j)], inst.relation, task.negated);
      if (jd.winner == Winner::Left)
        results[static_cast<std::size_t>(t)] = MatrixEntry::FirstWins;
      else if (jd.winner == Winner::Right)
        results[static_cast<std::size_t>(t)] = MatrixEntry::SecondWins;
      else
        results[static_cast<std::size_t>(t)] = MatrixEntry::Abstain;
    } catch (const TransportError&) {
      results[static_cast<std::size_t>(t)] = MatrixEntry::Missing;
    }
  });

  MatrixPair out;
  out.original = PreferenceMatrix(ids);
  if (include_negated) out.negated = PreferenceMatrix(ids);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const Task& task = tasks[t];
    PreferenceMatrix& m = task.negated ? *out.negated : out.original;
    m.set(task.i, task.j, results[t]);
    ++out.calls;
    if (results[t] == MatrixEntry::Abstain) ++out.abstained;
    if (results[t] == MatrixEntry::Missing) ++out.missing;
  }
  if (out.missing == out.calls)
    throw TransportError("evaluate_full_matrix: every comparator call failed");
  return out;
}

}  // namespace concord
