#pragma once
// Domain types for pairwise-preference evaluation: items, relations,
// instances, human annotations, comparator judgments, relation graphs and
// preference matrices.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace concord {

// ---------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A precondition was violated (bad argument, unknown id, ...).
struct InvalidInputError : Error {
  using Error::Error;
};

// A score's denominator is empty. Raised instead of silently returning 0.
struct UndefinedScoreError : Error {
  using Error::Error;
};

// A remote backend failed to deliver a response after retries.
struct TransportError : Error {
  using Error::Error;
};

// The operation needs a capability the backend does not provide.
struct UnsupportedCapabilityError : Error {
  using Error::Error;
};

// Data failed an integrity check (schema violation, broken invariant).
struct ValidationError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------
// Items, relations, instances
// ---------------------------------------------------------------------

struct Item {
  std::string id;    // unique within its instance
  std::string text;  // summary / document / event description
};

// A directional relation and its negation, both phrased in natural
// language so prompt templates can splice them in.
struct RelationSpec {
  std::string name;               // e.g. "coherence", "relevance"
  std::string statement;          // "... is more coherent than ..."
  std::string negated_statement;  // "... is less coherent than ..."
};

inline void validate(const RelationSpec& r) {
  if (r.statement.empty() || r.negated_statement.empty())
    throw ValidationError("relation '" + r.name + "': statement and negated_statement must be non-empty");
  if (r.statement == r.negated_statement)
    throw ValidationError("relation '" + r.name + "': statement and negated_statement must differ");
}

// A human (or synthesized) pairwise label: winner is one of {first, second}.
struct PairwiseAnnotation {
  std::string first;
  std::string second;
  std::string winner;
  bool negated = false;  // label holds under the negated relation

  std::string loser() const { return winner == first ? second : first; }
};

// One evaluation unit: a context, the items to compare, whatever sparse
// human labels exist, an optional gold ranking (most-preferred first) and
// the relation being judged.
struct Instance {
  std::string instance_id;
  std::string context;
  std::vector<Item> items;
  std::vector<PairwiseAnnotation> annotations;
  std::vector<std::string> gold_ranking;  // empty when unknown
  RelationSpec relation;

  // Position of an item id in `items`, or -1 when absent.
  int item_index(const std::string& id) const {
    for (std::size_t i = 0; i < items.size(); ++i)
      if (items[i].id == id) return static_cast<int>(i);
    return -1;
  }

  const Item& item_by_id(const std::string& id) const {
    int idx = item_index(id);
    if (idx < 0) throw InvalidInputError("instance " + instance_id + ": unknown item id '" + id + "'");
    return items[static_cast<std::size_t>(idx)];
  }
};

inline void validate(const Instance& inst) {
  if (inst.items.size() < 2)
    throw ValidationError("instance " + inst.instance_id + ": needs at least 2 items");
  std::set<std::string> ids;
  for (const auto& it : inst.items) {
    if (it.id.empty()) throw ValidationError("instance " + inst.instance_id + ": empty item id");
    if (!ids.insert(it.id).second)
      throw ValidationError("instance " + inst.instance_id + ": duplicate item id '" + it.id + "'");
  }
  for (const auto& a : inst.annotations) {
    if (a.first == a.second)
      throw ValidationError("instance " + inst.instance_id + ": annotation compares an item to itself");
    if (!ids.count(a.first) || !ids.count(a.second))
      throw ValidationError("instance " + inst.instance_id + ": annotation references unknown item id");
    if (a.winner != a.first && a.winner != a.second)
      throw ValidationError("instance " + inst.instance_id + ": annotation winner must be one of the compared items");
  }
  std::set<std::string> seen;
  for (const auto& id : inst.gold_ranking) {
    if (!ids.count(id))
      throw ValidationError("instance " + inst.instance_id + ": gold ranking references unknown item id");
    if (!seen.insert(id).second)
      throw ValidationError("instance " + inst.instance_id + ": gold ranking repeats item id '" + id + "'");
  }
  validate(inst.relation);
}

// ---------------------------------------------------------------------
// Judgments
// ---------------------------------------------------------------------

enum class Winner : uint8_t { Left, Right, Abstain };

// A comparator's decision for one ordered pair. `left` was presented
// first. When a probability is available, winner == Left iff
// prob_left_wins >= 1/2 (ties resolve to the first-presented item).
struct Judgment {
  std::string left;
  std::string right;
  Winner winner = Winner::Abstain;
  std::optional<double> prob_left_wins;
  bool negated = false;
  std::string raw_output;

  // Id of the winning item; empty on abstain.
  std::string winner_id() const {
    switch (winner) {
      case Winner::Left: return left;
      case Winner::Right: return right;
      default: return {};
    }
  }
};

inline void validate(const Judgment& j) {
  if (j.left == j.right) throw ValidationError("judgment compares an item to itself");
  if (j.prob_left_wins) {
    double p = *j.prob_left_wins;
    if (p < 0.0 || p > 1.0) throw ValidationError("judgment probability out of [0,1]");
    if (j.winner != Winner::Abstain) {
      bool should_be_left = p >= 0.5;
      if (should_be_left != (j.winner == Winner::Left))
        throw ValidationError("judgment winner disagrees with its probability");
    }
  }
}

// ---------------------------------------------------------------------
// Relation graph
// ---------------------------------------------------------------------

// Directed graph of pairwise preferences: edge u -> v means u was judged
// preferable to v. Graphs may be partial (not every pair decided). No
// self-edges; at most one direction per unordered pair.
class RelationGraph {
 public:
  void add_node(const std::string& id) {
    if (node_set_.insert(id).second) nodes_.push_back(id);
  }

  void add_edge(const std::string& u, const std::string& v) {
    if (u == v) throw InvalidInputError("relation graph: self-edge on '" + u + "'");
    if (has_edge(v, u))
      throw InvalidInputError("relation graph: edge " + u + "->" + v + " conflicts with existing " + v + "->" + u);
    add_node(u);
    add_node(v);
    succ_[u].insert(v);
  }

  bool contains(const std::string& id) const { return node_set_.count(id) > 0; }

  bool has_edge(const std::string& u, const std::string& v) const {
    auto it = succ_.find(u);
    return it != succ_.end() && it->second.count(v) > 0;
  }

  // Nodes in insertion order.
  const std::vector<std::string>& nodes() const { return nodes_; }

  const std::set<std::string>& successors(const std::string& id) const {
    auto it = succ_.find(id);
    return it == succ_.end() ? empty_ : it->second;
  }

  std::size_t node_count() const { return nodes_.size(); }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& [u, vs] : succ_) n += vs.size();
    return n;
  }

  std::vector<std::pair<std::string, std::string>> edges() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& u : nodes_) {
      auto it = succ_.find(u);
      if (it == succ_.end()) continue;
      for (const auto& v : it->second) out.emplace_back(u, v);
    }
    return out;
  }

  static RelationGraph from_edges(const std::vector<std::pair<std::string, std::string>>& edges) {
    RelationGraph g;
    for (const auto& [u, v] : edges) g.add_edge(u, v);
    return g;
  }

 private:
  std::vector<std::string> nodes_;
  std::set<std::string> node_set_;
  std::map<std::string, std::set<std::string>> succ_;
  inline static const std::set<std::string> empty_{};
};

// ---------------------------------------------------------------------
// Preference matrix
// ---------------------------------------------------------------------

enum class MatrixEntry : uint8_t { FirstWins, SecondWins, Abstain, Missing };

// Judgments for all ordered pairs of an item list. entry(i, j) records the
// outcome when item i was presented first; the diagonal is never queried.
class PreferenceMatrix {
 public:
  PreferenceMatrix() = default;

  explicit PreferenceMatrix(std::vector<std::string> item_ids)
      : ids_(std::move(item_ids)),
        cells_(ids_.size() * ids_.size(), MatrixEntry::Missing) {
    if (ids_.size() < 2) throw InvalidInputError("preference matrix needs at least 2 items");
  }

  int size() const { return static_cast<int>(ids_.size()); }
  const std::vector<std::string>& item_ids() const { return ids_; }

  MatrixEntry at(int i, int j) const {
    check(i, j);
    return cells_[index(i, j)];
  }

  void set(int i, int j, MatrixEntry e) {
    check(i, j);
    cells_[index(i, j)] = e;
  }

  // Id of the item that won cell (i, j), when decided.
  std::optional<std::string> winner_at(int i, int j) const {
    switch (at(i, j)) {
      case MatrixEntry::FirstWins: return ids_[static_cast<std::size_t>(i)];
      case MatrixEntry::SecondWins: return ids_[static_cast<std::size_t>(j)];
      default: return std::nullopt;
    }
  }

 private:
  void check(int i, int j) const {
    if (i < 0 || j < 0 || i >= size() || j >= size())
      throw InvalidInputError("preference matrix index out of range");
    if (i == j) throw InvalidInputError("preference matrix diagonal is undefined");
  }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * ids_.size() + static_cast<std::size_t>(j);
  }

  std::vector<std::string> ids_;
  std::vector<MatrixEntry> cells_;
};

}  // namespace concord
