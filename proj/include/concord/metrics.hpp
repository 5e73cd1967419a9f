#pragma once
// Logical-consistency metrics over comparator output: transitivity of the
// relation graph across sampled K-subsets, commutativity and negation
// invariance of the preference matrices, agreement with human labels,
// self-agreement across repeated samples, and rank correlation.
//
// Denominator policy: pairs with an abstained or missing entry never enter
// a metric's denominator; they are counted and reported separately. A
// metric whose denominator ends up empty raises UndefinedScoreError
// instead of silently returning 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "concord/core.hpp"
#include "concord/graph.hpp"
#include "concord/rng.hpp"

namespace concord {

// ---------------------------------------------------------------------
// Subset sampling for transitivity
// ---------------------------------------------------------------------

// Chooses the K-subsets whose induced subgraphs get cycle-checked. When
// the number of K-subsets is within m_cap they are enumerated
// exhaustively; otherwise m_cap distinct subsets are drawn with the seed.
struct SubsetSampler {
  int n = 0;
  int k = 0;
  int m_cap = 1000;
  uint64_t seed = 0;
};

inline void validate(const SubsetSampler& s) {
  if (s.k < 3 || s.k > s.n)
    throw InvalidInputError("subset sampler: k must satisfy 3 <= k <= n (k=" + std::to_string(s.k) +
                            ", n=" + std::to_string(s.n) + ")");
  if (s.m_cap < 1) throw InvalidInputError("subset sampler: m_cap must be >= 1");
}

// C(n, k), saturating at cap + 1 so the caller can test "> cap" without
// overflow.
inline uint64_t count_combinations_capped(int n, int k, uint64_t cap) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (int i = 1; i <= k; ++i) {
    c = c * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (c > cap) return cap + 1;
  }
  return static_cast<uint64_t>(c);
}

namespace detail {

template <typename Fn>
void for_each_combination(int n, int k, Fn&& fn) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(idx);
    int pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) return;
    ++idx[static_cast<std::size_t>(pos)];
    for (int i = pos + 1; i < k; ++i)
      idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
  }
}

}  // namespace detail

struct TransitivityResult {
  double value = 0.0;   // fraction of sampled K-subsets whose induced subgraph is acyclic
  int samples = 0;      // M actually used
  bool exhaustive = false;
};

// Degree of transitivity at subset size k: the fraction of k-subsets of
// nodes whose induced subgraph contains no directed cycle. 1 means no
// k-subset exposes a contradiction.
inline TransitivityResult transitivity_score(const RelationGraph& g, const SubsetSampler& sampler) {
  validate(sampler);
  if (sampler.n != static_cast<int>(g.node_count()))
    throw InvalidInputError("transitivity_score: sampler.n does not match the graph");

  const auto& nodes = g.nodes();
  TransitivityResult res;
  int acyclic = 0;

  auto check = [&](const std::vector<int>& idx) {
    std::vector<std::string> keep;
    keep.reserve(idx.size());
    for (int i : idx) keep.push_back(nodes[static_cast<std::size_t>(i)]);
    if (!has_cycle(induced_subgraph(g, keep))) ++acyclic;
    ++res.samples;
  };

  uint64_t total = count_combinations_capped(sampler.n, sampler.k, static_cast<uint64_t>(sampler.m_cap));
  if (total <= static_cast<uint64_t>(sampler.m_cap)) {
    res.exhaustive = true;
    detail::for_each_combination(sampler.n, sampler.k, check);
  } else {
    Rng rng(sampler.seed);
    std::set<std::vector<int>> seen;
    while (static_cast<int>(seen.size()) < sampler.m_cap) {
      auto idx = rng.sample_indices(sampler.n, sampler.k);
      if (seen.insert(idx).second) check(idx);
    }
  }
  res.value = static_cast<double>(acyclic) / static_cast<double>(res.samples);
  return res;
}

inline TransitivityResult transitivity_score(const RelationGraph& g, int k, int m_cap = 1000,
                                             uint64_t seed = 0) {
  SubsetSampler s;
  s.n = static_cast<int>(g.node_count());
  s.k = k;
  s.m_cap = m_cap;
  s.seed = seed;
  return transitivity_score(g, s);
}

// ---------------------------------------------------------------------
// Matrix metrics
// ---------------------------------------------------------------------

struct MetricResult {
  double value = 0.0;
  int counted = 0;   // pairs in the denominator
  int excluded = 0;  // pairs dropped for abstain/missing entries
};

namespace detail {

inline bool decided(MatrixEntry e) {
  return e == MatrixEntry::FirstWins || e == MatrixEntry::SecondWins;
}

}  // namespace detail

// Fraction of unordered pairs where the same item wins under both
// presentation orders.
inline MetricResult commutativity_score(const PreferenceMatrix& m) {
  MetricResult res;
  int matches = 0;
  const int n = m.size();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!detail::decided(m.at(i, j)) || !detail::decided(m.at(j, i))) {
        ++res.excluded;
        continue;
      }
      ++res.counted;
      if (*m.winner_at(i, j) == *m.winner_at(j, i)) ++matches;
    }
  }
  if (res.counted == 0)
    throw UndefinedScoreError("commutativity_score: no pair decided under both presentation orders");
  res.value = static_cast<double>(matches) / static_cast<double>(res.counted);
  return res;
}

// Fraction of ordered pairs where the winner under the negated relation
// is the opposite item of the winner under the original relation.
inline MetricResult negation_score(const PreferenceMatrix& original, const PreferenceMatrix& negated) {
  if (original.item_ids() != negated.item_ids())
    throw InvalidInputError("negation_score: matrices cover different item lists");
  MetricResult res;
  int matches = 0;
  const int n = original.size();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (!detail::decided(original.at(i, j)) || !detail::decided(negated.at(i, j))) {
        ++res.excluded;
        continue;
      }
      ++res.counted;
      if (*original.winner_at(i, j) != *negated.winner_at(i, j)) ++matches;
    }
  }
  if (res.counted == 0)
    throw UndefinedScoreError("negation_score: no ordered pair decided under both relations");
  res.value = static_cast<double>(matches) / static_cast<double>(res.counted);
  return res;
}

// Fraction of human-annotated pairs where the comparator picked the same
// winner. Judgments are matched to annotations by unordered pair; the
// first covering judgment wins (callers typically pass canonical-order
// judgments, one per pair).
inline MetricResult human_agreement(const std::vector<Judgment>& judgments,
                                    const std::vector<PairwiseAnnotation>& annotations) {
  auto pair_key = [](const std::string& a, const std::string& b) {
    return a < b ? a + "\x1f" + b : b + "\x1f" + a;
  };
  std::map<std::string, const Judgment*> by_pair;
  for (const auto& j : judgments) {
    if (j.negated) continue;
    by_pair.emplace(pair_key(j.left, j.right), &j);
  }

  MetricResult res;
  int matches = 0;
  bool any_overlap = false;
  for (const auto& a : annotations) {
    if (a.negated) continue;
    auto it = by_pair.find(pair_key(a.first, a.second));
    if (it == by_pair.end()) continue;
    any_overlap = true;
    const Judgment& j = *it->second;
    if (j.winner == Winner::Abstain) {
      ++res.excluded;
      continue;
    }
    ++res.counted;
    if (j.winner_id() == a.winner) ++matches;
  }
  if (!any_overlap)
    throw UndefinedScoreError("human_agreement: no annotated pair is covered by a judgment");
  if (res.counted == 0)
    throw UndefinedScoreError("human_agreement: the comparator abstained on every annotated pair");
  res.value = static_cast<double>(matches) / static_cast<double>(res.counted);
  return res;
}

// Share of repeated samples of one ordered pair that match the modal
// judgment. Ranges over [0.5, 1] for binary outcomes; needs at least two
// non-abstaining samples.
inline MetricResult self_agreement(const std::vector<Judgment>& samples) {
  MetricResult res;
  int left = 0, right = 0;
  for (const auto& j : samples) {
    if (j.winner == Winner::Left)
      ++left;
    else if (j.winner == Winner::Right)
      ++right;
    else
      ++res.excluded;
  }
  res.counted = left + right;
  if (res.counted < 2)
    throw UndefinedScoreError("self_agreement: needs at least 2 non-abstaining samples");
  res.value = static_cast<double>(std::max(left, right)) / static_cast<double>(res.counted);
  return res;
}

// ---------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------

enum class CorrelationMethod : uint8_t { Pearson, Spearman };

// 1-based ranks with ties sharing their average rank.
inline std::vector<double> fractional_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

namespace detail {

inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw UndefinedScoreError("correlate: an input has zero variance");
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace detail

// Pearson or Spearman correlation coefficient. Spearman ranks both inputs
// with fractional (average) ranks, so ties are handled the standard way.
inline double correlate(const std::vector<double>& xs, const std::vector<double>& ys,
                        CorrelationMethod method) {
  if (xs.size() != ys.size())
    throw InvalidInputError("correlate: input lengths differ");
  if (xs.size() < 3)
    throw InvalidInputError("correlate: needs at least 3 observations");
  for (double v : xs)
    if (std::isnan(v)) throw InvalidInputError("correlate: undefined entry in xs");
  for (double v : ys)
    if (std::isnan(v)) throw InvalidInputError("correlate: undefined entry in ys");

  if (method == CorrelationMethod::Pearson) return detail::pearson(xs, ys);
  return detail::pearson(fractional_ranks(xs), fractional_ranks(ys));
}

}  // namespace concord
