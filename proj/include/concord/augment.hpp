#pragma once
// Refinement and augmentation of noisy pairwise annotations: optional
// label perturbation, win-loss-rate rank estimation, extrapolation of a
// conflict-free comparison set from the estimated ranking, and doubling
// with negated-relation counterparts. Extrapolated sets are acyclic and
// commutative by construction.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "concord/core.hpp"
#include "concord/graph.hpp"
#include "concord/rng.hpp"

namespace concord {

// ---------------------------------------------------------------------
// Win-loss records and rankings
// ---------------------------------------------------------------------

// Per-item tally over a set of pairwise annotations. The rank-aggregation
// score is (wins - losses) / comparisons; comparisons = wins + losses
// since outcomes are binary.
struct WinLossRecord {
  std::string item;
  int wins = 0;
  int losses = 0;
  int comparisons = 0;
};

// Orders two records by win-loss rate, descending. Exact rational
// comparison (cross-multiplied), so tie detection never suffers from
// floating-point division.
inline int compare_rates_desc(const WinLossRecord& a, const WinLossRecord& b) {
  long long lhs = static_cast<long long>(a.wins - a.losses) * b.comparisons;
  long long rhs = static_cast<long long>(b.wins - b.losses) * a.comparisons;
  if (lhs > rhs) return -1;
  if (lhs < rhs) return 1;
  return 0;
}

// An ordered sequence of tie tiers (earlier = more preferred). Items in
// the same tier have an unknown mutual preference; items with zero
// comparisons are not ranked at all.
struct Ranking {
  std::vector<std::vector<std::string>> tiers;
  std::vector<std::string> unranked;
};

enum class TieMode : uint8_t {
  Partial,     // equal rates share a tier, no pairs emitted between them
  TotalOrder,  // ties broken by original record order, every tier a singleton
};

// ---------------------------------------------------------------------
// Pipeline stages
// ---------------------------------------------------------------------

// Flips the winner of exactly round(fraction * total annotations)
// annotations, chosen uniformly without replacement across the whole
// dataset. Everything else is untouched.
inline std::vector<Instance> perturb_labels(std::vector<Instance> dataset, double fraction,
                                            uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0)
    throw InvalidInputError("perturb_labels: fraction must be in [0,1]");

  std::vector<std::pair<std::size_t, std::size_t>> slots;  // (instance, annotation)
  for (std::size_t i = 0; i < dataset.size(); ++i)
    for (std::size_t a = 0; a < dataset[i].annotations.size(); ++a) slots.emplace_back(i, a);

  int total = static_cast<int>(slots.size());
  int flips = static_cast<int>(std::llround(fraction * static_cast<double>(total)));
  if (flips == 0) return dataset;

  Rng rng(seed);
  for (int idx : rng.sample_indices(total, flips)) {
    auto [i, a] = slots[static_cast<std::size_t>(idx)];
    PairwiseAnnotation& ann = dataset[i].annotations[a];
    ann.winner = ann.winner == ann.first ? ann.second : ann.first;
  }
  return dataset;
}

// Number of flips perturb_labels will apply for a given dataset size.
inline int perturb_flip_count(std::size_t total_annotations, double fraction) {
  return static_cast<int>(std::llround(fraction * static_cast<double>(total_annotations)));
}

// One record per item that appears in at least one annotation, in first-
// appearance order. A negated annotation counts as a win for the losing
// side under the original relation.
inline std::vector<WinLossRecord> win_loss_rates(const Instance& inst) {
  std::vector<WinLossRecord> records;
  std::map<std::string, std::size_t> index;
  auto record = [&](const std::string& id) -> WinLossRecord& {
    auto it = index.find(id);
    if (it == index.end()) {
      it = index.emplace(id, records.size()).first;
      records.push_back(WinLossRecord{id, 0, 0, 0});
    }
    return records[it->second];
  };

  for (const auto& a : inst.annotations) {
    const std::string& winner = a.negated ? a.loser() : a.winner;
    const std::string& loser = a.negated ? a.winner : a.loser();
    WinLossRecord& w = record(winner);
    ++w.wins;
    ++w.comparisons;
    WinLossRecord& l = record(loser);
    ++l.losses;
    ++l.comparisons;
  }
  return records;
}

// Ranks items by win-loss rate, descending. Equal rates form a tie tier
// (or are broken by input order in TotalOrder mode); zero-comparison
// records land in `unranked`. Stable in the input record order, so the
// result is reproducible and independent of annotation order.
inline Ranking estimate_ranking(const std::vector<WinLossRecord>& records,
                                TieMode mode = TieMode::Partial) {
  if (records.empty()) throw InvalidInputError("estimate_ranking: no records");

  Ranking ranking;
  std::vector<const WinLossRecord*> ranked;
  for (const auto& r : records) {
    if (r.comparisons == 0)
      ranking.unranked.push_back(r.item);
    else
      ranked.push_back(&r);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const WinLossRecord* a, const WinLossRecord* b) {
    return compare_rates_desc(*a, *b) < 0;
  });

  for (std::size_t i = 0; i < ranked.size();) {
    std::size_t j = i;
    while (mode == TieMode::Partial && j + 1 < ranked.size() &&
           compare_rates_desc(*ranked[i], *ranked[j + 1]) == 0)
      ++j;
    std::vector<std::string> tier;
    for (std::size_t t = i; t <= j; ++t) tier.push_back(ranked[t]->item);
    ranking.tiers.push_back(std::move(tier));
    i = j + 1;
  }
  return ranking;
}

// Every cross-tier pair, winner from the earlier tier. No pairs inside a
// tier or touching unranked items, so the output states only what the
// ranking actually knows; it is transitively closed and acyclic.
inline std::vector<PairwiseAnnotation> extrapolate_pairs(const Ranking& ranking) {
  std::vector<PairwiseAnnotation> out;
  for (std::size_t hi = 0; hi < ranking.tiers.size(); ++hi) {
    for (std::size_t lo = hi + 1; lo < ranking.tiers.size(); ++lo) {
      for (const auto& u : ranking.tiers[hi]) {
        for (const auto& v : ranking.tiers[lo]) {
          PairwiseAnnotation a;
          a.first = u;
          a.second = v;
          a.winner = u;
          out.push_back(std::move(a));
        }
      }
    }
  }
  return out;
}

// The negated counterpart of each annotation: same pair, opposite winner,
// negated flag toggled. Applying it to its own output restores the
// original winners.
inline std::vector<PairwiseAnnotation> add_negated(const std::vector<PairwiseAnnotation>& annotations,
                                                   const RelationSpec& relation) {
  validate(relation);  // a usable negated statement must exist
  std::vector<PairwiseAnnotation> out;
  out.reserve(annotations.size());
  for (const auto& a : annotations) {
    PairwiseAnnotation n = a;
    n.winner = a.loser();
    n.negated = !a.negated;
    out.push_back(std::move(n));
  }
  return out;
}

struct DatasetStats {
  std::size_t data_size = 0;       // total annotations, negated included
  std::size_t instance_count = 0;
  double avg_comp_per_inst = 0.0;  // 0 for an empty dataset
};

inline DatasetStats dataset_stats(const std::vector<Instance>& dataset) {
  DatasetStats s;
  s.instance_count = dataset.size();
  for (const auto& inst : dataset) s.data_size += inst.annotations.size();
  if (!dataset.empty())
    s.avg_comp_per_inst = static_cast<double>(s.data_size) / static_cast<double>(dataset.size());
  return s;
}

// Checks that an instance's non-negated annotations are mutually
// consistent: no contradictory pair and no preference cycle.
inline void validate_consistent_annotations(const Instance& inst) {
  RelationGraph g;
  for (const auto& a : inst.annotations) {
    if (a.negated) continue;
    if (g.has_edge(a.winner, a.loser())) continue;  // duplicates are fine
    try {
      g.add_edge(a.winner, a.loser());
    } catch (const InvalidInputError&) {
      throw ValidationError("instance " + inst.instance_id + ": contradictory annotations for pair {" +
                            a.first + ", " + a.second + "}");
    }
  }
  if (has_cycle(g))
    throw ValidationError("instance " + inst.instance_id + ": annotations contain a preference cycle");
}

// ---------------------------------------------------------------------
// Whole-dataset pipeline
// ---------------------------------------------------------------------

struct AugmentOptions {
  std::optional<double> flip_fraction;  // perturbation before refinement, off by default
  uint64_t seed = 42;
  TieMode tie_mode = TieMode::Partial;
  bool with_negated = false;
};

struct AugmentResult {
  std::vector<Instance> instances;
  DatasetStats input_stats;
  DatasetStats perturbed_stats;  // equals input_stats sizes; kept for symmetry
  DatasetStats output_stats;
  int flipped = 0;
};

// perturb (optional) -> win-loss ranking -> extrapolation -> optional
// negated counterparts. Instances whose annotations are empty pass
// through with no regenerated pairs.
inline AugmentResult augment_dataset(std::vector<Instance> dataset, const AugmentOptions& opts) {
  AugmentResult res;
  res.input_stats = dataset_stats(dataset);

  if (opts.flip_fraction) {
    res.flipped = perturb_flip_count(res.input_stats.data_size, *opts.flip_fraction);
    dataset = perturb_labels(std::move(dataset), *opts.flip_fraction, opts.seed);
  }
  res.perturbed_stats = dataset_stats(dataset);

  for (auto& inst : dataset) {
    if (inst.annotations.empty()) continue;
    Ranking ranking = estimate_ranking(win_loss_rates(inst), opts.tie_mode);
    std::vector<PairwiseAnnotation> pairs = extrapolate_pairs(ranking);
    if (opts.with_negated) {
      std::vector<PairwiseAnnotation> negated = add_negated(pairs, inst.relation);
      pairs.insert(pairs.end(), negated.begin(), negated.end());
    }
    inst.annotations = std::move(pairs);
  }

  res.output_stats = dataset_stats(dataset);
  res.instances = std::move(dataset);
  return res;
}

}  // namespace concord
