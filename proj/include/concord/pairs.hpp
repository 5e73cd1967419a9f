#pragma once
// Sorting-based preference-rank aggregation with a comparator as the
// pairwise operator: stable bottom-up merge sort from a seeded shuffle,
// optional positional-bias calibration (averaging the preference
// probability over both presentation orders), and Spearman scoring
// against gold rankings.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "concord/comparator.hpp"
#include "concord/core.hpp"
#include "concord/metrics.hpp"
#include "concord/rng.hpp"

namespace concord {

// Order-debiased preference probability for a over b:
//   (P(a wins | a first) + 1 - P(b wins | b first)) / 2
// Exactly two comparator calls. For an order-unbiased backend this equals
// the raw probability.
inline double calibrated_probability(Comparator& comparator, const std::string& context,
                                     const Item& a, const Item& b, const RelationSpec& relation) {
  if (!comparator.supports_probability())
    throw UnsupportedCapabilityError("calibrated_probability: backend reports no probabilities");
  auto prob_of = [](const Judgment& j) {
    if (j.prob_left_wins) return *j.prob_left_wins;
    // An abstention carries no information about either order.
    if (j.winner == Winner::Left) return 1.0;
    if (j.winner == Winner::Right) return 0.0;
    return 0.5;
  };
  Judgment ab = comparator.compare(context, a, b, relation, false);
  Judgment ba = comparator.compare(context, b, a, relation, false);
  return (prob_of(ab) + (1.0 - prob_of(ba))) / 2.0;
}

struct SortRunReport {
  std::string instance_id;
  std::vector<std::string> predicted_ranking;  // most-preferred first
  int comparator_calls = 0;
  int fallbacks = 0;  // comparisons resolved by stable order (abstain/failure)
  bool calibrated = false;
  std::optional<double> spearman_vs_gold;
  uint64_t seed = 0;
};

// Spearman correlation between two rankings of the same id set (rank
// vectors compared via the ties-aware correlation).
inline double evaluate_ranking(const std::vector<std::string>& predicted,
                               const std::vector<std::string>& gold) {
  if (predicted.size() != gold.size() ||
      std::set<std::string>(predicted.begin(), predicted.end()) !=
          std::set<std::string>(gold.begin(), gold.end()))
    throw InvalidInputError("evaluate_ranking: predicted and gold must cover the same item ids");

  std::map<std::string, double> gold_pos;
  for (std::size_t i = 0; i < gold.size(); ++i) gold_pos[gold[i]] = static_cast<double>(i);
  std::vector<double> xs, ys;
  xs.reserve(predicted.size());
  ys.reserve(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    xs.push_back(static_cast<double>(i));
    ys.push_back(gold_pos[predicted[i]]);
  }
  return correlate(xs, ys, CorrelationMethod::Spearman);
}

// Ranks an instance's items with comparator-driven stable bottom-up merge
// sort, starting from a seeded shuffle so a positionally biased comparator
// cannot inherit the input order. Comparisons resolve first -> preferred;
// a probability of exactly 1/2 and any abstention or transport failure
// keep the stable (earlier-run) element first. Costs at most N*ceil(log2 N)
// comparator calls, twice that when calibrated.
inline SortRunReport pairs_rank(const Instance& inst, Comparator& comparator, bool calibrated,
                                uint64_t seed, bool shuffle = true) {
  if (inst.items.size() < 2)
    throw InvalidInputError("pairs_rank: instance needs at least 2 items");

  const std::size_t n = inst.items.size();
  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  if (shuffle) Rng(seed).shuffle(order);

  SortRunReport report;
  report.instance_id = inst.instance_id;
  report.calibrated = calibrated;
  report.seed = seed;

  const bool use_probability = calibrated && comparator.supports_probability();

  // True when the earlier-run element `a` should stay before `b`.
  auto keeps_position = [&](int a, int b) {
    const Item& ia = inst.items[static_cast<std::size_t>(a)];
    const Item& ib = inst.items[static_cast<std::size_t>(b)];
    try {
      if (calibrated) {
        report.comparator_calls += 2;
        if (use_probability)
          return calibrated_probability(comparator, inst.context, ia, ib, inst.relation) >= 0.5;
        // No probabilities: majority over both presentation orders,
        // ties keep the stable order.
        Judgment ab = comparator.compare(inst.context, ia, ib, inst.relation, false);
        Judgment ba = comparator.compare(inst.context, ib, ia, inst.relation, false);
        int votes_a = (ab.winner == Winner::Left ? 1 : 0) + (ba.winner == Winner::Right ? 1 : 0);
        int votes_b = (ab.winner == Winner::Right ? 1 : 0) + (ba.winner == Winner::Left ? 1 : 0);
        return votes_a >= votes_b;
      }
      report.comparator_calls += 1;
      Judgment j = comparator.compare(inst.context, ia, ib, inst.relation, false);
      if (j.prob_left_wins) return *j.prob_left_wins >= 0.5;
      if (j.winner == Winner::Abstain) {
        ++report.fallbacks;
        return true;
      }
      return j.winner == Winner::Left;
    } catch (const TransportError&) {
      ++report.fallbacks;
      return true;
    }
  };

  // Bottom-up stable merge sort over item indices.
  std::vector<int> buffer(n);
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      std::size_t mid = std::min(lo + width, n);
      std::size_t hi = std::min(lo + 2 * width, n);
      if (mid >= hi) continue;
      std::size_t a = lo, b = mid, out = lo;
      while (a < mid && b < hi) {
        if (keeps_position(order[a], order[b]))
          buffer[out++] = order[a++];
        else
          buffer[out++] = order[b++];
      }
      while (a < mid) buffer[out++] = order[a++];
      while (b < hi) buffer[out++] = order[b++];
      std::copy(buffer.begin() + static_cast<long>(lo), buffer.begin() + static_cast<long>(hi),
                order.begin() + static_cast<long>(lo));
    }
  }

  report.predicted_ranking.reserve(n);
  for (int idx : order) report.predicted_ranking.push_back(inst.items[static_cast<std::size_t>(idx)].id);

  if (!inst.gold_ranking.empty()) {
    std::set<std::string> gold_ids(inst.gold_ranking.begin(), inst.gold_ranking.end());
    std::vector<std::string> restricted;
    for (const auto& id : report.predicted_ranking)
      if (gold_ids.count(id)) restricted.push_back(id);
    if (restricted.size() == inst.gold_ranking.size() && restricted.size() >= 3)
      report.spearman_vs_gold = evaluate_ranking(restricted, inst.gold_ranking);
  }
  return report;
}

// ---------------------------------------------------------------------
// Noise-grid sweeps
// ---------------------------------------------------------------------

struct SweepPoint {
  double p_flip = 0.0;
  double positional_bias = 0.0;
  double p_neg_fail = 0.0;
};

struct SweepRow {
  SweepPoint point;
  int runs = 0;
  double mean_spearman_raw = 0.0;
  double mean_spearman_calibrated = 0.0;
  double mean_calls_raw = 0.0;
  double mean_calls_calibrated = 0.0;
};

// For each noise grid point, runs pairs_rank with and without calibration
// over instances x repetitions and reports the means. Run seeds depend
// only on (base_seed, instance, repetition), so every grid point sees the
// same shuffles and the comparison across points is paired.
inline std::vector<SweepRow> sweep_experiment(const std::vector<SweepPoint>& grid,
                                              const std::vector<Instance>& instances,
                                              int repetitions, uint64_t base_seed) {
  if (repetitions < 1) throw InvalidInputError("sweep_experiment: repetitions must be >= 1");
  if (instances.empty()) throw InvalidInputError("sweep_experiment: no instances");

  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const auto& point : grid) {
    SweepRow row;
    row.point = point;
    double sum_raw = 0.0, sum_cal = 0.0, sum_calls_raw = 0.0, sum_calls_cal = 0.0;
    for (std::size_t ii = 0; ii < instances.size(); ++ii) {
      const Instance& inst = instances[ii];
      // Ground truth: the gold ranking when it covers every item,
      // otherwise the item-list order.
      std::vector<std::string> ground;
      if (inst.gold_ranking.size() == inst.items.size())
        ground = inst.gold_ranking;
      else
        for (const auto& it : inst.items) ground.push_back(it.id);

      for (int rep = 0; rep < repetitions; ++rep) {
        uint64_t run_seed = hash_combine(hash_combine(base_seed, static_cast<uint64_t>(ii)),
                                         static_cast<uint64_t>(rep));
        SimulatedComparatorConfig cfg;
        cfg.ground_ranking = ground;
        cfg.p_flip = point.p_flip;
        cfg.positional_bias = point.positional_bias;
        cfg.p_neg_fail = point.p_neg_fail;
        cfg.seed = hash_combine(run_seed, 0x636f6d7061726572ull);
        SimulatedComparator cmp(cfg, inst.instance_id);

        Instance scored = inst;
        scored.gold_ranking = ground;
        SortRunReport raw = pairs_rank(scored, cmp, false, run_seed);
        SortRunReport cal = pairs_rank(scored, cmp, true, run_seed);
        sum_raw += raw.spearman_vs_gold.value_or(0.0);
        sum_cal += cal.spearman_vs_gold.value_or(0.0);
        sum_calls_raw += raw.comparator_calls;
        sum_calls_cal += cal.comparator_calls;
      }
    }
    double denom = static_cast<double>(instances.size()) * repetitions;
    row.runs = static_cast<int>(instances.size()) * repetitions;
    row.mean_spearman_raw = sum_raw / denom;
    row.mean_spearman_calibrated = sum_cal / denom;
    row.mean_calls_raw = sum_calls_raw / denom;
    row.mean_calls_calibrated = sum_calls_cal / denom;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace concord
