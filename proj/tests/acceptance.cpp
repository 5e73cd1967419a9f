// Acceptance suite: every release-gating property of the toolkit, one
// pass/fail line each. Exact checks are exact; statistical checks run on
// fixed seeds with wide analytic margins. Exits nonzero if any criterion
// fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "concord/augment.hpp"
#include "concord/comparator.hpp"
#include "concord/core.hpp"
#include "concord/evaluation.hpp"
#include "concord/graph.hpp"
#include "concord/metrics.hpp"
#include "concord/pairs.hpp"
#include "concord/rng.hpp"
#include "concord/simulate.hpp"
#include "oracles.hpp"

using namespace concord;

namespace {

struct Check {
  bool& ok;
  std::ostringstream& detail;
  void fail(const std::string& message) {
    ok = false;
    if (!detail.str().empty()) detail << "; ";
    detail << message;
  }
  void require(bool condition, const std::string& message) {
    if (!condition) fail(message);
  }
};

Instance instance_with_items(int n, const std::string& id = "acc") {
  Instance inst;
  inst.instance_id = id;
  inst.context = "ctx";
  for (int i = 0; i < n; ++i) inst.items.push_back(Item{"x" + std::to_string(i), "text"});
  inst.relation = RelationSpec{"pref", "is better than", "is worse than"};
  return inst;
}

// --- 1 -----------------------------------------------------------------
bool cycle_oracle_equivalence(Check& c, std::ostringstream& detail) {
  long long graphs = 0;
  for (int n = 0; n <= 5; ++n) {
    oracle::for_each_oriented_graph(n, [&](const RelationGraph& g) {
      ++graphs;
      if (has_cycle(g) == oracle::brute_force_acyclic(g))
        c.fail("mismatch on an exhaustive " + std::to_string(n) + "-node graph");
    });
  }
  Rng rng(20260808);
  for (int t = 0; t < 1000; ++t) {
    int n = 6 + static_cast<int>(rng.below(2));
    auto g = oracle::random_oriented_graph(n, rng, t % 2 == 0);
    ++graphs;
    if (has_cycle(g) == oracle::brute_force_acyclic(g))
      c.fail("mismatch on a random " + std::to_string(n) + "-node graph");
  }
  detail << graphs << " graphs checked (" << graphs - 1000 << " exhaustive <=5 nodes, 1000 random 6-7)";
  return true;
}

// --- 2 -----------------------------------------------------------------
bool four_cycle_visibility(Check& c, std::ostringstream& detail) {
  auto ring = RelationGraph::from_edges({{"a", "b"}, {"b", "c"}, {"c", "d"}, {"d", "a"}});
  double s3 = transitivity_score(ring, 3).value;
  double s4 = transitivity_score(ring, 4).value;
  c.require(s3 == 1.0, "s_tran(3) != 1.0 on the chordless 4-cycle");
  c.require(s4 == 0.0, "s_tran(4) != 0.0 on the chordless 4-cycle");
  detail << "s_tran(3) = " << s3 << ", s_tran(4) = " << s4;
  return true;
}

// --- 3 -----------------------------------------------------------------
bool random_tournament_transitivity(Check& c, std::ostringstream& detail) {
  Rng rng(7318);
  double sum = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    auto g = oracle::random_oriented_graph(3, rng, true);
    sum += transitivity_score(g, 3).value;
  }
  double mean = sum / trials;
  c.require(std::abs(mean - 0.75) <= 0.02, "mean s_tran(3) outside 0.75 +/- 0.02");
  detail << "mean s_tran(3) = " << mean << " over " << trials << " tournaments (analytic 0.75)";
  return true;
}

// --- 4 -----------------------------------------------------------------
bool sampling_fidelity(Check& c, std::ostringstream& detail) {
  Rng rng(99182);
  double worst10 = 0.0;
  for (int t = 0; t < 100; ++t) {
    auto g = oracle::random_oriented_graph(10, rng, t % 2 == 0);
    double sampled = transitivity_score(g, SubsetSampler{10, 4, 1000, 1000 + static_cast<uint64_t>(t)}).value;
    double exact = transitivity_score(g, SubsetSampler{10, 4, 1'000'000, 0}).value;
    worst10 = std::max(worst10, std::abs(sampled - exact));
  }
  c.require(worst10 <= 0.05, "N=10 K=4 sampled estimate drifted past 0.05");

  // C(14,5) = 2002 > 1000 exercises the genuine sampling path.
  double worst14 = 0.0;
  for (int t = 0; t < 30; ++t) {
    auto g = oracle::random_oriented_graph(14, rng, t % 2 == 0);
    auto sampled = transitivity_score(g, SubsetSampler{14, 5, 1000, 5000 + static_cast<uint64_t>(t)});
    auto exact = transitivity_score(g, SubsetSampler{14, 5, 1'000'000, 0});
    if (sampled.exhaustive) c.fail("sampler enumerated a space larger than its cap");
    worst14 = std::max(worst14, std::abs(sampled.value - exact.value));
  }
  c.require(worst14 <= 0.05, "N=14 K=5 sampled estimate drifted past 0.05");
  detail << "max |sampled - exhaustive|: " << worst10 << " (N=10, 100 graphs), " << worst14
         << " (N=14 forced sampling, 30 graphs)";
  return true;
}

// --- 5 -----------------------------------------------------------------
bool simulated_extremes(Check& c, std::ostringstream& detail) {
  auto inst = instance_with_items(5);
  std::vector<std::string> ground;
  for (const auto& it : inst.items) ground.push_back(it.id);
  for (std::size_t i = 0; i < ground.size(); ++i)
    for (std::size_t j = i + 1; j < ground.size(); ++j)
      inst.annotations.push_back(PairwiseAnnotation{ground[i], ground[j], ground[i], false});

  SimulatedComparatorConfig cfg;
  cfg.ground_ranking = ground;
  cfg.seed = 555;

  {
    SimulatedComparator cmp(cfg, inst.instance_id);
    EvaluateOptions opts;
    auto r = evaluate_instance(inst, cmp, opts);
    for (int k : {3, 4, 5})
      c.require(r.s_tran.at(k) == 1.0, "noiseless s_tran(" + std::to_string(k) + ") != 1");
    c.require(r.s_comm == 1.0, "noiseless s_comm != 1");
    c.require(r.s_neg == 1.0, "noiseless s_neg != 1");
    c.require(r.human_agreement == 1.0, "noiseless human_agreement != 1");
  }
  {
    auto biased = cfg;
    biased.positional_bias = 1.0;
    SimulatedComparator cmp(biased, inst.instance_id);
    auto r = evaluate_instance(inst, cmp, EvaluateOptions{});
    c.require(r.s_comm == 0.0, "fully biased s_comm != 0");
    for (int k : {3, 4, 5})
      c.require(r.s_tran.at(k) == 1.0, "fully biased canonical s_tran != 1");
  }
  {
    auto ignoring = cfg;
    ignoring.p_neg_fail = 1.0;
    SimulatedComparator cmp(ignoring, inst.instance_id);
    auto r = evaluate_instance(inst, cmp, EvaluateOptions{});
    c.require(r.s_neg == 0.0, "negation-ignoring s_neg != 0");
  }
  detail << "all three noise extremes exact";
  return true;
}

// --- 6 -----------------------------------------------------------------
bool augmentation_consistency(Check& c, std::ostringstream& detail) {
  SimulateOptions gen;
  gen.instances = 500;
  gen.items = 7;
  gen.density = 1.0;
  gen.noise = 0.2;
  gen.seed = 60;
  auto corpus = generate_dataset(gen);
  std::size_t corpus_size = dataset_stats(corpus).data_size;

  AugmentOptions plain;
  plain.seed = 61;
  auto augmented = augment_dataset(corpus, plain);

  int comm_undefined = 0;
  for (const auto& inst : augmented.instances) {
    ReplayComparator cmp(inst);
    EvaluateOptions opts;
    opts.k_values = {3, 4, 5, 6, 7};
    opts.include_negation = false;
    auto r = evaluate_instance(inst, cmp, opts);
    for (const auto& [k, v] : r.s_tran)
      if (v != 1.0) c.fail("augmented instance " + inst.instance_id + " has a cyclic subset");
    if (!r.s_comm)
      ++comm_undefined;
    else if (*r.s_comm != 1.0)
      c.fail("augmented instance " + inst.instance_id + " is not commutative");
  }

  AugmentOptions with_neg = plain;
  with_neg.with_negated = true;
  auto doubled = augment_dataset(corpus, with_neg);
  c.require(doubled.output_stats.data_size == 2 * augmented.output_stats.data_size,
            "negation did not exactly double the data size");
  c.require(doubled.output_stats.avg_comp_per_inst == 2.0 * augmented.output_stats.avg_comp_per_inst,
            "negation did not exactly double AvgComp/Inst");

  detail << corpus_size << " input annotations -> " << augmented.output_stats.data_size << " -> "
         << doubled.output_stats.data_size << " with negation (ratio 2); " << comm_undefined
         << " instance(s) with no decided pair";
  return true;
}

// --- 7 -----------------------------------------------------------------
bool win_loss_round_trip(Check& c, std::ostringstream& detail) {
  Rng rng(717);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(rng.below(7));  // N <= 8
    std::vector<std::string> order;
    for (int i = 0; i < n; ++i) order.push_back("x" + std::to_string(i));
    rng.shuffle(order);

    auto inst = instance_with_items(n, "rt");
    inst.items.clear();
    for (const auto& id : order) inst.items.push_back(Item{id, "t"});
    std::set<std::pair<std::string, std::string>> expected;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        inst.annotations.push_back(PairwiseAnnotation{order[static_cast<std::size_t>(i)],
                                                      order[static_cast<std::size_t>(j)],
                                                      order[static_cast<std::size_t>(i)], false});
        expected.emplace(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      }

    auto pairs = extrapolate_pairs(estimate_ranking(win_loss_rates(inst)));
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& p : pairs) got.emplace(p.winner, p.loser());
    if (got != expected) {
      c.fail("round trip diverged at trial " + std::to_string(trial) + " (N=" + std::to_string(n) + ")");
      break;
    }
  }
  detail << "100 random strict orders on N in [2,8] reproduced exactly";
  return true;
}

// --- 8 -----------------------------------------------------------------
bool perturbation_determinism(Check& c, std::ostringstream& detail) {
  SimulateOptions gen;
  gen.instances = 100;
  gen.items = 5;
  gen.density = 1.0;
  gen.seed = 88;
  auto corpus = generate_dataset(gen);
  // 100 instances x C(5,2) = 1000 annotations.
  c.require(dataset_stats(corpus).data_size == 1000, "corpus is not 1000 annotations");

  auto count_flips = [&corpus](const std::vector<Instance>& flipped) {
    int flips = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i)
      for (std::size_t a = 0; a < corpus[i].annotations.size(); ++a)
        if (flipped[i].annotations[a].winner != corpus[i].annotations[a].winner) ++flips;
    return flips;
  };

  auto run1 = perturb_labels(corpus, 0.1, 4242);
  auto run2 = perturb_labels(corpus, 0.1, 4242);
  auto run3 = perturb_labels(corpus, 0.1, 77);
  c.require(count_flips(run1) == 100, "did not flip exactly 100 of 1000");
  c.require(count_flips(run3) == 100, "alternate seed did not flip exactly 100");
  bool identical = true;
  for (std::size_t i = 0; i < run1.size(); ++i)
    for (std::size_t a = 0; a < run1[i].annotations.size(); ++a)
      if (run1[i].annotations[a].winner != run2[i].annotations[a].winner) identical = false;
  c.require(identical, "same seed produced different flips");
  detail << "exactly 100/1000 flips, reproducible per seed";
  return true;
}

// --- 9 -----------------------------------------------------------------
bool pairs_fidelity_and_cost(Check& c, std::ostringstream& detail) {
  int runs = 0;
  for (int n : {8, 16}) {
    auto inst = instance_with_items(n, "pairs");
    std::vector<std::string> ground;
    for (const auto& it : inst.items) ground.push_back(it.id);
    Rng(5).shuffle(ground);
    inst.gold_ranking = ground;

    SimulatedComparatorConfig cfg;
    cfg.ground_ranking = ground;
    cfg.seed = 9;
    SimulatedComparator cmp(cfg, inst.instance_id);

    const int bound = n * static_cast<int>(std::ceil(std::log2(n)));
    for (uint64_t seed = 1; seed <= 100; ++seed) {
      auto raw = pairs_rank(inst, cmp, false, seed);
      auto cal = pairs_rank(inst, cmp, true, seed);
      ++runs;
      if (!raw.spearman_vs_gold || *raw.spearman_vs_gold != 1.0)
        c.fail("raw spearman != 1.0 at N=" + std::to_string(n) + " seed " + std::to_string(seed));
      if (!cal.spearman_vs_gold || *cal.spearman_vs_gold != 1.0)
        c.fail("calibrated spearman != 1.0 at N=" + std::to_string(n));
      if (raw.comparator_calls > bound) c.fail("raw call count exceeded N*ceil(log2 N)");
      if (cal.comparator_calls > 2 * bound) c.fail("calibrated call count exceeded 2*N*ceil(log2 N)");
    }
  }
  detail << runs << " noiseless runs, spearman exactly 1.0, calls within bounds";
  return true;
}

// --- 10 ----------------------------------------------------------------
bool calibration_benefit(Check& c, std::ostringstream& detail) {
  std::vector<Instance> instances{instance_with_items(8, "cal")};
  std::vector<SweepPoint> grid{{0.05, 0.05, 0.0}, {0.05, 0.4, 0.0}};
  auto rows = sweep_experiment(grid, instances, 100, 1009);
  double gain_low = rows[0].mean_spearman_calibrated - rows[0].mean_spearman_raw;
  double gain_high = rows[1].mean_spearman_calibrated - rows[1].mean_spearman_raw;
  c.require(gain_high > gain_low, "calibration gain not larger at positional_bias 0.4 than at 0.05");
  detail << "gain at bias 0.4 = " << gain_high << " vs " << gain_low << " at bias 0.05 (100 runs each)";
  return true;
}

// --- 11 ----------------------------------------------------------------
bool self_agreement_bounds(Check& c, std::ostringstream& detail) {
  const double expectation = oracle::fair_coin_self_agreement_expectation(10);
  c.require(std::abs(expectation - 0.623046875) < 1e-12, "binomial expectation script drifted");

  SimulatedComparatorConfig cfg;
  cfg.ground_ranking = {"a", "b"};
  cfg.p_flip = 0.5;
  cfg.seed = 11011;
  Item a{"a", "t"}, b{"b", "t"};
  RelationSpec rel{"pref", "is better than", "is worse than"};

  double sum = 0.0;
  const int pairs = 2000;
  for (int p = 0; p < pairs; ++p) {
    SimulatedComparator cmp(cfg, "pair-" + std::to_string(p));
    std::vector<Judgment> samples;
    for (int s = 1; s <= 10; ++s) samples.push_back(cmp.compare_sampled("ctx", a, b, rel, false, s));
    sum += self_agreement(samples).value;
  }
  double mean = sum / pairs;
  c.require(mean >= 0.5 && mean <= 0.75, "mean self-agreement left [0.5, 0.75]");
  c.require(std::abs(mean - expectation) <= 0.03, "mean self-agreement off the binomial expectation");
  detail << "mean = " << mean << " over " << pairs << " pairs (expected " << expectation << ")";
  return true;
}

// --- 12 ----------------------------------------------------------------
bool spearman_correctness(Check& c, std::ostringstream& detail) {
  Rng rng(121212);
  int checked = 0;
  double worst = 0.0;
  while (checked < 1000) {
    int n = 3 + static_cast<int>(rng.below(98));
    bool with_ties = checked % 2 == 0;
    std::vector<double> xs, ys;
    for (int i = 0; i < n; ++i) {
      if (with_ties) {
        xs.push_back(static_cast<double>(rng.below(static_cast<uint64_t>(n / 3 + 2))));
        ys.push_back(static_cast<double>(rng.below(static_cast<uint64_t>(n / 3 + 2))));
      } else {
        xs.push_back(static_cast<double>(i));
        ys.push_back(static_cast<double>(i));
      }
    }
    if (!with_ties) {
      rng.shuffle(xs);
      rng.shuffle(ys);
    }
    double got;
    try {
      got = correlate(xs, ys, CorrelationMethod::Spearman);
    } catch (const UndefinedScoreError&) {
      continue;  // constant vector drawn; redraw
    }
    double reference = oracle::spearman(xs, ys);
    worst = std::max(worst, std::abs(got - reference));
    ++checked;
  }
  c.require(worst <= 1e-12, "spearman drifted from the rank-formula oracle");
  detail << checked << " vectors (half with ties), max |diff| = " << worst;
  return true;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<bool(Check&, std::ostringstream&)> fn;
  };
  std::vector<Criterion> criteria{
      {1, "cycle detection matches brute-force enumeration", 10.0, cycle_oracle_equivalence},
      {2, "chordless 4-cycle: s_tran(3)=1, s_tran(4)=0", 1.0, four_cycle_visibility},
      {3, "random 3-item tournaments average s_tran(3)=0.75 +/- 0.02", 10.0, random_tournament_transitivity},
      {4, "sampled transitivity within 0.05 of exhaustive", 30.0, sampling_fidelity},
      {5, "simulated-comparator extremes are exact", 5.0, simulated_extremes},
      {6, "augmented data: s_tran=1, s_comm=1, negation doubles exactly", 5.0, augmentation_consistency},
      {7, "win-loss round trip reproduces complete strict orders", 5.0, win_loss_round_trip},
      {8, "label perturbation flips exactly the rounded fraction, per seed", 5.0, perturbation_determinism},
      {9, "merge-sort ranking: spearman 1.0 and call bounds on N=8,16", 10.0, pairs_fidelity_and_cost},
      {10, "calibration gain grows with positional bias", 60.0, calibration_benefit},
      {11, "fair-coin self-agreement matches the binomial expectation", 10.0, self_agreement_bounds},
      {12, "spearman matches the rank-formula oracle to 1e-12", 1.0, spearman_correctness},
  };

  int failed = 0;
  double total = 0.0;
  for (auto& criterion : criteria) {
    bool ok = true;
    std::ostringstream detail;
    Check check{ok, detail};
    auto start = std::chrono::steady_clock::now();
    try {
      criterion.fn(check, detail);
    } catch (const std::exception& e) {
      check.fail(std::string("exception: ") + e.what());
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    total += elapsed;
    if (elapsed > criterion.budget_seconds)
      check.fail("runtime " + std::to_string(elapsed) + "s exceeded budget");
    if (!ok) ++failed;
    std::printf("[%2d] %s  %-62s (%.2fs) %s\n", criterion.id, ok ? "PASS" : "FAIL", criterion.name,
                elapsed, detail.str().c_str());
  }
  std::printf("acceptance: %d/%zu criteria passed in %.1fs\n", static_cast<int>(criteria.size()) - failed,
              criteria.size(), total);
  return failed == 0 ? 0 : 1;
}
