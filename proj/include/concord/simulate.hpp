#pragma once
// Synthetic dataset generation: instances with a known gold ranking and
// pairwise annotations sampled from it, optionally sparsified and
// label-flipped. Useful for pipeline experiments where ground truth must
// be known exactly.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "concord/core.hpp"
#include "concord/rng.hpp"

namespace concord {

struct SimulateOptions {
  int instances = 10;
  int items = 8;
  double density = 1.0;  // probability each unordered pair gets annotated
  double noise = 0.0;    // probability an annotation's winner is flipped
  uint64_t seed = 42;
};

inline void validate(const SimulateOptions& o) {
  if (o.instances < 1) throw InvalidInputError("simulate: instances must be >= 1");
  if (o.items < 2) throw InvalidInputError("simulate: items must be >= 2");
  if (o.density < 0.0 || o.density > 1.0) throw InvalidInputError("simulate: density must be in [0,1]");
  if (o.noise < 0.0 || o.noise > 1.0) throw InvalidInputError("simulate: noise must be in [0,1]");
}

inline std::vector<Instance> generate_dataset(const SimulateOptions& opts) {
  validate(opts);
  Rng rng(opts.seed);
  std::vector<Instance> dataset;
  dataset.reserve(static_cast<std::size_t>(opts.instances));

  for (int i = 0; i < opts.instances; ++i) {
    Instance inst;
    inst.instance_id = "sim-" + std::to_string(i + 1);
    inst.context = "Synthetic comparison task #" + std::to_string(i + 1) + ".";
    inst.relation.name = "preference";
    inst.relation.statement = "the first candidate is preferable to the second candidate";
    inst.relation.negated_statement = "the first candidate is not preferable to the second candidate";

    for (int k = 0; k < opts.items; ++k) {
      Item item;
      item.id = "i" + std::to_string(i + 1) + "_x" + std::to_string(k + 1);
      item.text = "Candidate " + std::to_string(k + 1) + " of instance " + std::to_string(i + 1) + ".";
      inst.items.push_back(std::move(item));
    }

    std::vector<std::string> gold;
    for (const auto& it : inst.items) gold.push_back(it.id);
    rng.shuffle(gold);
    inst.gold_ranking = gold;

    std::map<std::string, int> rank;
    for (std::size_t p = 0; p < gold.size(); ++p) rank[gold[p]] = static_cast<int>(p);

    for (int a = 0; a < opts.items; ++a) {
      for (int b = a + 1; b < opts.items; ++b) {
        if (!rng.bernoulli(opts.density)) continue;
        PairwiseAnnotation ann;
        ann.first = inst.items[static_cast<std::size_t>(a)].id;
        ann.second = inst.items[static_cast<std::size_t>(b)].id;
        bool first_wins = rank[ann.first] < rank[ann.second];
        if (rng.bernoulli(opts.noise)) first_wins = !first_wins;
        ann.winner = first_wins ? ann.first : ann.second;
        inst.annotations.push_back(std::move(ann));
      }
    }
    dataset.push_back(std::move(inst));
  }
  return dataset;
}

}  // namespace concord
