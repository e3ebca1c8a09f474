#pragma once

// Small seeded data sets shared by the unit tests and the acceptance runner.

#include <cmath>
#include <cstdint>
#include <vector>

#include "netinf/netsim.hpp"
#include "netinf/problem.hpp"
#include "netinf/rng.hpp"
#include "netinf/topology.hpp"

namespace netinf::testing {

/// Full-structure problem for node 0 of a random network with p <= 3
/// observed nodes and T <= 10.
inline RegressionProblem vi_fixture(std::uint64_t seed) {
  const int p = 2 + static_cast<int>(seed % 2);
  const int trunc = 4 + static_cast<int>(seed % 7);
  const auto model = generate_random_network(p + 1, p, 0.4, derive_seed(seed, 11));
  const std::vector<Experiment> ex{
      simulate(model, 40 + trunc, SnrSetting::finite(10.0), derive_seed(seed, 12))};
  return assemble(ex, ModelStructure::full(0, p, p), trunc);
}

struct SelectionFixture {
  StateSpaceModel model;
  std::vector<Experiment> data;
  DsfStructure truth;
};

/// Fully observed 2- or 3-node network with one input per node, noiseless.
inline SelectionFixture selection_fixture(std::uint64_t seed) {
  SelectionFixture f;
  const int n = 2 + static_cast<int>(seed % 2);
  f.model = generate_random_network(n, n, 0.5, derive_seed(seed, 21));
  f.data = {simulate(f.model, 60, SnrSetting::no_noise(), derive_seed(seed, 22))};
  f.truth = derive_dsf_structure(f.model);
  return f;
}

/// Every subset of the candidate groups of `target`, scored with
/// fit_structure; returns the best structure (ties go to fewer groups).
inline ModelStructure exhaustive_best(const std::vector<Experiment>& data, int target,
                                      const InferenceConfig& config, double* best_score = nullptr) {
  const int p = data.front().observed();
  const int m = config.include_inputs ? data.front().inputs() : 0;
  const ModelStructure full = ModelStructure::full(target, p, m);
  const RegressionProblem base = assemble(data, full, config.trunc);
  const int g = full.link_group_count();
  ModelStructure best;
  double best_value = 0.0;
  bool have = false;
  for (unsigned mask = 0; mask < (1u << g); ++mask) {
    ModelStructure s = full;
    s.active_groups.clear();
    for (int k = 0; k < g; ++k)
      if (mask & (1u << k)) s.active_groups.push_back(full.active_groups[k]);
    const double score = fit_structure(base.restrict(s), config, config.vi.seed).score;
    const double slack = config.tie_tolerance * std::abs(best_value);
    if (!have || score > best_value + slack ||
        (s.link_group_count() < best.link_group_count() && score >= best_value - slack)) {
      best = s;
      best_value = score;
      have = true;
    }
  }
  if (best_score) *best_score = best_value;
  return best;
}

inline bool same_groups(const ModelStructure& a, const ModelStructure& b) {
  if (a.link_group_count() != b.link_group_count()) return false;
  for (const auto& g : a.active_groups)
    if (!b.contains(g)) return false;
  return true;
}

}  // namespace netinf::testing
