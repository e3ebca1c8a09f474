#pragma once

// Link-recovery metrics, held-out prediction fitness and the Monte Carlo
// benchmark harness.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "netinf/netsim.hpp"
#include "netinf/topology.hpp"

namespace netinf::eval {

struct TopologyScore {
  double tpr = 0.0;
  double prec = 1.0;  // 1 when nothing is inferred
  int true_links = 0;
  int inferred_links = 0;
  int true_positives = 0;
};

/// Links of Q and P counted together.
TopologyScore score_topology(const DsfStructure& truth, const DsfStructure& inferred);

/// 100 (1 - ||y - yhat|| / ||y - mean(y)||) per node over columns
/// [first, N). A constant node gives NaN.
std::vector<double> fitness(const Eigen::MatrixXd& y, const Eigen::MatrixXd& predicted,
                            int first = 0);
/// Mean over the finite entries; NaN if there are none.
double mean_finite(std::span<const double> values);
double median_finite(std::vector<double> values);

enum class TopologyKind { kRandom, kRing };
std::string to_string(TopologyKind k);
TopologyKind parse_topology(const std::string& text);

struct Condition {
  TopologyKind topology = TopologyKind::kRandom;
  SnrSetting snr;
  int n_points = 0;
  Method method = Method::kVi;
};

struct BenchmarkConfig {
  std::string suite = "custom";
  TopologyKind topology = TopologyKind::kRandom;
  std::vector<SnrSetting> snrs{SnrSetting::no_noise()};
  std::vector<int> lengths{85};
  std::vector<Method> methods{Method::kVi};
  int trials = 20;
  std::uint64_t seed = 1;
  int nodes = 15;
  int observed = 10;
  double density = 0.15;
  bool hidden_noise = false;  // random networks: noise on hidden states too
  int ring_hidden = 5;
  int validation_points = 200;
  InferenceConfig inference;

  void validate() const;
  std::vector<Condition> conditions() const;
};

/// table1..table4 grids; everything else keeps the defaults above.
BenchmarkConfig preset(const std::string& suite);

struct TrialResult {
  Condition condition;
  int trial = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  TopologyScore score;
  std::vector<double> fitness_per_node;
  double mean_fitness = 0.0;
  double runtime = 0.0;  // seconds; not part of the reproducible output
};

struct CellSummary {
  Condition condition;
  int trials = 0;
  int failures = 0;
  double mean_tpr = 0.0;
  double se_tpr = 0.0;
  double mean_prec = 0.0;
  double se_prec = 0.0;
  double mean_fitness = 0.0;
  double median_fitness = 0.0;
};

struct BenchmarkResult {
  std::vector<TrialResult> trials;  // condition-major, then trial index
  std::vector<CellSummary> cells;
};

/// Network, training data and validation data of one trial. The network and
/// both series depend only on (master seed, trial), so conditions differing
/// only in length or method share them.
TrialResult run_trial(const BenchmarkConfig& config, const Condition& condition, int trial);

std::vector<CellSummary> summarize(const BenchmarkConfig& config,
                                   std::span<const TrialResult> trials);

/// Trials in parallel (OpenMP).
BenchmarkResult run_benchmark(const BenchmarkConfig& config);
BenchmarkResult run_benchmark_serial(const BenchmarkConfig& config);

}  // namespace netinf::eval
