#pragma once

// Backward selection of each node's predictor groups and assembly of the
// inferred network.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "netinf/keb.hpp"
#include "netinf/netsim.hpp"
#include "netinf/problem.hpp"
#include "netinf/vi.hpp"

namespace netinf {

enum class Method { kVi, kKeb };

std::string method_tag(Method m);  // "vi" / "keb-tc"
Method parse_method(const std::string& text);

struct InferenceConfig {
  int trunc = 20;
  Method method = Method::kVi;
  vi::ViConfig vi;
  keb::KebConfig keb;
  bool include_inputs = true;
  double tie_tolerance = 1e-9;  // relative; equal scores go to the sparser structure

  void validate() const;
};

struct Candidate {
  ModelStructure structure;
  std::vector<GroupId> removed;  // cumulative, relative to the full structure
  double score = 0.0;            // lower bound (vi) or log marginal likelihood (keb)
  bool failed = false;
  std::string error;
  int iterations = 0;
  bool converged = false;
};

struct SelectionTrace {
  int target = 0;
  std::vector<GroupId> ranking;     // ascending confidence in the full model
  std::vector<double> confidences;  // aligned with ranking
  std::vector<Candidate> candidates;
  int chosen = -1;
  /// Chosen candidate's blocks and per-experiment impulse responses.
  std::vector<GroupId> blocks;
  std::vector<Eigen::VectorXd> w_hat;
};

/// Removal order for the given confidences: ascending, ties by position.
std::vector<int> ascending_order(std::span<const double> confidences);

/// Index of the best score; within `tie_tolerance` the later (sparser)
/// candidate wins. Failed candidates never win unless all failed (-1).
int choose_candidate(std::span<const Candidate> candidates, double tie_tolerance);

/// Score and impulse responses of one structure.
struct Fit {
  double score = 0.0;
  std::vector<Eigen::VectorXd> w_hat;
  std::vector<GroupId> selected;  // groups kept (keb may prune)
  int iterations = 0;
  bool converged = false;
};

Fit fit_structure(const RegressionProblem& problem, const InferenceConfig& config,
                  std::uint64_t seed);

SelectionTrace backward_select(std::span<const Experiment> experiments, int target,
                               const InferenceConfig& config);

struct LinkEstimate {
  GroupId source;
  int target = 0;
  double confidence = 0.0;  // sum over experiments of ||h||
  Eigen::VectorXd impulse;  // mean over experiments
};

struct NodeResult {
  int target = 0;
  bool resolved = false;
  std::string error;
  SelectionTrace trace;
};

struct InferredNetwork {
  Adjacency q_adj;
  Adjacency p_adj;
  std::vector<LinkEstimate> links;
  std::vector<NodeResult> nodes;
  std::string method;
  int trunc = 0;

  DsfStructure structure() const { return {q_adj, p_adj}; }
  int unresolved() const;
};

/// Per-node searches run in parallel (OpenMP); results do not depend on the
/// thread count.
InferredNetwork infer_network(std::span<const Experiment> experiments,
                              const InferenceConfig& config);
InferredNetwork infer_network_serial(std::span<const Experiment> experiments,
                                     const InferenceConfig& config);

/// One-step-ahead prediction of every observed node on new data using the
/// chosen structures; columns before T+1 are left at zero. Returns p x N.
Eigen::MatrixXd predict_network(const InferredNetwork& net, const Experiment& data);

}  // namespace netinf
