#pragma once

// Per-target regression data for the truncated non-parametric predictor
//
//   y_i(t) = sum_g sum_{k=1..T} h_g(k) s_g(t-k) + noise,
//
// where each predictor group g is an observed node's output or an input.
// Rows run in descending time: row 0 is t = N, the last row is t = T+1.

#include <compare>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "netinf/netsim.hpp"

namespace netinf {

enum class GroupKind { kNode = 0, kInput = 1 };

struct GroupId {
  GroupKind kind = GroupKind::kNode;
  int index = 0;

  static GroupId node(int i) { return {GroupKind::kNode, i}; }
  static GroupId input(int i) { return {GroupKind::kInput, i}; }
  /// "y3" or "u2" (0-based index).
  std::string label() const;
  static GroupId parse(const std::string& label);
  auto operator<=>(const GroupId&) const = default;
};

/// Candidate model structure for one target node. The target's own lags
/// (the self group) carry the noise-model dynamics and are kept out of
/// `active_groups`; `include_self` prepends them as the first column block.
struct ModelStructure {
  int target = 0;
  std::vector<GroupId> active_groups;
  bool include_self = true;

  int link_group_count() const { return static_cast<int>(active_groups.size()); }
  /// Column-block order: [self], active_groups...
  std::vector<GroupId> blocks() const;
  bool contains(GroupId g) const;
  ModelStructure without(std::span<const GroupId> removed) const;
  void validate() const;

  /// Every other observed node and (optionally) every input.
  static ModelStructure full(int target, int observed, int inputs, bool include_self = true);
};

struct RegressionBlock {
  Eigen::VectorXd y;       // N - T
  Eigen::MatrixXd phi;     // (N - T) x (T * groups)
  Eigen::MatrixXd gram;    // phi' phi
  Eigen::VectorXd phi_t_y;
  double y_t_y = 0.0;

  int rows() const { return static_cast<int>(y.size()); }
};

struct RegressionProblem {
  ModelStructure structure;
  int trunc = 0;
  std::vector<GroupId> blocks;
  std::vector<RegressionBlock> experiments;

  int group_count() const { return static_cast<int>(blocks.size()); }
  int dim() const { return trunc * group_count(); }
  /// First column of group g's block; throws if g is not present.
  int column_offset(GroupId g) const;
  int total_rows() const;

  /// Same data under a sub-structure: drops the T columns (and Gram rows and
  /// columns) of every removed group without touching anything else.
  RegressionProblem restrict(const ModelStructure& sub) const;
};

RegressionProblem assemble(std::span<const Experiment> experiments,
                           const ModelStructure& structure, int trunc);

/// Phi_q * w_q for each experiment.
std::vector<Eigen::VectorXd> predict_one_step(const RegressionProblem& problem,
                                              std::span<const Eigen::VectorXd> w_hat);

/// One shared impulse-response vector applied to every experiment.
std::vector<Eigen::VectorXd> predict_one_step(const RegressionProblem& problem,
                                              const Eigen::VectorXd& w_hat);

}  // namespace netinf
