#include "netinf/problem.hpp"

#include <algorithm>
#include <set>

#include "netinf/error.hpp"

namespace netinf {

std::string GroupId::label() const {
  return (kind == GroupKind::kNode ? "y" : "u") + std::to_string(index);
}

GroupId GroupId::parse(const std::string& label) {
  if (label.size() < 2 || (label[0] != 'y' && label[0] != 'u'))
    throw ParameterError("bad group label '" + label + "'");
  std::size_t used = 0;
  const int index = std::stoi(label.substr(1), &used);
  if (used != label.size() - 1 || index < 0) throw ParameterError("bad group label '" + label + "'");
  return {label[0] == 'y' ? GroupKind::kNode : GroupKind::kInput, index};
}

std::vector<GroupId> ModelStructure::blocks() const {
  std::vector<GroupId> out;
  out.reserve(active_groups.size() + 1);
  if (include_self) out.push_back(GroupId::node(target));
  out.insert(out.end(), active_groups.begin(), active_groups.end());
  return out;
}

bool ModelStructure::contains(GroupId g) const {
  return std::find(active_groups.begin(), active_groups.end(), g) != active_groups.end();
}

ModelStructure ModelStructure::without(std::span<const GroupId> removed) const {
  ModelStructure out = *this;
  std::erase_if(out.active_groups, [&](const GroupId& g) {
    return std::find(removed.begin(), removed.end(), g) != removed.end();
  });
  return out;
}

void ModelStructure::validate() const {
  std::set<GroupId> seen;
  for (const auto& g : active_groups) {
    if (g.index < 0) throw UsageError("model structure: negative group index");
    if (g == GroupId::node(target))
      throw UsageError("model structure: target " + g.label() + " listed as its own source");
    if (!seen.insert(g).second) throw UsageError("model structure: duplicate group " + g.label());
  }
}

ModelStructure ModelStructure::full(int target, int observed, int inputs, bool include_self) {
  ModelStructure s;
  s.target = target;
  s.include_self = include_self;
  for (int j = 0; j < observed; ++j)
    if (j != target) s.active_groups.push_back(GroupId::node(j));
  for (int k = 0; k < inputs; ++k) s.active_groups.push_back(GroupId::input(k));
  return s;
}

int RegressionProblem::column_offset(GroupId g) const {
  const auto it = std::find(blocks.begin(), blocks.end(), g);
  if (it == blocks.end()) throw UsageError("group " + g.label() + " not in problem");
  return static_cast<int>(it - blocks.begin()) * trunc;
}

int RegressionProblem::total_rows() const {
  int rows = 0;
  for (const auto& e : experiments) rows += e.rows();
  return rows;
}

namespace {

void fill_statistics(RegressionBlock& b) {
  b.gram.noalias() = b.phi.transpose() * b.phi;
  b.phi_t_y.noalias() = b.phi.transpose() * b.y;
  b.y_t_y = b.y.squaredNorm();
}

}  // namespace

RegressionProblem assemble(std::span<const Experiment> experiments,
                           const ModelStructure& structure, int trunc) {
  if (trunc < 1) throw ParameterError("truncation length must be >= 1");
  structure.validate();
  RegressionProblem prob;
  prob.structure = structure;
  prob.trunc = trunc;
  prob.blocks = structure.blocks();

  for (const auto& ex : experiments) {
    ex.validate();
    const int n = ex.n_points();
    if (n <= trunc) throw InsufficientDataError("experiment has N <= truncation length");
    if (structure.target < 0 || structure.target >= ex.observed())
      throw UsageError("target node out of range");
    const int rows = n - trunc;
    RegressionBlock b;
    b.y.resize(rows);
    b.phi.resize(rows, trunc * static_cast<Eigen::Index>(prob.blocks.size()));
    for (int r = 0; r < rows; ++r) {
      const int t = n - 1 - r;  // 0-based time of this row
      b.y(r) = ex.y(structure.target, t);
      for (std::size_t g = 0; g < prob.blocks.size(); ++g) {
        const GroupId id = prob.blocks[g];
        const Eigen::MatrixXd& src = id.kind == GroupKind::kNode ? ex.y : ex.u;
        if (id.index >= src.rows()) throw UsageError("group " + id.label() + " out of range");
        for (int k = 1; k <= trunc; ++k)
          b.phi(r, static_cast<Eigen::Index>(g) * trunc + k - 1) = src(id.index, t - k);
      }
    }
    fill_statistics(b);
    prob.experiments.push_back(std::move(b));
  }
  return prob;
}

RegressionProblem RegressionProblem::restrict(const ModelStructure& sub) const {
  sub.validate();
  if (sub.target != structure.target) throw UsageError("restrict: target mismatch");
  RegressionProblem out;
  out.structure = sub;
  out.trunc = trunc;
  out.blocks = sub.blocks();
  std::vector<Eigen::Index> cols;
  cols.reserve(out.blocks.size() * trunc);
  for (const auto& g : out.blocks) {
    const int off = column_offset(g);
    for (int k = 0; k < trunc; ++k) cols.push_back(off + k);
  }
  const auto d = static_cast<Eigen::Index>(cols.size());
  for (const auto& e : experiments) {
    RegressionBlock b;
    b.y = e.y;
    b.y_t_y = e.y_t_y;
    b.phi.resize(e.rows(), d);
    b.gram.resize(d, d);
    b.phi_t_y.resize(d);
    for (Eigen::Index c = 0; c < d; ++c) {
      b.phi.col(c) = e.phi.col(cols[c]);
      b.phi_t_y(c) = e.phi_t_y(cols[c]);
      for (Eigen::Index r = 0; r < d; ++r) b.gram(r, c) = e.gram(cols[r], cols[c]);
    }
    out.experiments.push_back(std::move(b));
  }
  return out;
}

std::vector<Eigen::VectorXd> predict_one_step(const RegressionProblem& problem,
                                              std::span<const Eigen::VectorXd> w_hat) {
  if (w_hat.size() != problem.experiments.size())
    throw UsageError("predict_one_step: one impulse-response vector per experiment required");
  std::vector<Eigen::VectorXd> out;
  out.reserve(w_hat.size());
  for (std::size_t q = 0; q < w_hat.size(); ++q) {
    if (w_hat[q].size() != problem.dim())
      throw UsageError("predict_one_step: w_hat length must equal T * groups");
    out.emplace_back(problem.experiments[q].phi * w_hat[q]);
  }
  return out;
}

std::vector<Eigen::VectorXd> predict_one_step(const RegressionProblem& problem,
                                              const Eigen::VectorXd& w_hat) {
  std::vector<Eigen::VectorXd> shared(problem.experiments.size(), w_hat);
  return predict_one_step(problem, shared);
}

}  // namespace netinf
