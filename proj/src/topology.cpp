#include "netinf/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "netinf/error.hpp"
#include "netinf/rng.hpp"

namespace netinf {

std::string method_tag(Method m) { return m == Method::kVi ? "vi" : "keb-tc"; }

Method parse_method(const std::string& text) {
  if (text == "vi") return Method::kVi;
  if (text == "keb" || text == "keb-tc") return Method::kKeb;
  throw ParameterError("unknown method '" + text + "' (expected vi or keb)");
}

void InferenceConfig::validate() const {
  if (trunc < 1) throw ParameterError("trunc must be >= 1");
  if (!(tie_tolerance >= 0)) throw ParameterError("tie tolerance must be >= 0");
  if (method == Method::kVi)
    vi.validate();
  else
    keb.validate();
}

std::vector<int> ascending_order(std::span<const double> confidences) {
  std::vector<int> order(confidences.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return confidences[a] < confidences[b]; });
  return order;
}

int choose_candidate(std::span<const Candidate> candidates, double tie_tolerance) {
  int best = -1;
  for (int c = 0; c < static_cast<int>(candidates.size()); ++c) {
    if (candidates[c].failed) continue;
    if (best < 0) {
      best = c;
      continue;
    }
    const double ref = candidates[best].score;
    const double slack = tie_tolerance * std::abs(ref);
    const bool sparser = candidates[c].structure.link_group_count() <
                         candidates[best].structure.link_group_count();
    if (candidates[c].score > ref + slack || (sparser && candidates[c].score >= ref - slack))
      best = c;
  }
  return best;
}

Fit fit_structure(const RegressionProblem& problem, const InferenceConfig& config,
                  std::uint64_t seed) {
  Fit fit;
  if (config.method == Method::kVi) {
    vi::ViConfig cfg = config.vi;
    cfg.seed = seed;
    vi::ViResult r = vi::run_vi(problem, cfg);
    fit.score = r.lower_bound;
    fit.w_hat = std::move(r.w_hat);
    fit.selected = problem.structure.active_groups;
    fit.iterations = r.iterations;
    fit.converged = r.converged;
  } else {
    keb::KebResult r = keb::run_keb(problem, config.keb);
    fit.score = -0.5 * r.objective;
    fit.w_hat = std::move(r.w_hat);
    fit.selected = r.selected.active_groups;
    fit.iterations = r.iterations;
    fit.converged = r.iterations < config.keb.max_iter;
  }
  return fit;
}

SelectionTrace backward_select(std::span<const Experiment> experiments, int target,
                               const InferenceConfig& config) {
  config.validate();
  if (experiments.empty()) throw UsageError("backward selection needs at least one experiment");
  const int p = experiments.front().observed();
  const int m = config.include_inputs ? experiments.front().inputs() : 0;
  if (target < 0 || target >= p) throw UsageError("target node out of range");

  const ModelStructure full = ModelStructure::full(target, p, m);
  const RegressionProblem base = assemble(experiments, full, config.trunc);

  SelectionTrace trace;
  trace.target = target;
  std::vector<Fit> fits;

  auto evaluate = [&](const ModelStructure& s, std::vector<GroupId> removed) {
    Candidate c;
    c.structure = s;
    c.removed = std::move(removed);
    const auto index = static_cast<std::uint64_t>(trace.candidates.size());
    Fit fit;
    try {
      fit = fit_structure(base.restrict(s), config,
                          derive_seed(config.vi.seed, {static_cast<std::uint64_t>(target), index}));
      c.score = fit.score;
      c.iterations = fit.iterations;
      c.converged = fit.converged;
      if (!std::isfinite(c.score)) throw NumericalError("non-finite score");
    } catch (const NumericalError& e) {
      c.failed = true;
      c.error = e.what();
      c.score = -std::numeric_limits<double>::infinity();
    }
    trace.candidates.push_back(std::move(c));
    fits.push_back(std::move(fit));
  };

  evaluate(full, {});
  const int groups = full.link_group_count();
  if (!trace.candidates.front().failed && groups > 0) {
    std::vector<double> conf(groups);
    for (int g = 0; g < groups; ++g)
      conf[g] = vi::group_confidence(base, fits.front().w_hat, g + (full.include_self ? 1 : 0));
    for (int idx : ascending_order(conf)) {
      trace.ranking.push_back(full.active_groups[idx]);
      trace.confidences.push_back(conf[idx]);
    }
    // Remove a growing prefix of the ranking; the last step is the empty model.
    for (int k = 1; k <= groups; ++k) {
      std::vector<GroupId> removed(trace.ranking.begin(), trace.ranking.begin() + k);
      evaluate(full.without(removed), removed);
    }
  } else if (trace.candidates.front().failed) {
    // Without a full-model fit there is no ranking; fall back to the empty model.
    std::vector<GroupId> removed = full.active_groups;
    evaluate(full.without(removed), removed);
  }

  trace.chosen = choose_candidate(trace.candidates, config.tie_tolerance);
  if (trace.chosen < 0) throw NumericalError("node " + std::to_string(target) +
                                             ": every candidate structure failed");
  const Fit& best = fits[trace.chosen];
  Candidate& chosen = trace.candidates[trace.chosen];
  // keb can prune groups inside the chosen structure; their blocks are dropped.
  const auto fitted_blocks = chosen.structure.blocks();
  chosen.structure.active_groups = best.selected;
  trace.blocks = chosen.structure.blocks();
  const int t = config.trunc;
  for (const auto& w : best.w_hat) {
    Eigen::VectorXd kept(static_cast<Eigen::Index>(trace.blocks.size()) * t);
    for (std::size_t b = 0; b < trace.blocks.size(); ++b) {
      const auto pos = std::find(fitted_blocks.begin(), fitted_blocks.end(), trace.blocks[b]) -
                       fitted_blocks.begin();
      kept.segment(static_cast<Eigen::Index>(b) * t, t) = w.segment(pos * t, t);
    }
    trace.w_hat.push_back(std::move(kept));
  }
  return trace;
}

int InferredNetwork::unresolved() const {
  return static_cast<int>(
      std::count_if(nodes.begin(), nodes.end(), [](const NodeResult& n) { return !n.resolved; }));
}

namespace {

NodeResult infer_node(std::span<const Experiment> experiments, int target,
                      const InferenceConfig& config) {
  NodeResult node;
  node.target = target;
  try {
    node.trace = backward_select(experiments, target, config);
    node.resolved = true;
  } catch (const NumericalError& e) {
    node.error = e.what();
  }
  return node;
}

InferredNetwork collect(std::vector<NodeResult> nodes, int p, int m, const InferenceConfig& config) {
  InferredNetwork net;
  net.method = method_tag(config.method);
  net.trunc = config.trunc;
  net.q_adj = Adjacency::Constant(p, p, false);
  net.p_adj = Adjacency::Constant(p, m, false);
  for (const auto& node : nodes) {
    if (!node.resolved) continue;
    const auto& tr = node.trace;
    for (std::size_t b = 0; b < tr.blocks.size(); ++b) {
      const GroupId g = tr.blocks[b];
      if (g == GroupId::node(tr.target)) continue;
      LinkEstimate link;
      link.source = g;
      link.target = tr.target;
      link.impulse = Eigen::VectorXd::Zero(config.trunc);
      for (const auto& w : tr.w_hat) {
        const auto seg = w.segment(static_cast<Eigen::Index>(b) * config.trunc, config.trunc);
        link.confidence += seg.norm();
        link.impulse += seg;
      }
      link.impulse /= static_cast<double>(tr.w_hat.size());
      if (g.kind == GroupKind::kNode)
        net.q_adj(tr.target, g.index) = true;
      else
        net.p_adj(tr.target, g.index) = true;
      net.links.push_back(std::move(link));
    }
  }
  net.nodes = std::move(nodes);
  return net;
}

void check_experiments(std::span<const Experiment> experiments) {
  if (experiments.empty()) throw UsageError("inference needs at least one experiment");
  for (const auto& e : experiments) {
    e.validate();
    if (e.observed() != experiments.front().observed() ||
        e.inputs() != experiments.front().inputs())
      throw UsageError("experiments disagree on node or input counts");
  }
}

}  // namespace

InferredNetwork infer_network(std::span<const Experiment> experiments,
                              const InferenceConfig& config) {
  config.validate();
  check_experiments(experiments);
  const int p = experiments.front().observed();
  std::vector<NodeResult> nodes(p);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < p; ++i) nodes[i] = infer_node(experiments, i, config);
  return collect(std::move(nodes), p, experiments.front().inputs(), config);
}

InferredNetwork infer_network_serial(std::span<const Experiment> experiments,
                                     const InferenceConfig& config) {
  config.validate();
  check_experiments(experiments);
  const int p = experiments.front().observed();
  std::vector<NodeResult> nodes;
  for (int i = 0; i < p; ++i) nodes.push_back(infer_node(experiments, i, config));
  return collect(std::move(nodes), p, experiments.front().inputs(), config);
}

Eigen::MatrixXd predict_network(const InferredNetwork& net, const Experiment& data) {
  const int p = data.observed();
  if (static_cast<int>(net.nodes.size()) != p) throw UsageError("prediction: node count mismatch");
  const int t = net.trunc;
  if (data.n_points() <= t) throw InsufficientDataError("prediction: N <= truncation length");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, data.n_points());
  for (const auto& node : net.nodes) {
    if (!node.resolved) continue;
    const auto& tr = node.trace;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(tr.blocks.size()) * t);
    for (const auto& wq : tr.w_hat) w += wq;
    w /= static_cast<double>(tr.w_hat.size());
    for (int time = t; time < data.n_points(); ++time) {
      double acc = 0.0;
      for (std::size_t b = 0; b < tr.blocks.size(); ++b) {
        const GroupId g = tr.blocks[b];
        const Eigen::MatrixXd& src = g.kind == GroupKind::kNode ? data.y : data.u;
        if (g.index >= src.rows()) throw UsageError("prediction: group " + g.label() + " missing");
        for (int k = 1; k <= t; ++k)
          acc += w(static_cast<Eigen::Index>(b) * t + k - 1) * src(g.index, time - k);
      }
      out(tr.target, time) = acc;
    }
  }
  return out;
}

}  // namespace netinf
