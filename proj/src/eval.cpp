#include "netinf/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "netinf/error.hpp"
#include "netinf/rng.hpp"

namespace netinf::eval {

TopologyScore score_topology(const DsfStructure& truth, const DsfStructure& inferred) {
  if (truth.q_adj.rows() != inferred.q_adj.rows() || truth.q_adj.cols() != inferred.q_adj.cols() ||
      truth.p_adj.rows() != inferred.p_adj.rows() || truth.p_adj.cols() != inferred.p_adj.cols())
    throw UsageError("score_topology: truth and inferred structures differ in shape");
  TopologyScore s;
  s.true_links = truth.link_count();
  s.inferred_links = inferred.link_count();
  s.true_positives = static_cast<int>((truth.q_adj.array() && inferred.q_adj.array()).count() +
                                      (truth.p_adj.array() && inferred.p_adj.array()).count());
  s.tpr = s.true_links > 0 ? static_cast<double>(s.true_positives) / s.true_links : 1.0;
  s.prec = s.inferred_links > 0 ? static_cast<double>(s.true_positives) / s.inferred_links : 1.0;
  return s;
}

std::vector<double> fitness(const Eigen::MatrixXd& y, const Eigen::MatrixXd& predicted, int first) {
  if (y.rows() != predicted.rows() || y.cols() != predicted.cols())
    throw UsageError("fitness: measured and predicted series differ in shape");
  if (first < 0 || first >= y.cols()) throw UsageError("fitness: empty evaluation window");
  const auto len = y.cols() - first;
  std::vector<double> out(y.rows());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const auto yi = y.row(i).tail(len);
    const double denom = (yi.array() - yi.mean()).matrix().norm();
    if (!(denom > 0.0)) {
      out[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    out[i] = 100.0 * (1.0 - (yi - predicted.row(i).tail(len)).norm() / denom);
  }
  return out;
}

double mean_finite(std::span<const double> values) {
  double sum = 0.0;
  int n = 0;
  for (double v : values)
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

double median_finite(std::vector<double> values) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string to_string(TopologyKind k) { return k == TopologyKind::kRandom ? "random" : "ring"; }

TopologyKind parse_topology(const std::string& text) {
  if (text == "random") return TopologyKind::kRandom;
  if (text == "ring") return TopologyKind::kRing;
  throw ParameterError("--topology must be random or ring, got '" + text + "'");
}

void BenchmarkConfig::validate() const {
  if (trials < 0) throw ParameterError("--trials must be >= 0");
  if (snrs.empty() || lengths.empty() || methods.empty())
    throw ParameterError("benchmark grid needs at least one SNR, length and method");
  for (int n : lengths)
    if (n <= inference.trunc) throw ParameterError("every data length must exceed --trunc");
  if (validation_points <= inference.trunc)
    throw ParameterError("validation length must exceed --trunc");
  if (topology == TopologyKind::kRandom) {
    if (observed < 1 || observed > nodes) throw ParameterError("need 1 <= observed <= nodes");
    if (!(density > 0.0 && density <= 1.0)) throw ParameterError("--density must be in (0,1]");
  } else {
    if (observed < 3) throw ParameterError("ring networks need at least 3 observed nodes");
    if (ring_hidden < 0) throw ParameterError("ring hidden count must be >= 0");
  }
  inference.validate();
}

std::vector<Condition> BenchmarkConfig::conditions() const {
  std::vector<Condition> out;
  for (const auto& snr : snrs)
    for (int n : lengths)
      for (Method m : methods) out.push_back({topology, snr, n, m});
  return out;
}

BenchmarkConfig preset(const std::string& suite) {
  BenchmarkConfig c;
  c.suite = suite;
  if (suite == "table1") {
    c.snrs = {SnrSetting::no_noise()};
    c.lengths = {45, 65, 85};
  } else if (suite == "table2") {
    c.snrs = {SnrSetting::finite(10.0)};
    c.lengths = {100, 200, 300};
  } else if (suite == "table3") {
    c.snrs = {SnrSetting::no_input()};
    c.lengths = {300, 500, 1000};
  } else if (suite == "table4") {
    c.topology = TopologyKind::kRing;
    c.snrs = {SnrSetting::finite(10.0)};
    c.lengths = {100, 200, 300, 400};
  } else if (suite != "custom") {
    throw ParameterError("unknown suite '" + suite + "' (table1..table4 or custom)");
  }
  return c;
}

TrialResult run_trial(const BenchmarkConfig& config, const Condition& condition, int trial) {
  TrialResult r;
  r.condition = condition;
  r.trial = trial;
  r.seed = derive_seed(config.seed, static_cast<std::uint64_t>(trial));
  const auto start = std::chrono::steady_clock::now();
  try {
    const StateSpaceModel model =
        condition.topology == TopologyKind::kRandom
            ? generate_random_network(config.nodes, config.observed, config.density,
                                      derive_seed(r.seed, 1), config.hidden_noise)
            : generate_ring_network(config.observed, config.ring_hidden, derive_seed(r.seed, 1));
    DsfStructure truth = derive_dsf_structure(model);
    const std::vector<Experiment> train{
        simulate(model, condition.n_points, condition.snr, derive_seed(r.seed, 2))};
    const Experiment valid =
        simulate(model, config.validation_points, condition.snr, derive_seed(r.seed, 3));

    InferenceConfig inf = config.inference;
    inf.method = condition.method;
    inf.vi.seed = derive_seed(r.seed, 4);
    if (condition.snr.kind == SnrKind::kNoInput) {
      // No input is applied, so input links are neither scored nor searched.
      inf.include_inputs = false;
      truth.p_adj.setConstant(false);
    }
    const InferredNetwork net = infer_network_serial(train, inf);
    r.score = score_topology(truth, net.structure());
    r.fitness_per_node = fitness(valid.y, predict_network(net, valid), inf.trunc);
    r.mean_fitness = mean_finite(r.fitness_per_node);
    r.ok = net.unresolved() == 0;
    if (!r.ok) r.error = std::to_string(net.unresolved()) + " node(s) unresolved";
  } catch (const Error& e) {
    r.ok = false;
    r.error = e.what();
  }
  r.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

namespace {

double standard_error(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

std::vector<CellSummary> summarize(const BenchmarkConfig& config,
                                   std::span<const TrialResult> trials) {
  std::vector<CellSummary> cells;
  for (const auto& cond : config.conditions()) {
    CellSummary c;
    c.condition = cond;
    std::vector<double> tpr, prec, fit;
    for (const auto& t : trials) {
      if (t.condition.n_points != cond.n_points || t.condition.method != cond.method ||
          !(t.condition.snr == cond.snr) || t.condition.topology != cond.topology)
        continue;
      ++c.trials;
      if (!t.ok) {
        ++c.failures;
        continue;
      }
      tpr.push_back(t.score.tpr);
      prec.push_back(t.score.prec);
      fit.push_back(t.mean_fitness);
    }
    if (!tpr.empty()) {
      c.mean_tpr = std::accumulate(tpr.begin(), tpr.end(), 0.0) / static_cast<double>(tpr.size());
      c.mean_prec =
          std::accumulate(prec.begin(), prec.end(), 0.0) / static_cast<double>(prec.size());
      c.se_tpr = standard_error(tpr, c.mean_tpr);
      c.se_prec = standard_error(prec, c.mean_prec);
      c.mean_fitness = mean_finite(fit);
      c.median_fitness = median_finite(fit);
    }
    cells.push_back(c);
  }
  return cells;
}

namespace {

BenchmarkResult run(const BenchmarkConfig& config, bool parallel) {
  config.validate();
  const auto conds = config.conditions();
  const int jobs = static_cast<int>(conds.size()) * config.trials;
  BenchmarkResult res;
  res.trials.resize(jobs);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int j = 0; j < jobs; ++j)
    res.trials[j] = run_trial(config, conds[j / config.trials], j % config.trials);
  res.cells = summarize(config, res.trials);
  return res;
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& config) { return run(config, true); }

BenchmarkResult run_benchmark_serial(const BenchmarkConfig& config) { return run(config, false); }

}  // namespace netinf::eval
