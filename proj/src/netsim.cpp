#include "netinf/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "netinf/error.hpp"
#include "netinf/rng.hpp"

namespace netinf {

void StateSpaceModel::validate() const {
  const int n = nodes();
  if (a.cols() != n) throw UsageError("model: A must be square");
  if (observed < 1 || observed > n) throw UsageError("model: observed count must be in [1, n]");
  if (b_u.rows() != n) throw UsageError("model: B_u row count must equal n");
  if (b_e.rows() != n) throw UsageError("model: B_e row count must equal n");
}

int DsfStructure::link_count() const {
  return static_cast<int>(q_adj.count() + p_adj.count());
}

SnrSetting SnrSetting::parse(const std::string& text) {
  if (text == "none" || text == "no-noise") return no_noise();
  if (text == "pure-noise" || text == "no-input") return no_input();
  std::size_t used = 0;
  double db = 0.0;
  try {
    db = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !std::isfinite(db))
    throw ParameterError("--snr must be a number, 'none' or 'pure-noise', got '" + text + "'");
  return finite(db);
}

std::string SnrSetting::to_string() const {
  switch (kind) {
    case SnrKind::kNoNoise:
      return "none";
    case SnrKind::kNoInput:
      return "pure-noise";
    case SnrKind::kFinite: {
      std::ostringstream os;
      os << db;
      return os.str();
    }
  }
  return "none";
}

double SnrSetting::input_variance() const { return kind == SnrKind::kNoInput ? 0.0 : 1.0; }

double SnrSetting::noise_variance() const {
  switch (kind) {
    case SnrKind::kNoNoise:
      return 0.0;
    case SnrKind::kNoInput:
      return 1.0;
    case SnrKind::kFinite:
      return std::pow(10.0, -db / 10.0);
  }
  return 0.0;
}

void Experiment::validate() const {
  if (y.cols() != u.cols()) throw UsageError("experiment: y and u must share the time length");
}

double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

// Reflexive-transitive closure of the hidden-to-hidden influence graph:
// reach(b, a) is true when hidden state a can influence hidden state b.
Adjacency hidden_reachability(const Eigen::MatrixXd& a22) {
  const auto h = a22.rows();
  Adjacency reach = Adjacency::Identity(h, h);
  for (Eigen::Index b = 0; b < h; ++b)
    for (Eigen::Index a = 0; a < h; ++a)
      if (a22(b, a) != 0.0) reach(b, a) = true;
  for (Eigen::Index k = 0; k < h; ++k)
    for (Eigen::Index b = 0; b < h; ++b)
      if (reach(b, k))
        for (Eigen::Index a = 0; a < h; ++a)
          if (reach(k, a)) reach(b, a) = true;
  return reach;
}

bool has_isolated_observed(const DsfStructure& s) {
  for (int i = 0; i < s.observed(); ++i)
    if (!s.q_adj.row(i).any() && !s.q_adj.col(i).any()) return true;
  return false;
}

}  // namespace

DsfStructure derive_dsf_structure(const StateSpaceModel& model) {
  model.validate();
  const int p = model.observed;
  const int h = model.hidden();
  const int m = model.inputs();
  const auto a11 = model.a.topLeftCorner(p, p);
  const auto a12 = model.a.topRightCorner(p, h);
  const auto a21 = model.a.bottomLeftCorner(h, p);
  const Eigen::MatrixXd a22 = model.a.bottomRightCorner(h, h);
  const auto bu1 = model.b_u.topRows(p);
  const auto bu2 = model.b_u.bottomRows(h);
  const Adjacency reach = hidden_reachability(a22);

  // Observed node i reaches hidden a through A12 and closure: exits(i, a).
  Adjacency exits = Adjacency::Constant(p, h, false);
  for (int i = 0; i < p; ++i)
    for (int b = 0; b < h; ++b)
      if (a12(i, b) != 0.0)
        for (int a = 0; a < h; ++a)
          if (reach(b, a)) exits(i, a) = true;

  DsfStructure s;
  s.q_adj = Adjacency::Constant(p, p, false);
  s.p_adj = Adjacency::Constant(p, m, false);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (i == j) continue;
      bool link = a11(i, j) != 0.0;
      for (int a = 0; a < h && !link; ++a) link = a21(a, j) != 0.0 && exits(i, a);
      s.q_adj(i, j) = link;
    }
    for (int k = 0; k < m; ++k) {
      bool link = bu1(i, k) != 0.0;
      for (int a = 0; a < h && !link; ++a) link = bu2(a, k) != 0.0 && exits(i, a);
      s.p_adj(i, k) = link;
    }
  }
  return s;
}

StateSpaceModel generate_random_network(int nodes, int observed, double density,
                                        std::uint64_t seed, bool hidden_noise, int max_attempts) {
  if (nodes < 1) throw ParameterError("--nodes must be >= 1");
  if (observed < 1 || observed > nodes) throw ParameterError("--observed must be in [1, nodes]");
  if (!(density > 0.0 && density <= 1.0)) throw ParameterError("--density must be in (0,1]");

  const int cells = nodes * nodes;
  const int nnz = std::clamp(static_cast<int>(std::lround(density * cells)), 1, cells);
  std::mt19937_64 rng(derive_seed(seed, 0x5EED));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<int> positions(cells);

  StateSpaceModel model;
  model.observed = observed;
  model.topology = "random";
  model.seed = seed;
  model.density = density;
  model.b_u = Eigen::MatrixXd::Zero(nodes, observed);
  model.b_u.topRows(observed).setIdentity();
  model.b_e = Eigen::MatrixXd::Identity(nodes, nodes);
  if (!hidden_noise) model.b_e = model.b_e.leftCols(observed).eval();

  int unstable = 0;
  int isolated = 0;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::iota(positions.begin(), positions.end(), 0);
    // Partial Fisher-Yates: the first nnz entries become a uniform subset.
    for (int k = 0; k < nnz; ++k) {
      std::uniform_int_distribution<int> pick(k, cells - 1);
      std::swap(positions[k], positions[pick(rng)]);
    }
    model.a = Eigen::MatrixXd::Zero(nodes, nodes);
    for (int k = 0; k < nnz; ++k) model.a(positions[k] / nodes, positions[k] % nodes) = normal(rng);

    if (spectral_radius(model.a) >= 1.0) {
      ++unstable;
      continue;
    }
    // A single observed node has no possible links; only stability applies.
    if (observed > 1 && has_isolated_observed(derive_dsf_structure(model))) {
      ++isolated;
      continue;
    }
    return model;
  }
  std::ostringstream msg;
  msg << "random network generation failed after " << max_attempts << " attempts ("
      << unstable << " unstable: spectral radius >= 1, " << isolated
      << " with an isolated observed node)";
  throw GenerationError(msg.str());
}

StateSpaceModel generate_ring_network(int observed, int hidden, std::uint64_t seed,
                                      int input_node, int max_attempts) {
  if (observed < 3) throw ParameterError("ring network needs at least 3 observed nodes");
  if (hidden < 0 || hidden > observed)
    throw ParameterError("ring network: hidden count must be in [0, observed]");
  if (input_node < 0 || input_node >= observed)
    throw ParameterError("ring network: input node out of range");

  const int n = observed + hidden;
  // Cycle edge j -> j+1 carries hidden node via_hidden[j] (or -1).
  std::vector<int> via_hidden(observed, -1);
  for (int k = 0; k < hidden; ++k) via_hidden[(k * observed) / hidden] = observed + k;

  std::mt19937_64 rng(derive_seed(seed, 0x219));
  std::uniform_real_distribution<double> self_loop(0.2, 0.5);
  std::uniform_real_distribution<double> gain(0.5, 1.0);
  std::bernoulli_distribution flip(0.5);
  auto signed_gain = [&] { return flip(rng) ? -gain(rng) : gain(rng); };

  StateSpaceModel model;
  model.observed = observed;
  model.topology = "ring";
  model.seed = seed;
  model.b_u = Eigen::MatrixXd::Zero(n, 1);
  model.b_u(input_node, 0) = 1.0;
  model.b_e = Eigen::MatrixXd::Identity(n, n);

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    model.a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) model.a(i, i) = self_loop(rng);
    for (int j = 0; j < observed; ++j) {
      const int next = (j + 1) % observed;
      if (via_hidden[j] >= 0) {
        model.a(via_hidden[j], j) = signed_gain();
        model.a(next, via_hidden[j]) = signed_gain();
      } else {
        model.a(next, j) = signed_gain();
      }
    }
    if (spectral_radius(model.a) < 1.0) return model;
  }
  throw GenerationError("ring network generation failed: spectral radius >= 1 on every attempt");
}

Experiment simulate(const StateSpaceModel& model, int n_points, SnrSetting snr,
                    std::uint64_t seed) {
  model.validate();
  if (n_points < 1) throw ParameterError("--points must be >= 1");
  const int n = model.nodes();
  const int m = model.inputs();
  const int q = model.noise_channels();
  const double su = std::sqrt(snr.input_variance());
  const double se = std::sqrt(snr.noise_variance());

  Experiment ex;
  ex.snr = snr;
  ex.seed = seed;
  ex.u = Eigen::MatrixXd::Zero(m, n_points);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(q, n_points);
  {
    std::mt19937_64 rng(derive_seed(seed, 1));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = 0; t < n_points; ++t)
      for (int k = 0; k < m; ++k) ex.u(k, t) = su * normal(rng);
  }
  {
    std::mt19937_64 rng(derive_seed(seed, 2));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = 0; t < n_points; ++t)
      for (int k = 0; k < q; ++k) e(k, t) = se * normal(rng);
  }

  ex.y.resize(model.observed, n_points);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < n_points; ++t) {
    ex.y.col(t) = x.head(model.observed);
    x = model.a * x + model.b_u * ex.u.col(t) + model.b_e * e.col(t);
  }
  return ex;
}

}  // namespace netinf
