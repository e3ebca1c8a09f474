#include "netinf/vi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "netinf/error.hpp"
#include "netinf/kernel.hpp"
#include "netinf/quadrature.hpp"
#include "netinf/rng.hpp"

namespace netinf::vi {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kBSigmaFloor = 1e-12;

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Prior precision block of group g: E(lambda_g) U' diag(w) U.
Eigen::MatrixXd prior_precision_block(const GroupFactor& g) {
  return g.e_lambda() * kernel::tridiagonal_from_weights(g.mean_weights);
}

// mu_g' U' diag(w) U mu_g.
double weighted_difference_norm(const Eigen::VectorXd& w, const Eigen::Ref<const Eigen::VectorXd>& mu) {
  const auto t = w.size();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < t; ++j) {
    const double diff = mu(j) - (j + 1 < t ? mu(j + 1) : 0.0);
    acc += w(j) * diff * diff;
  }
  return acc;
}

void solve_primal(const RegressionBlock& data, const std::vector<GroupFactor>& groups, int trunc,
                  ExperimentFactor& out) {
  const auto d = data.gram.rows();
  Eigen::MatrixXd precision = data.gram;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto off = static_cast<Eigen::Index>(g) * trunc;
    precision.block(off, off, trunc, trunc) += prior_precision_block(groups[g]);
  }

  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    const double scale = precision.diagonal().cwiseAbs().mean();
    bool ok = false;
    for (double jitter = 1e-12; jitter <= 1e-4 && !ok; jitter *= 100.0) {
      Eigen::MatrixXd jittered = precision;
      jittered.diagonal().array() += jitter * scale;
      llt.compute(jittered);
      ok = llt.info() == Eigen::Success;
    }
    if (!ok) {
      std::ostringstream msg;
      msg << "posterior precision factorization failed (dim " << d
          << ", min diagonal " << precision.diagonal().minCoeff() << ") after jitter escalation";
      throw NumericalError(msg.str());
    }
  }

  out.mu = llt.solve(data.phi_t_y);
  const Eigen::MatrixXd l_inv =
      llt.matrixL().solve(Eigen::MatrixXd::Identity(d, d));  // Sigma = L^{-T} L^{-1}
  out.log_det_sigma = -2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.sigma_blocks.resize(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto off = static_cast<Eigen::Index>(g) * trunc;
    // Rows of L^{-1} above `off` vanish in these columns.
    const auto cols = l_inv.block(off, off, d - off, trunc);
    out.sigma_blocks[g].noalias() = cols.transpose() * cols;
  }
  const Eigen::MatrixXd proj = llt.matrixL().solve(data.phi.transpose());
  out.trace_phi_sigma_phi = proj.squaredNorm();
}

void solve_dual(const RegressionBlock& data, const std::vector<GroupFactor>& groups, int trunc,
                ExperimentFactor& out) {
  const auto n = static_cast<Eigen::Index>(data.rows());
  const auto d = data.phi.cols();
  // Psi = Phi P^{-1}; P^{-1} is block diagonal with blocks K_hat_g / E(lambda_g).
  Eigen::MatrixXd psi(n, d);
  std::vector<Eigen::MatrixXd> prior_cov(groups.size());
  double log_det_prior_precision = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto off = static_cast<Eigen::Index>(g) * trunc;
    prior_cov[g] = kernel::inverse_of_weighted(groups[g].mean_weights) / groups[g].e_lambda();
    psi.middleCols(off, trunc).noalias() = data.phi.middleCols(off, trunc) * prior_cov[g];
    log_det_prior_precision += trunc * std::log(groups[g].e_lambda()) +
                               groups[g].mean_weights.array().log().sum();
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n);
  c.noalias() += psi * data.phi.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success)
    throw NumericalError("dual system I + Phi P^{-1} Phi' failed to factorize");

  out.mu.noalias() = psi.transpose() * llt.solve(data.y);
  const Eigen::MatrixXd z = llt.matrixL().solve(psi);  // L^{-1} Psi
  out.sigma_blocks.resize(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto off = static_cast<Eigen::Index>(g) * trunc;
    const auto zg = z.middleCols(off, trunc);
    out.sigma_blocks[g] = prior_cov[g];
    out.sigma_blocks[g].noalias() -= zg.transpose() * zg;
  }
  const double log_det_c = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.log_det_sigma = -log_det_prior_precision - log_det_c;
  const Eigen::MatrixXd c_inv_factor =
      llt.matrixL().solve(Eigen::MatrixXd::Identity(n, n));  // ||L^{-1}||_F^2 = tr(C^{-1})
  out.trace_phi_sigma_phi = static_cast<double>(n) - c_inv_factor.squaredNorm();
}

}  // namespace

void ViConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ParameterError(std::string("vi config: ") + what);
  };
  require(a0 > 0 && b0 > 0, "a0 and b0 must be positive");
  require(max_iter >= 1, "max_iter must be >= 1");
  require(tol > 0, "tol must be positive");
  require(n_mh_samples >= 1, "n_mh_samples must be >= 1");
  require(n_burn_in >= 0, "n_burn_in must be >= 0");
  require(proposal_window > 0 && proposal_window < 1, "proposal window must be in (0,1)");
  require(quad_tol > 0, "quad_tol must be positive");
}

double BetaTarget::log_density(double beta) const {
  const double b = kernel::clamp_beta(beta);
  const double lb = std::log(b);
  const double l1b = std::log1p(-b);
  const double t = trunc;
  const double log_det = 0.5 * t * (t + 1.0) * lb + (t - 1.0) * l1b;
  // sum_j W_j stats_j with W_j = r^{j+1} / (1 - beta) for j < T-1 and
  // W_{T-1} = r^T, r = 1/beta; Horner in r.
  const double r = 1.0 / b;
  double head = 0.0;
  for (int j = trunc - 2; j >= 0; --j) head = head * r + std::max(stats(j), 0.0);
  const double quad = head * r / (1.0 - b) + std::max(stats(trunc - 1), 0.0) * std::pow(r, trunc);
  return -0.5 * n_experiments * log_det - 0.5 * e_lambda * quad;
}

double log_proposal_density(double to, double from, double window) {
  double lo = 0.0, hi = 0.0;
  if (from > 0.5 * window && from < 1.0 - 0.5 * window) {
    lo = from - 0.5 * window;
    hi = from + 0.5 * window;
  } else if (from <= 0.5 * window) {
    lo = 0.0;
    hi = window;
  } else {
    lo = 1.0 - window;
    hi = 1.0;
  }
  return (to > lo && to < hi) ? -std::log(window) : kNegInf;
}

MhResult mh_sample_beta(const BetaTarget& target, double initial, int n_samples, int n_burn_in,
                        double window, std::uint64_t seed) {
  if (n_samples < 1) throw UsageError("mh_sample_beta: need at least one retained sample");
  if (!(initial > 0.0 && initial < 1.0)) throw ParameterError("mh_sample_beta: start outside (0,1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  MhResult res;
  res.samples.reserve(n_samples);
  double x = initial;
  double lx = target.log_density(x);
  const int total = n_burn_in + n_samples;
  for (int it = 0; it < total; ++it) {
    double lo = x - 0.5 * window;
    if (x <= 0.5 * window) lo = 0.0;
    else if (x >= 1.0 - 0.5 * window) lo = 1.0 - window;
    double y = 0.0;
    do {
      y = lo + window * unit(rng);
    } while (!(y > 0.0 && y < 1.0));
    const double ly = target.log_density(y);
    const double log_r = ly - lx + log_proposal_density(x, y, window) -
                         log_proposal_density(y, x, window);
    if (std::log(unit(rng)) < log_r) {
      x = y;
      lx = ly;
      ++res.accepted;
    }
    if (it >= n_burn_in) res.samples.push_back(x);
  }
  res.mean_weights = kernel::mean_inverse_weights(target.trunc, res.samples);
  return res;
}

namespace {

// Integrates exp(log_f_c) over (0,1) where the integrand is evaluated at the
// clamped beta: the flat end pieces are added analytically.
// Components: 0 -> density, 1..T -> W_j * density, T+1 -> beta * density.
std::vector<double> log_beta_integrals(const BetaTarget& target, double quad_tol, bool moments) {
  const int t = target.trunc;
  const std::size_t dim = moments ? static_cast<std::size_t>(t) + 2 : 1;
  std::vector<double> log_w(t);
  auto fill = [&](double beta, std::span<double> out) {
    const double base = target.log_density(beta);
    out[0] = base;
    if (!moments) return;
    kernel::log_inverse_weights(beta, log_w);
    for (int j = 0; j < t; ++j) out[1 + j] = base + log_w[j];
    out[t + 1] = base + std::log(kernel::clamp_beta(beta));
  };
  quad::QuadOptions opt;
  opt.rel_tol = quad_tol;
  const auto mid = quad::integrate_log(fill, dim, kernel::kBetaFloor, kernel::kBetaCeil, opt);

  std::vector<double> lo(dim), hi(dim);
  fill(kernel::kBetaFloor, lo);
  fill(kernel::kBetaCeil, hi);
  std::vector<double> out(dim);
  const double lo_len = std::log(kernel::kBetaFloor);
  const double hi_len = std::log1p(-kernel::kBetaCeil);
  for (std::size_t c = 0; c < dim; ++c) {
    double lo_piece = lo[c] + lo_len;
    double hi_piece = hi[c] + hi_len;
    if (moments && c == dim - 1) {
      // beta is not constant on the end pieces: use the exact first moments.
      lo_piece = target.log_density(kernel::kBetaFloor) + std::log(0.5 * kernel::kBetaFloor * kernel::kBetaFloor);
      hi_piece = target.log_density(kernel::kBetaCeil) +
                 std::log(0.5 * (1.0 - kernel::kBetaCeil * kernel::kBetaCeil));
    }
    out[c] = log_add(log_add(mid.log_value[c], lo_piece), hi_piece);
  }
  return out;
}

}  // namespace

double normalization_constant(const BetaTarget& target, double quad_tol) {
  if (target.n_experiments == 0) return 0.0;  // empty product: density is 1 on (0,1)
  return -log_beta_integrals(target, quad_tol, false)[0];
}

BetaMoments quadrature_beta_moments(const BetaTarget& target, double quad_tol) {
  const int t = target.trunc;
  const auto logs = log_beta_integrals(target, quad_tol, true);
  BetaMoments m;
  m.log_c = -logs[0];
  m.mean_weights.resize(t);
  for (int j = 0; j < t; ++j) m.mean_weights(j) = std::exp(logs[1 + j] - logs[0]);
  m.beta_mean = std::exp(logs[t + 1] - logs[0]);
  return m;
}

ViState initial_state(const RegressionProblem& problem, const ViConfig& config) {
  const int t = problem.trunc;
  const double l = static_cast<double>(problem.experiments.size());
  ViState s;
  s.experiments.resize(problem.experiments.size());
  for (std::size_t q = 0; q < s.experiments.size(); ++q) {
    s.experiments[q].mu = Eigen::VectorXd::Zero(problem.dim());
    s.experiments[q].sigma_blocks.assign(problem.group_count(), Eigen::MatrixXd::Identity(t, t));
  }
  s.a_sigma = config.a0;
  s.b_sigma = config.b0;
  s.groups.resize(problem.group_count());
  for (auto& g : s.groups) {
    g.a_lambda = l * t / 2.0 + config.a0;
    g.b_lambda = g.a_lambda;  // E(lambda) = 1
    g.beta_samples = {0.5};
    g.beta_mean = 0.5;
    g.mean_weights.resize(t);
    kernel::inverse_weights(0.5, std::span<double>(g.mean_weights.data(), t));
    g.log_c = 0.0;
  }
  return s;
}

void update_w_sigma(const RegressionProblem& problem, ViState& state, const ViConfig& config) {
  const int t = problem.trunc;
  double rows = 0.0;
  double b_acc = 0.0;
  state.experiments.resize(problem.experiments.size());
  for (std::size_t q = 0; q < problem.experiments.size(); ++q) {
    const auto& data = problem.experiments[q];
    auto& ef = state.experiments[q];
    const auto d = problem.dim();
    if (d == 0) {
      ef.mu.resize(0);
      ef.sigma_blocks.clear();
      ef.log_det_sigma = 0.0;
      ef.trace_phi_sigma_phi = 0.0;
    } else {
      bool dual = false;
      switch (config.solver) {
        case CovarianceSolver::kPrimal: dual = false; break;
        case CovarianceSolver::kDual: dual = true; break;
        case CovarianceSolver::kAuto: dual = data.rows() < d; break;
      }
      if (dual)
        solve_dual(data, state.groups, t, ef);
      else
        solve_primal(data, state.groups, t, ef);
    }
    ef.residual_sq = (data.y - data.phi * ef.mu).squaredNorm();
    ef.prior_quadratic = 0.0;
    for (std::size_t g = 0; g < state.groups.size(); ++g)
      ef.prior_quadratic += state.groups[g].e_lambda() *
                            weighted_difference_norm(state.groups[g].mean_weights,
                                                     ef.mu.segment(static_cast<Eigen::Index>(g) * t, t));
    rows += data.rows();
    // Y'Y - mu' Sigma^{-1} mu, written as a sum of non-negative terms.
    b_acc += ef.residual_sq + ef.prior_quadratic;
  }
  state.a_sigma = rows / 2.0 + config.a0;
  state.b_sigma = std::max(config.b0 + 0.5 * b_acc, kBSigmaFloor);
}

namespace {

// (U B U')_jj summed over experiments for B = E(sigma) mu_g mu_g' + Sigma_gg.
Eigen::VectorXd group_statistics(const RegressionProblem& problem, const ViState& state, int g) {
  const int t = problem.trunc;
  const double precision = state.noise_precision();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(t);
  for (const auto& ef : state.experiments) {
    const auto mu = ef.mu.segment(static_cast<Eigen::Index>(g) * t, t);
    Eigen::MatrixXd b = ef.sigma_blocks[g];
    b.noalias() += precision * mu * mu.transpose();
    acc += kernel::bidiagonal_congruence_diag(b);
  }
  return acc;
}

}  // namespace

void update_lambda(const RegressionProblem& problem, ViState& state, const ViConfig& config) {
  const int t = problem.trunc;
  const double l = static_cast<double>(problem.experiments.size());
  for (int g = 0; g < problem.group_count(); ++g) {
    auto& gf = state.groups[g];
    const Eigen::VectorXd stats = group_statistics(problem, state, g);
    gf.a_lambda = l * t / 2.0 + config.a0;
    gf.b_lambda = config.b0 + 0.5 * gf.mean_weights.dot(stats);
  }
}

BetaTarget beta_target(const RegressionProblem& problem, const ViState& state, int group) {
  BetaTarget bt;
  bt.trunc = problem.trunc;
  bt.n_experiments = static_cast<int>(problem.experiments.size());
  bt.e_lambda = state.groups[group].e_lambda();
  bt.stats = group_statistics(problem, state, group);
  return bt;
}

void update_beta(const RegressionProblem& problem, ViState& state, const ViConfig& config,
                 int iteration) {
  for (int g = 0; g < problem.group_count(); ++g) {
    const BetaTarget target = beta_target(problem, state, g);
    auto& gf = state.groups[g];
    if (config.beta_expectation == BetaExpectation::kQuadrature) {
      const BetaMoments m = quadrature_beta_moments(target, config.quad_tol);
      gf.mean_weights = m.mean_weights;
      gf.beta_mean = m.beta_mean;
      gf.log_c = m.log_c;
      gf.beta_samples = {m.beta_mean};
      continue;
    }
    const double start = gf.beta_samples.empty() ? 0.5 : gf.beta_samples.back();
    const auto seed = derive_seed(config.seed, {static_cast<std::uint64_t>(iteration),
                                                static_cast<std::uint64_t>(g)});
    MhResult mh = mh_sample_beta(target, start, config.n_mh_samples, config.n_burn_in,
                                 config.proposal_window, seed);
    if (mh.accepted == 0) ++state.stuck_chains;
    gf.mean_weights = mh.mean_weights;
    double sum = 0.0;
    for (double b : mh.samples) sum += b;
    gf.beta_mean = sum / static_cast<double>(mh.samples.size());
    gf.beta_samples = std::move(mh.samples);
    gf.log_c = normalization_constant(target, config.quad_tol);
  }
}

double LowerBoundTerms::total() const {
  return log_det_sigma + data_fit + noise_gamma + lambda_gamma + beta_normalizers + dimension +
         gaussian_constant;
}

LowerBoundTerms lower_bound_terms(const RegressionProblem& problem, const ViState& state,
                                  const ViConfig& config) {
  LowerBoundTerms lb;
  const double a0 = config.a0;
  const double b0 = config.b0;
  const double prior_const = a0 * std::log(b0) - std::lgamma(a0);
  const double precision = state.noise_precision();
  double rows = 0.0;
  for (const auto& ef : state.experiments) {
    lb.log_det_sigma += 0.5 * ef.log_det_sigma;
    lb.data_fit -= 0.5 * (precision * ef.residual_sq + ef.trace_phi_sigma_phi);
  }
  for (const auto& data : problem.experiments) rows += data.rows();
  const double a = state.a_sigma;
  const double b = state.b_sigma;
  lb.noise_gamma = prior_const - b0 * a / b - a * std::log(b) + std::lgamma(a) + a;
  for (const auto& g : state.groups) {
    lb.lambda_gamma += prior_const - b0 * g.e_lambda() - g.a_lambda * std::log(g.b_lambda) +
                       std::lgamma(g.a_lambda) + g.a_lambda;
    lb.beta_normalizers -= g.log_c;
  }
  lb.dimension = 0.5 * problem.group_count() * problem.trunc *
                 static_cast<double>(problem.experiments.size());
  lb.gaussian_constant = -0.5 * rows * std::log(2.0 * std::numbers::pi);

  const struct {
    const char* name;
    double value;
  } named[] = {{"log|Sigma|", lb.log_det_sigma}, {"data fit", lb.data_fit},
               {"noise Gamma", lb.noise_gamma},  {"lambda Gamma", lb.lambda_gamma},
               {"beta normalizers", lb.beta_normalizers}};
  for (const auto& term : named)
    if (!std::isfinite(term.value))
      throw NumericalError(std::string("lower bound term '") + term.name + "' is not finite");
  return lb;
}

double lower_bound(const RegressionProblem& problem, const ViState& state, const ViConfig& config) {
  return lower_bound_terms(problem, state, config).total();
}

Eigen::MatrixXd full_covariance(const RegressionProblem& problem, const ViState& state, int q) {
  const auto& data = problem.experiments.at(q);
  Eigen::MatrixXd precision = data.gram;
  for (int g = 0; g < problem.group_count(); ++g) {
    const auto off = static_cast<Eigen::Index>(g) * problem.trunc;
    precision.block(off, off, problem.trunc, problem.trunc) +=
        prior_precision_block(state.groups[g]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("full_covariance: precision not SPD");
  return llt.solve(Eigen::MatrixXd::Identity(precision.rows(), precision.cols()));
}

ViResult run_vi(const RegressionProblem& problem, const ViConfig& config) {
  config.validate();
  ViResult res;
  res.state = initial_state(problem, config);
  auto& st = res.state;
  for (int k = 1; k <= config.max_iter; ++k) {
    update_w_sigma(problem, st, config);
    update_lambda(problem, st, config);
    update_beta(problem, st, config, k);
    const double lb = lower_bound(problem, st, config);
    st.lower_bound_trace.push_back(lb);
    res.iterations = k;
    if (k >= 2) {
      const double prev = st.lower_bound_trace[k - 2];
      if (lb - prev < config.tol * std::abs(prev)) {
        res.converged = true;
        break;
      }
    }
  }
  res.lower_bound = st.lower_bound_trace.back();
  res.w_hat.reserve(st.experiments.size());
  for (const auto& ef : st.experiments) res.w_hat.push_back(ef.mu);
  return res;
}

double group_confidence(const RegressionProblem& problem, std::span<const Eigen::VectorXd> w,
                        int group) {
  double acc = 0.0;
  for (const auto& wq : w)
    acc += wq.segment(static_cast<Eigen::Index>(group) * problem.trunc, problem.trunc).norm();
  return acc;
}

}  // namespace netinf::vi
