#pragma once

// Mean-field variational inference for one target node under a fixed model
// structure. The posterior over (w, sigma, lambda, beta) is approximated by
//
//   q(w, sigma) q(lambda) q(beta),
//
// with q(w, sigma) Gaussian-Gamma, q(lambda_g) Gamma, and q(beta_g) known
// only up to its normalizer. E(K^{-1}) under q(beta_g) is estimated either
// with a Metropolis-Hastings chain or by adaptive quadrature; the normalizer
// itself always comes from quadrature.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "netinf/problem.hpp"

namespace netinf::vi {

enum class BetaExpectation { kMetropolisHastings, kQuadrature };

/// Primal factorizes the (T*M) x (T*M) posterior precision; dual works with
/// the rows x rows matrix I + Phi P^{-1} Phi'. kAuto picks the smaller.
enum class CovarianceSolver { kAuto, kPrimal, kDual };

struct ViConfig {
  double a0 = 1e-3;
  double b0 = 1e-3;
  int max_iter = 50;
  double tol = 1e-3;  // relative change of the lower bound
  int n_mh_samples = 500;
  int n_burn_in = 100;
  double proposal_window = 0.1;
  double quad_tol = 1e-10;
  std::uint64_t seed = 1;
  BetaExpectation beta_expectation = BetaExpectation::kMetropolisHastings;
  CovarianceSolver solver = CovarianceSolver::kAuto;

  void validate() const;
};

struct GroupFactor {
  double a_lambda = 1.0;
  double b_lambda = 1.0;
  std::vector<double> beta_samples;
  /// E(K^{-1}) = U' diag(mean_weights) U.
  Eigen::VectorXd mean_weights;
  double log_c = 0.0;  // log normalization constant of q(beta)
  double beta_mean = 0.5;

  double e_lambda() const { return a_lambda / b_lambda; }
};

struct ExperimentFactor {
  Eigen::VectorXd mu;
  std::vector<Eigen::MatrixXd> sigma_blocks;  // diagonal T x T blocks of Sigma_q
  double log_det_sigma = 0.0;
  double residual_sq = 0.0;          // ||Y - Phi mu||^2
  double trace_phi_sigma_phi = 0.0;  // trace(Phi Sigma Phi')
  double prior_quadratic = 0.0;      // mu' E(Lambda) E(K^{-1}) mu
};

struct ViState {
  std::vector<ExperimentFactor> experiments;
  double a_sigma = 1.0;
  double b_sigma = 1.0;
  std::vector<GroupFactor> groups;
  std::vector<double> lower_bound_trace;
  int stuck_chains = 0;  // chains that rejected every proposal

  double noise_precision() const { return a_sigma / b_sigma; }
};

/// Unnormalized log density of q(beta_g):
///   -(L/2) log|K(beta)| - (E(lambda)/2) sum_j W_j(beta) stats_j,
/// where stats_j = sum_q (U B_q U')_jj and B_q is the group's block of
/// E(sigma w w'). Evaluated at the clamped beta.
struct BetaTarget {
  int trunc = 1;
  int n_experiments = 1;
  double e_lambda = 1.0;
  Eigen::VectorXd stats;

  double log_density(double beta) const;
};

struct MhResult {
  std::vector<double> samples;
  Eigen::VectorXd mean_weights;
  int accepted = 0;
};

struct BetaMoments {
  Eigen::VectorXd mean_weights;  // E[diag W]
  double beta_mean = 0.0;
  double log_c = 0.0;
};

/// Log density of the boundary-shifted uniform proposal: -log(eps) when `to`
/// lies in the window centred on `from`, -inf otherwise.
double log_proposal_density(double to, double from, double window);

MhResult mh_sample_beta(const BetaTarget& target, double initial, int n_samples, int n_burn_in,
                        double window, std::uint64_t seed);

/// -log of the integral of exp(log_density) over (0,1).
double normalization_constant(const BetaTarget& target, double quad_tol);

/// Quadrature moments of q(beta): E[W] and E[beta], plus log c.
BetaMoments quadrature_beta_moments(const BetaTarget& target, double quad_tol);

ViState initial_state(const RegressionProblem& problem, const ViConfig& config);

/// q(w, sigma) given E(lambda) and E(K^{-1}) in `state`.
void update_w_sigma(const RegressionProblem& problem, ViState& state, const ViConfig& config);

/// q(lambda) given the current q(w, sigma) and E(K^{-1}).
void update_lambda(const RegressionProblem& problem, ViState& state, const ViConfig& config);

BetaTarget beta_target(const RegressionProblem& problem, const ViState& state, int group);

/// q(beta_g) for every group, and E(K^{-1}) and log c from it. `iteration`
/// selects the RNG stream.
void update_beta(const RegressionProblem& problem, ViState& state, const ViConfig& config,
                 int iteration);

struct LowerBoundTerms {
  double log_det_sigma = 0.0;    // 1/2 sum_q log|Sigma_q|
  double data_fit = 0.0;         // -1/2 sum_q [E(sigma)||Y-Phi mu||^2 + tr(Phi Sigma Phi')]
  double noise_gamma = 0.0;      // Gamma prior/posterior terms of sigma
  double lambda_gamma = 0.0;     // Gamma prior/posterior terms of lambda
  double beta_normalizers = 0.0; // -sum_g log c_g
  double dimension = 0.0;        // M * sum_q T / 2
  double gaussian_constant = 0.0;

  double total() const;
};

LowerBoundTerms lower_bound_terms(const RegressionProblem& problem, const ViState& state,
                                  const ViConfig& config);
double lower_bound(const RegressionProblem& problem, const ViState& state, const ViConfig& config);

/// Dense posterior covariance of experiment q (diagnostics and tests).
Eigen::MatrixXd full_covariance(const RegressionProblem& problem, const ViState& state, int q);

struct ViResult {
  ViState state;
  std::vector<Eigen::VectorXd> w_hat;  // per experiment
  double lower_bound = 0.0;
  int iterations = 0;
  bool converged = false;
};

ViResult run_vi(const RegressionProblem& problem, const ViConfig& config);

/// Sum over experiments of the Euclidean norm of group g's block of w.
double group_confidence(const RegressionProblem& problem, std::span<const Eigen::VectorXd> w,
                        int group);

}  // namespace netinf::vi
