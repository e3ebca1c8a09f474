#pragma once

// Kernel empirical Bayes with TC kernels: type-II maximum likelihood of
//
//   Y' (sigma I + Phi Gamma K Phi')^{-1} Y + log|sigma I + Phi Gamma K Phi'|
//
// over per-group scales gamma, per-group decays beta and the noise variance.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "netinf/problem.hpp"

namespace netinf::keb {

struct KebConfig {
  int max_iter = 30;
  double tol = 1e-6;          // relative objective decrease
  double initial_gamma = 1.0;
  double initial_beta = 0.5;
  double prune_rel = 1e-6;    // gamma < prune_rel * max(gamma) is set to zero
  int beta_grid = 8;          // coarse grid before golden-section refinement
  int golden_iters = 12;

  void validate() const;
};

/// Hyperparameters. Group g's kernel is given through its inverse weights:
/// K_g^{-1} = U' diag(kernel_weights[g]) U (a TC kernel when the weights
/// come from kernel::inverse_weights).
struct KebHyper {
  Eigen::VectorXd gamma;
  std::vector<Eigen::VectorXd> kernel_weights;
  double sigma = 1.0;  // noise variance

  void validate(int groups, int trunc) const;
};

struct KebState {
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  double sigma = 1.0;
  std::vector<double> objective_trace;
};

struct KebPosterior {
  std::vector<Eigen::VectorXd> mean;                   // per experiment
  std::vector<std::vector<Eigen::MatrixXd>> cov_blocks;  // [experiment][group]
  std::vector<double> residual_sq;                     // ||Y - Phi m||^2
  std::vector<double> trace_phi_cov_phi;               // tr(Phi S Phi')
  double objective = 0.0;                              // summed over experiments
};

KebHyper hyper_from_state(const KebState& state, int trunc);

KebPosterior keb_posterior(const RegressionProblem& problem, const KebHyper& hyper);
double keb_objective(const RegressionProblem& problem, const KebHyper& hyper);

/// EM update gamma_g = sum_q tr(K_g^{-1} (m m' + S)_gg) / (L T).
Eigen::VectorXd em_gamma_update(const RegressionProblem& problem, const KebHyper& hyper,
                                const KebPosterior& posterior);
/// EM update of the noise variance from the residual moments.
double em_sigma_update(const RegressionProblem& problem, const KebPosterior& posterior);

struct KebResult {
  KebState state;
  std::vector<Eigen::VectorXd> w_hat;
  ModelStructure selected;  // groups whose gamma survived pruning
  double objective = 0.0;
  int iterations = 0;
};

KebResult run_keb(const RegressionProblem& problem, const KebConfig& config);

}  // namespace netinf::keb
