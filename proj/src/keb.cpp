#include "netinf/keb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>

#include "netinf/error.hpp"
#include "netinf/kernel.hpp"

namespace netinf::keb {

void KebConfig::validate() const {
  if (max_iter < 1) throw ParameterError("keb config: max_iter must be >= 1");
  if (!(tol > 0)) throw ParameterError("keb config: tol must be positive");
  if (!(initial_gamma > 0)) throw ParameterError("keb config: initial gamma must be positive");
  if (!(initial_beta > 0 && initial_beta < 1))
    throw ParameterError("keb config: initial beta must be in (0,1)");
  if (!(prune_rel >= 0 && prune_rel < 1)) throw ParameterError("keb config: prune_rel in [0,1)");
  if (beta_grid < 2 || golden_iters < 0) throw ParameterError("keb config: bad beta search sizes");
}

void KebHyper::validate(int groups, int trunc) const {
  if (gamma.size() != groups || static_cast<int>(kernel_weights.size()) != groups)
    throw UsageError("keb hyperparameters: one gamma and one kernel per group required");
  if (groups > 0 && !(gamma.array() >= 0.0).all())
    throw ParameterError("keb hyperparameters: gamma must be non-negative");
  if (groups > 0 && gamma.maxCoeff() <= 0.0)
    throw ParameterError("keb hyperparameters: all-zero gamma is not a valid starting point");
  if (!(sigma > 0.0)) throw ParameterError("keb hyperparameters: sigma must be positive");
  for (const auto& w : kernel_weights)
    if (w.size() != trunc || !(w.array() > 0.0).all())
      throw ParameterError("keb hyperparameters: kernel weights must be positive, length T");
}

KebHyper hyper_from_state(const KebState& state, int trunc) {
  KebHyper h;
  h.gamma = state.gamma;
  h.sigma = state.sigma;
  for (Eigen::Index g = 0; g < state.beta.size(); ++g) {
    Eigen::VectorXd w(trunc);
    kernel::inverse_weights(state.beta(g), std::span<double>(w.data(), trunc));
    h.kernel_weights.push_back(std::move(w));
  }
  return h;
}

KebPosterior keb_posterior(const RegressionProblem& problem, const KebHyper& hyper) {
  const int t = problem.trunc;
  const int groups = problem.group_count();
  std::vector<int> active;
  for (int g = 0; g < groups; ++g)
    if (hyper.gamma(g) > 0.0) active.push_back(g);
  const auto d_act = static_cast<Eigen::Index>(active.size()) * t;
  const double sigma = hyper.sigma;

  std::vector<Eigen::MatrixXd> prior_cov(groups);
  double log_det_prior = 0.0;
  for (int g : active) {
    prior_cov[g] = hyper.gamma(g) * kernel::inverse_of_weighted(hyper.kernel_weights[g]);
    log_det_prior += t * std::log(hyper.gamma(g)) - hyper.kernel_weights[g].array().log().sum();
  }

  KebPosterior post;
  for (const auto& data : problem.experiments) {
    const auto n = static_cast<Eigen::Index>(data.rows());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(problem.dim());
    std::vector<Eigen::MatrixXd> cov(groups, Eigen::MatrixXd::Zero(t, t));
    double objective = 0.0;
    double trace = 0.0;

    if (d_act == 0) {
      objective = data.y_t_y / sigma + n * std::log(sigma);
    } else if (n <= d_act) {
      Eigen::MatrixXd psi(n, d_act);  // Phi_act P
      Eigen::MatrixXd phi_act(n, d_act);
      for (std::size_t a = 0; a < active.size(); ++a) {
        const auto src = static_cast<Eigen::Index>(active[a]) * t;
        const auto dst = static_cast<Eigen::Index>(a) * t;
        phi_act.middleCols(dst, t) = data.phi.middleCols(src, t);
        psi.middleCols(dst, t).noalias() = data.phi.middleCols(src, t) * prior_cov[active[a]];
      }
      Eigen::MatrixXd c = sigma * Eigen::MatrixXd::Identity(n, n);
      c.noalias() += psi * phi_act.transpose();
      Eigen::LLT<Eigen::MatrixXd> llt(c);
      if (llt.info() != Eigen::Success) throw NumericalError("keb: marginal covariance not SPD");
      const Eigen::VectorXd alpha = llt.solve(data.y);
      objective = data.y.dot(alpha) + 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      const Eigen::VectorXd m_act = psi.transpose() * alpha;
      const Eigen::MatrixXd z = llt.matrixL().solve(psi);
      for (std::size_t a = 0; a < active.size(); ++a) {
        const int g = active[a];
        const auto dst = static_cast<Eigen::Index>(a) * t;
        mean.segment(static_cast<Eigen::Index>(g) * t, t) = m_act.segment(dst, t);
        cov[g] = prior_cov[g];
        cov[g].noalias() -= z.middleCols(dst, t).transpose() * z.middleCols(dst, t);
      }
      const Eigen::MatrixXd l_inv = llt.matrixL().solve(Eigen::MatrixXd::Identity(n, n));
      trace = sigma * (static_cast<double>(n) - sigma * l_inv.squaredNorm());
    } else {
      // Woodbury: A = Phi' Phi / sigma + P^{-1}, S = A^{-1}.
      std::vector<Eigen::Index> cols;
      for (int g : active)
        for (int k = 0; k < t; ++k) cols.push_back(static_cast<Eigen::Index>(g) * t + k);
      Eigen::MatrixXd a_mat(d_act, d_act);
      Eigen::VectorXd rhs(d_act);
      Eigen::MatrixXd phi_act(n, d_act);
      for (Eigen::Index c = 0; c < d_act; ++c) {
        rhs(c) = data.phi_t_y(cols[c]) / sigma;
        phi_act.col(c) = data.phi.col(cols[c]);
        for (Eigen::Index r = 0; r < d_act; ++r) a_mat(r, c) = data.gram(cols[r], cols[c]) / sigma;
      }
      for (std::size_t a = 0; a < active.size(); ++a) {
        const int g = active[a];
        const auto off = static_cast<Eigen::Index>(a) * t;
        a_mat.block(off, off, t, t) +=
            kernel::tridiagonal_from_weights(hyper.kernel_weights[g]) / hyper.gamma(g);
      }
      Eigen::LLT<Eigen::MatrixXd> llt(a_mat);
      if (llt.info() != Eigen::Success) throw NumericalError("keb: posterior precision not SPD");
      const Eigen::VectorXd m_act = llt.solve(rhs);
      const double log_det_a = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      objective = data.y_t_y / sigma - rhs.dot(m_act) + n * std::log(sigma) + log_det_prior +
                  log_det_a;
      const Eigen::MatrixXd l_inv = llt.matrixL().solve(Eigen::MatrixXd::Identity(d_act, d_act));
      for (std::size_t a = 0; a < active.size(); ++a) {
        const int g = active[a];
        const auto off = static_cast<Eigen::Index>(a) * t;
        mean.segment(static_cast<Eigen::Index>(g) * t, t) = m_act.segment(off, t);
        const auto cols_g = l_inv.block(off, off, d_act - off, t);
        cov[g].noalias() = cols_g.transpose() * cols_g;
      }
      trace = llt.matrixL().solve(phi_act.transpose()).squaredNorm();
    }

    post.residual_sq.push_back((data.y - data.phi * mean).squaredNorm());
    post.trace_phi_cov_phi.push_back(trace);
    post.objective += objective;
    post.mean.push_back(std::move(mean));
    post.cov_blocks.push_back(std::move(cov));
  }
  if (!std::isfinite(post.objective)) throw NumericalError("keb: objective is not finite");
  return post;
}

double keb_objective(const RegressionProblem& problem, const KebHyper& hyper) {
  return keb_posterior(problem, hyper).objective;
}

Eigen::VectorXd em_gamma_update(const RegressionProblem& problem, const KebHyper& hyper,
                                const KebPosterior& posterior) {
  const int t = problem.trunc;
  const double l = static_cast<double>(problem.experiments.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(problem.group_count());
  for (int g = 0; g < problem.group_count(); ++g) {
    if (hyper.gamma(g) <= 0.0) continue;
    double acc = 0.0;
    for (std::size_t q = 0; q < posterior.mean.size(); ++q) {
      const auto m = posterior.mean[q].segment(static_cast<Eigen::Index>(g) * t, t);
      Eigen::MatrixXd second = posterior.cov_blocks[q][g];
      second.noalias() += m * m.transpose();
      acc += hyper.kernel_weights[g].dot(kernel::bidiagonal_congruence_diag(second));
    }
    out(g) = acc / (l * t);
  }
  return out;
}

double em_sigma_update(const RegressionProblem& problem, const KebPosterior& posterior) {
  double num = 0.0;
  for (std::size_t q = 0; q < posterior.mean.size(); ++q)
    num += posterior.residual_sq[q] + posterior.trace_phi_cov_phi[q];
  return num / static_cast<double>(problem.total_rows());
}

namespace {

double objective_with_beta(const RegressionProblem& problem, KebHyper& hyper, int g, double beta) {
  const int t = problem.trunc;
  Eigen::VectorXd saved = hyper.kernel_weights[g];
  kernel::inverse_weights(beta, std::span<double>(hyper.kernel_weights[g].data(), t));
  double obj = std::numeric_limits<double>::infinity();
  try {
    obj = keb_objective(problem, hyper);
  } catch (const NumericalError&) {
  }
  hyper.kernel_weights[g] = saved;
  return obj;
}

// Coarse grid, then golden-section refinement between the grid neighbours
// of the best point. Returns the best beta and its objective.
std::pair<double, double> search_beta(const RegressionProblem& problem, KebHyper& hyper, int g,
                                      double current, double current_obj, const KebConfig& cfg) {
  double best_beta = current;
  double best_obj = current_obj;
  const double lo = 0.02;
  const double hi = 0.98;
  std::vector<double> grid(cfg.beta_grid);
  for (int k = 0; k < cfg.beta_grid; ++k) grid[k] = lo + (hi - lo) * k / (cfg.beta_grid - 1);
  int best_k = -1;
  double grid_best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < cfg.beta_grid; ++k) {
    const double obj = objective_with_beta(problem, hyper, g, grid[k]);
    if (obj < grid_best) {
      grid_best = obj;
      best_k = k;
    }
  }
  if (best_k >= 0) {
    double a = grid[std::max(best_k - 1, 0)];
    double b = grid[std::min(best_k + 1, cfg.beta_grid - 1)];
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = objective_with_beta(problem, hyper, g, x1);
    double f2 = objective_with_beta(problem, hyper, g, x2);
    for (int it = 0; it < cfg.golden_iters; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - kInvPhi * (b - a);
        f1 = objective_with_beta(problem, hyper, g, x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kInvPhi * (b - a);
        f2 = objective_with_beta(problem, hyper, g, x2);
      }
    }
    const double candidates[] = {grid[best_k], x1, x2};
    const double values[] = {grid_best, f1, f2};
    for (int k = 0; k < 3; ++k)
      if (values[k] < best_obj) {
        best_obj = values[k];
        best_beta = candidates[k];
      }
  }
  return {best_beta, best_obj};
}

}  // namespace

KebResult run_keb(const RegressionProblem& problem, const KebConfig& config) {
  config.validate();
  const int groups = problem.group_count();
  const int t = problem.trunc;
  KebResult res;
  auto& st = res.state;
  st.gamma = Eigen::VectorXd::Constant(groups, config.initial_gamma);
  st.beta = Eigen::VectorXd::Constant(groups, config.initial_beta);
  double yy = 0.0;
  for (const auto& e : problem.experiments) yy += e.y_t_y;
  const double y_var = yy / std::max(1, problem.total_rows());
  const double sigma_floor = std::max(1e-12 * y_var, 1e-300);
  st.sigma = std::max(y_var, sigma_floor);

  KebHyper hyper = hyper_from_state(st, t);
  hyper.validate(groups, t);
  double obj = keb_objective(problem, hyper);
  st.objective_trace.push_back(obj);

  for (int it = 1; it <= config.max_iter; ++it) {
    res.iterations = it;
    const KebPosterior post = keb_posterior(problem, hyper);
    Eigen::VectorXd gamma = em_gamma_update(problem, hyper, post);
    const double sigma = std::max(em_sigma_update(problem, post), sigma_floor);
    // Keep gamma strictly positive during the sweep; pruning happens at the end.
    for (int g = 0; g < groups; ++g) gamma(g) = std::max(gamma(g), 1e-300);
    KebHyper next = hyper;
    next.gamma = gamma;
    next.sigma = sigma;
    double next_obj = std::numeric_limits<double>::infinity();
    try {
      next_obj = keb_objective(problem, next);
    } catch (const NumericalError&) {
    }
    if (next_obj <= obj) {
      hyper = std::move(next);
      obj = next_obj;
    }
    for (int g = 0; g < groups; ++g) {
      const auto [beta, value] = search_beta(problem, hyper, g, st.beta(g), obj, config);
      if (value < obj) {
        st.beta(g) = beta;
        kernel::inverse_weights(beta, std::span<double>(hyper.kernel_weights[g].data(), t));
        obj = value;
      }
    }
    const double prev = st.objective_trace.back();
    st.objective_trace.push_back(obj);
    if (prev - obj < config.tol * std::abs(prev)) break;
  }

  // Relative pruning, then the posterior mean under the pruned hyperparameters.
  const double gmax = groups > 0 ? hyper.gamma.maxCoeff() : 0.0;
  res.selected = problem.structure;
  res.selected.active_groups.clear();
  for (int g = 0; g < groups; ++g) {
    if (hyper.gamma(g) < config.prune_rel * gmax) hyper.gamma(g) = 0.0;
    if (hyper.gamma(g) > 0.0 && problem.blocks[g] != GroupId::node(problem.structure.target))
      res.selected.active_groups.push_back(problem.blocks[g]);
  }
  const KebPosterior final_post = keb_posterior(problem, hyper);
  st.gamma = hyper.gamma;
  st.sigma = hyper.sigma;
  res.objective = final_post.objective;
  res.w_hat = final_post.mean;
  return res;
}

}  // namespace netinf::keb
