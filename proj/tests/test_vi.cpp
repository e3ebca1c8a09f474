#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <boost/math/special_functions/digamma.hpp>

#include "fixtures.hpp"
#include "netinf/error.hpp"
#include "netinf/kernel.hpp"
#include "netinf/quadrature.hpp"
#include "netinf/vi.hpp"

using namespace netinf;
using namespace netinf::vi;

namespace {

Eigen::MatrixXd u_matrix(int t) {
  Eigen::MatrixXd u = Eigen::MatrixXd::Identity(t, t);
  for (int j = 0; j + 1 < t; ++j) u(j, j + 1) = -1.0;
  return u;
}

Eigen::MatrixXd dense_prior_precision(const ViState& s, int trunc) {
  const int g = static_cast<int>(s.groups.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(g * trunc, g * trunc);
  const Eigen::MatrixXd u = u_matrix(trunc);
  for (int k = 0; k < g; ++k)
    p.block(k * trunc, k * trunc, trunc, trunc) =
        s.groups[k].e_lambda() * u.transpose() * s.groups[k].mean_weights.asDiagonal() * u;
  return p;
}

ViConfig quadrature_config() {
  ViConfig c;
  c.beta_expectation = BetaExpectation::kQuadrature;
  return c;
}

// Two-node series with y_1(t) = 0.5 y_0(t-1) + 0.3 u(t-1) + noise.
std::vector<Experiment> small_series(int n, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Experiment e;
  e.y = Eigen::MatrixXd::Zero(2, n);
  e.u.resize(1, n);
  for (int t = 0; t < n; ++t) e.u(0, t) = normal(rng);
  for (int t = 0; t < n; ++t) {
    e.y(0, t) = normal(rng);
    if (t > 0) e.y(1, t) = 0.5 * e.y(0, t - 1) + 0.3 * e.u(0, t - 1) + noise * normal(rng);
  }
  return {e};
}

}  // namespace

TEST(ViConfig, Validate) {
  ViConfig c;
  EXPECT_NO_THROW(c.validate());
  c.proposal_window = 1.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = ViConfig{};
  c.a0 = 0.0;
  EXPECT_THROW(c.validate(), ParameterError);
}

TEST(UpdateWSigma, ShapeParameters) {
  const auto model = generate_random_network(4, 3, 0.3, 2);
  const std::vector<Experiment> ex{simulate(model, 100, SnrSetting::finite(10), 3)};
  const auto prob = assemble(ex, ModelStructure::full(0, 3, 3), 20);
  ViConfig cfg;
  ViState s = initial_state(prob, cfg);
  update_w_sigma(prob, s, cfg);
  EXPECT_DOUBLE_EQ(s.a_sigma, 40.001);
  update_lambda(prob, s, cfg);
  for (const auto& g : s.groups) EXPECT_DOUBLE_EQ(g.a_lambda, 10.001);
}

TEST(UpdateWSigma, ZeroRegressors) {
  // The only source is identically zero.
  std::vector<Experiment> ex = small_series(30, 0.1, 1);
  ex[0].y.row(0).setZero();
  const auto prob = assemble(ex, ModelStructure{1, {GroupId::node(0)}, false}, 3);
  ViConfig cfg;
  ViState s = initial_state(prob, cfg);
  update_w_sigma(prob, s, cfg);
  EXPECT_TRUE(s.experiments[0].mu.isZero());
  EXPECT_NEAR(s.b_sigma, cfg.b0 + 0.5 * prob.experiments[0].y_t_y, 1e-12);
}

TEST(UpdateWSigma, MatchesDenseSolveOnSmallFixture) {
  const auto ex = small_series(5, 0.1, 2);
  const auto prob = assemble(ex, ModelStructure{1, {GroupId::node(0)}, false}, 2);
  for (auto solver : {CovarianceSolver::kPrimal, CovarianceSolver::kDual}) {
    ViConfig cfg;
    cfg.solver = solver;
    ViState s = initial_state(prob, cfg);
    s.groups[0].a_lambda = 3.0;
    s.groups[0].b_lambda = 2.0;
    update_w_sigma(prob, s, cfg);

    const auto& b = prob.experiments[0];
    const Eigen::MatrixXd precision = b.phi.transpose() * b.phi + dense_prior_precision(s, 2);
    const Eigen::MatrixXd sigma = precision.inverse();
    const Eigen::VectorXd mu = sigma * b.phi.transpose() * b.y;
    const auto& ef = s.experiments[0];
    EXPECT_LT((ef.mu - mu).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((ef.sigma_blocks[0] - sigma).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(ef.log_det_sigma, std::log(sigma.determinant()), 1e-10);
    EXPECT_NEAR(ef.trace_phi_sigma_phi, (b.phi * sigma * b.phi.transpose()).trace(), 1e-12);
    EXPECT_NEAR(s.b_sigma, cfg.b0 + 0.5 * (b.y_t_y - mu.dot(precision * mu)), 1e-12);
    EXPECT_DOUBLE_EQ(s.a_sigma, 1.5 + cfg.a0);
  }
}

TEST(UpdateWSigma, PrimalAndDualAgree) {
  const auto model = generate_random_network(5, 4, 0.3, 8);
  const std::vector<Experiment> ex{simulate(model, 40, SnrSetting::finite(10), 9)};
  const auto prob = assemble(ex, ModelStructure::full(2, 4, 4), 8);  // 72 columns, 32 rows
  ViConfig primal, dual;
  primal.solver = CovarianceSolver::kPrimal;
  dual.solver = CovarianceSolver::kDual;
  ViState a = initial_state(prob, primal), b = initial_state(prob, dual);
  update_w_sigma(prob, a, primal);
  update_w_sigma(prob, b, dual);
  EXPECT_LT((a.experiments[0].mu - b.experiments[0].mu).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR(a.experiments[0].log_det_sigma, b.experiments[0].log_det_sigma, 1e-7);
  EXPECT_NEAR(a.experiments[0].trace_phi_sigma_phi, b.experiments[0].trace_phi_sigma_phi, 1e-8);
  for (std::size_t g = 0; g < a.groups.size(); ++g)
    EXPECT_LT((a.experiments[0].sigma_blocks[g] - b.experiments[0].sigma_blocks[g])
                  .cwiseAbs()
                  .maxCoeff(),
              1e-8);
  EXPECT_NEAR(a.b_sigma, b.b_sigma, 1e-8 * a.b_sigma);
}

TEST(UpdateLambda, MatchesDenseTrace) {
  const auto ex = small_series(40, 0.1, 3);
  const auto prob = assemble(ex, ModelStructure{1, {GroupId::node(0)}}, 4);
  ViConfig cfg;
  ViState s = initial_state(prob, cfg);
  update_w_sigma(prob, s, cfg);
  s.groups[1].mean_weights << 1.0, 2.0, 3.0, 5.0;
  update_lambda(prob, s, cfg);
  const Eigen::MatrixXd u = u_matrix(4);
  for (int g = 0; g < 2; ++g) {
    const Eigen::MatrixXd ekinv = u.transpose() * s.groups[g].mean_weights.asDiagonal() * u;
    const Eigen::VectorXd mu = s.experiments[0].mu.segment(4 * g, 4);
    const Eigen::MatrixXd second =
        s.noise_precision() * mu * mu.transpose() + s.experiments[0].sigma_blocks[g];
    EXPECT_NEAR(s.groups[g].b_lambda, cfg.b0 + 0.5 * (ekinv * second).trace(), 1e-10);
    EXPECT_DOUBLE_EQ(s.groups[g].a_lambda, 2.0 + cfg.a0);
  }
}

TEST(UpdateLambda, ZeroSecondMomentLeavesPriorRate) {
  const auto ex = small_series(40, 0.1, 3);
  const auto prob = assemble(ex, ModelStructure{1, {GroupId::node(0)}, false}, 4);
  ViConfig cfg;
  ViState s = initial_state(prob, cfg);
  update_w_sigma(prob, s, cfg);
  s.experiments[0].mu.setZero();
  s.experiments[0].sigma_blocks[0].setZero();
  update_lambda(prob, s, cfg);
  EXPECT_DOUBLE_EQ(s.groups[0].b_lambda, cfg.b0);
  EXPECT_GT(s.groups[0].e_lambda(), 1e3);
}

TEST(BetaTarget, MatchesDenseKernelAlgebra) {
  BetaTarget bt;
  bt.trunc = 5;
  bt.n_experiments = 2;
  bt.e_lambda = 1.7;
  bt.stats = Eigen::VectorXd::LinSpaced(5, 0.2, 1.0);
  for (double beta : {0.1, 0.45, 0.9}) {
    const auto k = kernel::tc_kernel_matrix(5, kernel::TcKernelParam(beta));
    const Eigen::VectorXd w = kernel::tc_inverse_decomposition(5, kernel::TcKernelParam(beta)).w_diag;
    const double expected = -0.5 * 2 * std::log(k.determinant()) - 0.5 * 1.7 * w.dot(bt.stats);
    EXPECT_NEAR(bt.log_density(beta), expected, 1e-9 * std::abs(expected));
  }
}

TEST(MhProposal, SymmetricInteriorAndShiftedAtEdges) {
  EXPECT_DOUBLE_EQ(log_proposal_density(0.54, 0.5, 0.1), log_proposal_density(0.5, 0.54, 0.1));
  EXPECT_DOUBLE_EQ(log_proposal_density(0.54, 0.5, 0.1), -std::log(0.1));
  EXPECT_EQ(log_proposal_density(0.7, 0.5, 0.1), -INFINITY);
  // From 0.02 the window is (0, 0.1); from 0.08 it is (0.03, 0.13).
  EXPECT_DOUBLE_EQ(log_proposal_density(0.08, 0.02, 0.1), -std::log(0.1));
  EXPECT_EQ(log_proposal_density(0.02, 0.08, 0.1), -INFINITY);
  EXPECT_DOUBLE_EQ(log_proposal_density(0.92, 0.99, 0.1), -std::log(0.1));
}

namespace {

BetaTarget peaked_target() {
  // Stats of 20 impulse responses drawn from a TC kernel with beta = 0.8.
  const int t = 10;
  const auto k = kernel::tc_kernel_matrix(t, kernel::TcKernelParam(0.8));
  const Eigen::MatrixXd u = u_matrix(t);
  BetaTarget bt;
  bt.trunc = t;
  bt.n_experiments = 20;
  bt.e_lambda = 1.0;
  bt.stats = 20.0 * (u * k * u.transpose()).diagonal();
  return bt;
}

}  // namespace

TEST(MhSampleBeta, PosteriorMeanMatchesQuadrature) {
  const BetaTarget bt = peaked_target();
  const auto moments = quadrature_beta_moments(bt, 1e-10);
  EXPECT_NEAR(moments.beta_mean, 0.8, 0.05);
  const auto mh = mh_sample_beta(bt, 0.5, 20000, 500, 0.1, 42);
  double mean = 0.0;
  for (double b : mh.samples) mean += b;
  mean /= static_cast<double>(mh.samples.size());
  // Batch means for the Monte Carlo standard error of a correlated chain.
  const int batches = 40, len = 500;
  double ss = 0.0;
  for (int k = 0; k < batches; ++k) {
    double bm = 0.0;
    for (int i = 0; i < len; ++i) bm += mh.samples[k * len + i];
    bm /= len;
    ss += (bm - mean) * (bm - mean);
  }
  const double se = std::sqrt(ss / (batches - 1) / batches);
  EXPECT_NEAR(mean, moments.beta_mean, 0.05);
  EXPECT_LT(std::abs(mean - moments.beta_mean), 3 * se + 1e-12);
  for (double b : mh.samples) {
    ASSERT_GT(b, 0.0);
    ASSERT_LT(b, 1.0);
  }
  // E[W] from the chain against the quadrature moments.
  for (int j = 0; j < bt.trunc; ++j)
    EXPECT_NEAR(mh.mean_weights(j) / moments.mean_weights(j), 1.0, 0.05);
}

TEST(MhSampleBeta, Deterministic) {
  const BetaTarget bt = peaked_target();
  const auto a = mh_sample_beta(bt, 0.5, 300, 50, 0.1, 7);
  const auto b = mh_sample_beta(bt, 0.5, 300, 50, 0.1, 7);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(a.samples, mh_sample_beta(bt, 0.5, 300, 50, 0.1, 8).samples);
  EXPECT_THROW(mh_sample_beta(bt, 1.0, 300, 50, 0.1, 7), ParameterError);
}

TEST(NormalizationConstant, EmptyDataGivesZero) {
  BetaTarget bt;
  bt.trunc = 3;
  bt.n_experiments = 0;
  bt.e_lambda = 0.0;
  bt.stats = Eigen::VectorXd::Zero(3);
  EXPECT_EQ(normalization_constant(bt, 1e-10), 0.0);
  const auto m = quadrature_beta_moments(bt, 1e-10);
  EXPECT_NEAR(m.log_c, 0.0, 1e-12);
  EXPECT_NEAR(m.beta_mean, 0.5, 1e-12);
}

TEST(NormalizationConstant, ScalarKernelAgainstRiemannSum) {
  // T = 1: p(beta) = beta^{-1/2} exp(-alpha / (2 beta)).
  BetaTarget bt;
  bt.trunc = 1;
  bt.n_experiments = 1;
  bt.e_lambda = 1.0;
  bt.stats = Eigen::VectorXd::Constant(1, 0.3);
  const int n = 1000000;
  long double sum = 0.0L;
  for (int i = 0; i < n; ++i) {
    const double b = (i + 0.5) / n;
    sum += std::exp(-0.5 * std::log(b) - 0.15 / b);
  }
  const double oracle = -std::log(static_cast<double>(sum / n));
  EXPECT_NEAR(normalization_constant(bt, 1e-10), oracle, 1e-6);
}

TEST(NormalizationConstant, ScalingShiftsLogC) {
  const BetaTarget bt = peaked_target();
  const double base = normalization_constant(bt, 1e-10);
  const double k = 37.0;
  const double scaled = -quad::integrate_log_scalar(
      [&](double b) { return bt.log_density(b) + std::log(k); }, 0.0, 1.0);
  EXPECT_NEAR(scaled, base - std::log(k), 1e-8 * std::abs(base));
}

TEST(LowerBound, DeterministicFunctionOfState) {
  const auto prob = netinf::testing::vi_fixture(3);
  ViConfig cfg = quadrature_config();
  ViState s = initial_state(prob, cfg);
  update_w_sigma(prob, s, cfg);
  update_lambda(prob, s, cfg);
  update_beta(prob, s, cfg, 1);
  const ViState copy = s;
  EXPECT_EQ(lower_bound(prob, s, cfg), lower_bound(prob, copy, cfg));
}

TEST(LowerBound, EmptyModelByHand) {
  const auto ex = small_series(6, 0.1, 4);
  const auto prob = assemble(ex, ModelStructure{1, {}, false}, 1);  // 5 rows, no groups
  ViConfig cfg;
  const auto r = run_vi(prob, cfg);
  EXPECT_LE(r.iterations, 2);
  EXPECT_TRUE(r.converged);
  const double yy = prob.experiments[0].y_t_y;
  const double a = 2.5 + cfg.a0;
  const double b = cfg.b0 + 0.5 * yy;
  const double expected = -0.5 * (a / b) * yy + cfg.a0 * std::log(cfg.b0) - std::lgamma(cfg.a0) -
                          cfg.b0 * a / b - a * std::log(b) + std::lgamma(a) + a -
                          2.5 * std::log(2 * std::numbers::pi);
  EXPECT_NEAR(r.lower_bound, expected, 1e-10 * std::abs(expected));
}

namespace {

// Independent evaluation of E_q[log p(Y, w, sigma, lambda, beta)] - E_q[log q]
// for the Gaussian-Gamma model with TC priors. q(beta) is formed on a dense
// grid from dense kernel matrices.
double elbo_oracle(const RegressionProblem& prob, const ViState& s,
                   const std::vector<Eigen::MatrixXd>& sigma, const ViConfig& cfg) {
  using boost::math::digamma;
  const double log2pi = std::log(2 * std::numbers::pi);
  const int t = prob.trunc;
  const int groups = prob.group_count();
  const int d = prob.dim();
  const double l = static_cast<double>(prob.experiments.size());
  const double e_sigma = s.a_sigma / s.b_sigma;
  const double elog_sigma = digamma(s.a_sigma) - std::log(s.b_sigma);
  auto gamma_prior = [&](double elog, double e) {
    return cfg.a0 * std::log(cfg.b0) - std::lgamma(cfg.a0) + (cfg.a0 - 1) * elog - cfg.b0 * e;
  };
  auto gamma_entropy = [](double a, double b) {
    return a - std::log(b) + std::lgamma(a) + (1 - a) * digamma(a);
  };

  double elbo = gamma_prior(elog_sigma, e_sigma) + gamma_entropy(s.a_sigma, s.b_sigma);
  for (std::size_t q = 0; q < prob.experiments.size(); ++q) {
    const auto& b = prob.experiments[q];
    const auto& mu = s.experiments[q].mu;
    const double n = b.rows();
    const double resid = (b.y - b.phi * mu).squaredNorm();
    elbo += 0.5 * n * elog_sigma - 0.5 * n * log2pi -
            0.5 * (e_sigma * resid + (b.phi * sigma[q] * b.phi.transpose()).trace());
    Eigen::LLT<Eigen::MatrixXd> llt(sigma[q]);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    elbo += 0.5 * d * (1 + log2pi) + 0.5 * logdet - 0.5 * d * elog_sigma;
  }

  for (int g = 0; g < groups; ++g) {
    const auto& gf = s.groups[g];
    const double e_lambda = gf.a_lambda / gf.b_lambda;
    const double elog_lambda = digamma(gf.a_lambda) - std::log(gf.b_lambda);
    elbo += gamma_prior(elog_lambda, e_lambda) + gamma_entropy(gf.a_lambda, gf.b_lambda);

    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(t, t);
    for (std::size_t q = 0; q < prob.experiments.size(); ++q) {
      const Eigen::VectorXd mu = s.experiments[q].mu.segment(g * t, t);
      second += e_sigma * mu * mu.transpose() + sigma[q].block(g * t, g * t, t, t);
    }
    // q(beta) on a midpoint grid.
    const int grid = 20000;
    std::vector<double> logp(grid), logdet(grid);
    std::vector<Eigen::MatrixXd> kinv(grid);
    double mx = -INFINITY;
    for (int i = 0; i < grid; ++i) {
      const double beta = (i + 0.5) / grid;
      const auto k = kernel::tc_kernel_matrix(t, kernel::TcKernelParam(beta));
      Eigen::LLT<Eigen::MatrixXd> llt(k);
      logdet[i] = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      kinv[i] = llt.solve(Eigen::MatrixXd::Identity(t, t));
      logp[i] = -0.5 * l * logdet[i] - 0.5 * e_lambda * (kinv[i] * second).trace();
      mx = std::max(mx, logp[i]);
    }
    double z = 0.0, e_logdet = 0.0, e_logp = 0.0;
    Eigen::MatrixXd e_kinv = Eigen::MatrixXd::Zero(t, t);
    for (int i = 0; i < grid; ++i) {
      const double wgt = std::exp(logp[i] - mx);
      z += wgt;
      e_logdet += wgt * logdet[i];
      e_logp += wgt * logp[i];
      e_kinv += wgt * kinv[i];
    }
    e_logdet /= z;
    e_logp /= z;
    e_kinv /= z;
    const double log_z = mx + std::log(z / grid);

    elbo += l * (0.5 * t * elog_sigma + 0.5 * t * elog_lambda - 0.5 * e_logdet - 0.5 * t * log2pi) -
            0.5 * e_lambda * (e_kinv * second).trace();
    elbo += log_z - e_logp;  // entropy of q(beta)
  }
  return elbo;
}

}  // namespace

TEST(LowerBound, AuditAgainstDirectExpectations) {
  const auto ex = small_series(30, 0.3, 5);
  const auto prob = assemble(ex, ModelStructure{1, {GroupId::node(0)}}, 3);
  ViConfig cfg = quadrature_config();
  ViState s = initial_state(prob, cfg);
  for (int it = 1; it <= 3; ++it) {
    update_w_sigma(prob, s, cfg);
    const auto& b = prob.experiments[0];
    const Eigen::MatrixXd sigma =
        (b.phi.transpose() * b.phi + dense_prior_precision(s, prob.trunc)).inverse();
    EXPECT_LT((s.experiments[0].mu - sigma * b.phi.transpose() * b.y).cwiseAbs().maxCoeff(),
              1e-10);
    update_lambda(prob, s, cfg);
    update_beta(prob, s, cfg, it);
    const double oracle = elbo_oracle(prob, s, {sigma}, cfg);
    const double value = lower_bound(prob, s, cfg);
    EXPECT_NEAR(value, oracle, 1e-6 * std::abs(oracle)) << "iteration " << it;
  }
  const auto t = lower_bound_terms(prob, s, cfg);
  EXPECT_NEAR(t.total(), lower_bound(prob, s, cfg), 1e-12);
  EXPECT_DOUBLE_EQ(t.dimension, 0.5 * 2 * 3);
}

TEST(RunVi, MonotoneWithQuadratureExpectations) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto prob = netinf::testing::vi_fixture(seed);
    ViConfig cfg = quadrature_config();
    cfg.max_iter = 15;
    cfg.tol = 1e-12;
    const auto r = run_vi(prob, cfg);
    const auto& tr = r.state.lower_bound_trace;
    for (std::size_t k = 1; k < tr.size(); ++k)
      ASSERT_GE(tr[k] - tr[k - 1], -1e-9 * std::abs(tr[k - 1])) << "seed " << seed << " k " << k;
    EXPECT_GT(r.state.a_sigma, 0);
    EXPECT_GT(r.state.b_sigma, 0);
    for (const auto& g : r.state.groups) {
      EXPECT_GT(g.a_lambda, 0);
      EXPECT_GT(g.b_lambda, 0);
    }
  }
}

TEST(RunVi, NoiselessDelayFixture) {
  // y_1(t) = 0.5 y_0(t-1)
  auto ex = small_series(200, 0.0, 6);
  ex[0].y.row(1).setZero();
  for (int t = 1; t < 200; ++t) ex[0].y(1, t) = 0.5 * ex[0].y(0, t - 1);
  const auto prob = assemble(ex, ModelStructure{1, {GroupId::node(0)}, false}, 20);
  const auto r = run_vi(prob, ViConfig{});
  const Eigen::VectorXd& w = r.w_hat[0];
  EXPECT_NEAR(w(0), 0.5, 0.05);
  EXPECT_LT(w.tail(19).norm(), 0.05);
  const auto& b = prob.experiments[0];
  const Eigen::VectorXd ls = b.gram.ldlt().solve(b.phi_t_y);
  EXPECT_LT((w - ls).norm(), 0.05);
}

TEST(RunVi, Deterministic) {
  const auto prob = netinf::testing::vi_fixture(4);
  ViConfig cfg;
  cfg.seed = 99;
  const auto a = run_vi(prob, cfg);
  const auto b = run_vi(prob, cfg);
  EXPECT_EQ(a.w_hat[0], b.w_hat[0]);
  EXPECT_EQ(a.state.lower_bound_trace, b.state.lower_bound_trace);
}

TEST(RunVi, ArdShrinksIrrelevantGroup) {
  // y_1 depends on y_0 and u_0; u_1 is unrelated.
  std::mt19937_64 rng(1008);
  std::normal_distribution<double> normal;
  auto ex = small_series(150, 0.05, 8);
  ex[0].u.conservativeResize(2, Eigen::NoChange);
  for (int t = 0; t < 150; ++t) ex[0].u(1, t) = normal(rng);
  const auto prob =
      assemble(ex, ModelStructure{1, {GroupId::node(0), GroupId::input(0), GroupId::input(1)}, false},
               10);
  const auto r = run_vi(prob, quadrature_config());
  const double inactive = 1.0 / r.state.groups[2].e_lambda();
  EXPECT_LT(10 * inactive, 1.0 / r.state.groups[0].e_lambda());
  EXPECT_LT(10 * inactive, 1.0 / r.state.groups[1].e_lambda());
}

TEST(RunVi, MhDecreasesAreRare) {
  int decreases = 0, steps = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto prob = netinf::testing::vi_fixture(seed);
    ViConfig cfg;
    cfg.max_iter = 10;
    cfg.tol = 1e-12;
    cfg.seed = seed;
    const auto r = run_vi(prob, cfg);
    const auto& tr = r.state.lower_bound_trace;
    for (std::size_t k = 1; k < tr.size(); ++k, ++steps)
      if (tr[k] - tr[k - 1] < -1e-2 * std::abs(tr[k - 1])) ++decreases;
  }
  EXPECT_LT(decreases, 0.05 * steps + 1);
}

TEST(GroupConfidence, SumsBlockNorms) {
  const auto prob = netinf::testing::vi_fixture(2);
  std::vector<Eigen::VectorXd> w{Eigen::VectorXd::Zero(prob.dim()),
                                 Eigen::VectorXd::Zero(prob.dim())};
  w[0].segment(prob.trunc, 2) << 3.0, 4.0;
  w[1](prob.trunc) = 1.0;
  EXPECT_DOUBLE_EQ(group_confidence(prob, w, 1), 6.0);
  EXPECT_DOUBLE_EQ(group_confidence(prob, w, 0), 0.0);
}
