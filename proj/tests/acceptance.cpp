// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Benchmark artifacts go to ./acceptance_out.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "fixtures.hpp"
#include "netinf/eval.hpp"
#include "netinf/io.hpp"
#include "netinf/keb.hpp"
#include "netinf/kernel.hpp"
#include "netinf/vi.hpp"

using namespace netinf;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// Log-determinant of K by a long-double Cholesky of the dense kernel.
double dense_log_det(int t, double beta) {
  using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  Mat k(t, t);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < t; ++j) k(i, j) = std::pow(static_cast<long double>(beta), std::max(i, j) + 1);
  Eigen::LLT<Mat> llt(k);
  long double sum = 0.0L;
  for (int i = 0; i < t; ++i) sum += 2.0L * std::log(llt.matrixLLT()(i, i));
  return static_cast<double>(sum);
}

Outcome kernel_algebra() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size_d(1, 50);
  std::uniform_real_distribution<double> beta_d(0.05, 0.95);
  double worst_rec = 0.0, worst_ld = 0.0, elapsed = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const int t = size_d(rng);
    const double beta = beta_d(rng);
    const auto start = Clock::now();
    const auto dec = kernel::tc_inverse_decomposition(t, kernel::TcKernelParam(beta));
    const Eigen::MatrixXd kinv = dec.inverse_dense();
    const double ld = kernel::tc_log_determinant(t, kernel::TcKernelParam(beta));
    elapsed += seconds_since(start);
    const Eigen::MatrixXd k = kernel::tc_kernel_matrix(t, kernel::TcKernelParam(beta));
    const Eigen::MatrixXd r = kinv * k - Eigen::MatrixXd::Identity(t, t);
    const double rec = r.cwiseAbs().rowwise().sum().maxCoeff() /
                       kinv.cwiseAbs().rowwise().sum().maxCoeff();
    worst_rec = std::max(worst_rec, rec);
    worst_ld = std::max(worst_ld, std::abs(ld - dense_log_det(t, beta)));
  }
  return {worst_rec < 1e-6 && worst_ld < 1e-8 && elapsed < 10.0,
          fmt("worst reconstruction %.2e, worst log-det error %.2e, %.3f s", worst_rec, worst_ld,
              elapsed)};
}

Outcome vi_monotonicity() {
  double worst = -INFINITY;
  int big_drops = 0, steps = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto prob = netinf::testing::vi_fixture(seed);
    vi::ViConfig q;
    q.beta_expectation = vi::BetaExpectation::kQuadrature;
    q.max_iter = 30;
    q.tol = 1e-12;
    q.seed = seed + 1;
    const auto tr = vi::run_vi(prob, q).state.lower_bound_trace;
    for (std::size_t k = 1; k < tr.size(); ++k)
      worst = std::max(worst, (tr[k - 1] - tr[k]) / std::abs(tr[k - 1]));

    vi::ViConfig mh = q;
    mh.beta_expectation = vi::BetaExpectation::kMetropolisHastings;
    mh.n_mh_samples = 500;
    const auto tm = vi::run_vi(prob, mh).state.lower_bound_trace;
    for (std::size_t k = 1; k < tm.size(); ++k, ++steps)
      if (tm[k - 1] - tm[k] > 1e-2 * std::abs(tm[k - 1])) ++big_drops;
  }
  const double frac = steps ? static_cast<double>(big_drops) / steps : 0.0;
  return {worst <= 0.0 && frac < 0.05,
          fmt("quadrature worst relative decrease %.2e; MH large decreases %d/%d (%.1f%%)",
              std::max(worst, 0.0), big_drops, steps, 100.0 * frac)};
}

Outcome keb_vi_equivalence() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> trunc_d(2, 10), groups_d(1, 3), rows_d(5, 40);
  std::uniform_real_distribution<double> unit(0.05, 0.95), scale(0.2, 5.0);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  const auto start = Clock::now();
  for (int trial = 0; trial < 100; ++trial) {
    const int t = trunc_d(rng), p = groups_d(rng), n = rows_d(rng) + t;
    Experiment e;
    e.y.resize(p + 1, n);
    e.u.resize(0, n);
    for (Eigen::Index i = 0; i < e.y.size(); ++i) e.y.data()[i] = normal(rng);
    ModelStructure s;
    s.target = p;
    s.include_self = false;
    for (int j = 0; j < p; ++j) s.active_groups.push_back(GroupId::node(j));
    const std::vector<Experiment> ex{e};
    const auto prob = assemble(ex, s, t);

    vi::ViConfig cfg;
    cfg.a0 = cfg.b0 = 0.0;
    vi::ViState st = vi::initial_state(prob, cfg);
    for (auto& g : st.groups) {
      kernel::inverse_weights(unit(rng), std::span<double>(g.mean_weights.data(), t));
      g.mean_weights *= scale(rng);
      g.b_lambda = 1.0 / scale(rng);
    }
    std::vector<double> e_lambda;
    for (const auto& g : st.groups) e_lambda.push_back(g.e_lambda());
    vi::update_w_sigma(prob, st, cfg);
    const double tau = st.noise_precision();
    vi::update_lambda(prob, st, cfg);

    keb::KebHyper h;
    h.sigma = 1.0 / tau;
    h.gamma.resize(p);
    for (int g = 0; g < p; ++g) {
      h.gamma(g) = 1.0 / (tau * e_lambda[g]);
      h.kernel_weights.push_back(st.groups[g].mean_weights);
    }
    const Eigen::VectorXd gamma = keb::em_gamma_update(prob, h, keb::keb_posterior(prob, h));
    for (int g = 0; g < p; ++g) {
      const double inv_lambda = 1.0 / (tau * st.groups[g].e_lambda());
      worst = std::max(worst, std::abs(gamma(g) - inv_lambda) / inv_lambda);
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-10 && elapsed < 5.0,
          fmt("worst relative difference %.2e, %.3f s", worst, elapsed)};
}

const eval::CellSummary& cell_for(const eval::BenchmarkResult& r, int n_points) {
  for (const auto& c : r.cells)
    if (c.condition.n_points == n_points) return c;
  throw std::runtime_error("missing cell");
}

std::string cell_text(const eval::CellSummary& c) {
  return fmt("PREC %.3f (se %.3f), TPR %.3f (se %.3f), median fitness %.1f, %d/%d trials ok",
             c.mean_prec, c.se_prec, c.mean_tpr, c.se_tpr, c.median_fitness,
             c.trials - c.failures, c.trials);
}

struct Suite {
  std::string name;
  eval::BenchmarkConfig config;
  eval::BenchmarkResult result;
  double seconds = 0.0;
};

Suite run_suite(const std::string& name, const std::string& preset, std::vector<int> lengths,
                int trials) {
  Suite s{name, eval::preset(preset), {}, 0.0};
  s.config.lengths = std::move(lengths);
  s.config.trials = trials;
  const auto start = Clock::now();
  s.result = eval::run_benchmark(s.config);
  s.seconds = seconds_since(start);
  const fs::path dir = fs::path("acceptance_out") / name;
  io::write_text(dir / "results.csv", io::results_csv(s.config, s.result));
  io::write_json(dir / "summary.json", io::summary_to_json(s.config, s.result));
  std::printf("  [%s finished in %.0f s]\n", name.c_str(), s.seconds);
  std::fflush(stdout);
  return s;
}

InferenceConfig selection_config() {
  InferenceConfig c;
  c.trunc = 10;
  c.vi.beta_expectation = vi::BetaExpectation::kQuadrature;
  return c;
}

Outcome exhaustive_agreement() {
  const InferenceConfig cfg = selection_config();
  int agree = 0, exact_prec = 0;
  const int fixtures = 50;
  for (std::uint64_t seed = 0; seed < fixtures; ++seed) {
    const auto f = netinf::testing::selection_fixture(1000 + seed);
    const auto net = infer_network(f.data, cfg);
    bool all = true;
    for (int target = 0; target < f.truth.observed(); ++target) {
      const auto& tr = net.nodes[target].trace;
      const auto oracle = netinf::testing::exhaustive_best(f.data, target, cfg);
      if (tr.chosen < 0 || !netinf::testing::same_groups(tr.candidates[tr.chosen].structure, oracle))
        all = false;
    }
    if (all) ++agree;
    if (eval::score_topology(f.truth, net.structure()).prec == 1.0) ++exact_prec;
  }
  return {agree >= 0.9 * fixtures && exact_prec >= 0.95 * fixtures,
          fmt("argmax agreement %d/%d, PREC = 1 in %d/%d", agree, fixtures, exact_prec, fixtures)};
}

void report(int id, const Outcome& o) {
  std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str());
  std::fflush(stdout);
}

}  // namespace

int main() {
  bool all = true;
  auto record = [&](int id, const Outcome& o) {
    all = all && o.pass;
    report(id, o);
  };

  record(1, kernel_algebra());
  record(2, vi_monotonicity());
  record(3, keb_vi_equivalence());

  const Suite table1 = run_suite("table1", "table1", {45, 85}, 20);
  const Suite table3 = run_suite("table3", "table3", {300}, 10);
  const Suite table4 = run_suite("table4", "table4", {400}, 10);

  const auto& n85 = cell_for(table1.result, 85);
  const auto& n45 = cell_for(table1.result, 45);
  const auto& noise = cell_for(table3.result, 300);
  const auto& ring = cell_for(table4.result, 400);
  record(4, {n85.mean_prec >= 0.95 && n85.mean_tpr >= 0.90 && n85.failures == 0, cell_text(n85)});
  record(5, {n45.mean_prec >= 0.95 && n45.mean_tpr >= 0.55 && n45.mean_tpr <= 0.95 &&
                 n45.failures == 0,
             cell_text(n45)});
  record(6, {noise.mean_prec >= 0.95 && noise.failures == 0, cell_text(noise)});
  record(7, {ring.mean_prec >= 0.95 && ring.mean_tpr >= 0.60 && ring.failures == 0,
             cell_text(ring)});
  record(8, {n85.median_fitness >= 75.0, fmt("median averaged fitness %.2f", n85.median_fitness)});

  const Outcome agreement = exhaustive_agreement();
  record(9, agreement);

  bool same = exhaustive_agreement().detail == agreement.detail;
  int suites = 1;
  for (const Suite* s : {&table1, &table3, &table4}) {
    const Suite again = run_suite(s->name + "_rerun", s->name, s->config.lengths, s->config.trials);
    same = same && io::results_csv(s->config, s->result, false) ==
                       io::results_csv(again.config, again.result, false);
    ++suites;
  }
  record(10, {same, fmt("%d suites rerun with the same master seed%s", suites,
                        same ? ", serialized results identical" : ", results differ")});
  return all ? 0 : 1;
}
