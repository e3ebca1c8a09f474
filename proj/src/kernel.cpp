#include "netinf/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "netinf/error.hpp"

namespace netinf::kernel {

TcKernelParam::TcKernelParam(double beta) : beta_(beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    std::ostringstream msg;
    msg << "TC kernel beta must lie in (0,1), got " << beta;
    throw ParameterError(msg.str());
  }
}

double clamp_beta(double beta) { return std::clamp(beta, kBetaFloor, kBetaCeil); }

double TcKernelParam::clamped() const { return clamp_beta(beta_); }

double tc_kernel_entry(int t, int s, TcKernelParam beta) {
  if (t < 1 || s < 1) throw UsageError("kernel lags are 1-based");
  return std::pow(beta.value(), std::max(t, s));
}

Eigen::MatrixXd tc_kernel_matrix(int size, TcKernelParam beta) {
  Eigen::MatrixXd k(size, size);
  for (int t = 0; t < size; ++t)
    for (int s = 0; s < size; ++s) k(t, s) = tc_kernel_entry(t + 1, s + 1, beta);
  return k;
}

void log_inverse_weights(double beta, std::span<double> out) {
  const double b = clamp_beta(beta);
  const double lb = std::log(b);
  const double l1b = std::log1p(-b);
  const auto size = out.size();
  for (std::size_t j = 0; j + 1 < size; ++j)
    out[j] = -static_cast<double>(j + 1) * lb - l1b;
  if (size > 0) out[size - 1] = -static_cast<double>(size) * lb;
}

void inverse_weights(double beta, std::span<double> out) {
  log_inverse_weights(beta, out);
  for (double& v : out) v = std::exp(v);
}

Eigen::MatrixXd TcDecomposition::u_matrix() const {
  const int t = size();
  Eigen::MatrixXd u = Eigen::MatrixXd::Identity(t, t);
  for (int j = 0; j + 1 < t; ++j) u(j, j + 1) = -1.0;
  return u;
}

Eigen::MatrixXd tridiagonal_from_weights(const Eigen::VectorXd& w) {
  const auto t = w.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(t, t);
  for (Eigen::Index j = 0; j < t; ++j) {
    m(j, j) = w(j) + (j > 0 ? w(j - 1) : 0.0);
    if (j + 1 < t) {
      m(j, j + 1) = -w(j);
      m(j + 1, j) = -w(j);
    }
  }
  return m;
}

Eigen::MatrixXd TcDecomposition::inverse_dense() const {
  return tridiagonal_from_weights(w_diag);
}

Eigen::VectorXd TcDecomposition::apply_inverse(const Eigen::VectorXd& x) const {
  const auto t = w_diag.size();
  if (x.size() != t) throw UsageError("apply_inverse: dimension mismatch");
  // z = W U x, then U' z.
  Eigen::VectorXd z(t);
  for (Eigen::Index j = 0; j < t; ++j)
    z(j) = w_diag(j) * (x(j) - (j + 1 < t ? x(j + 1) : 0.0));
  Eigen::VectorXd out(t);
  for (Eigen::Index j = 0; j < t; ++j) out(j) = z(j) - (j > 0 ? z(j - 1) : 0.0);
  return out;
}

TcDecomposition tc_inverse_decomposition(int size, TcKernelParam beta) {
  if (size < 1) throw UsageError("kernel size must be >= 1");
  TcDecomposition d;
  d.w_diag.resize(size);
  inverse_weights(beta.value(), std::span<double>(d.w_diag.data(), size));
  return d;
}

double tc_log_determinant(int size, TcKernelParam beta) {
  if (size < 1) throw UsageError("kernel size must be >= 1");
  const double b = beta.clamped();
  const double t = size;
  return 0.5 * t * (t + 1.0) * std::log(b) + (t - 1.0) * std::log1p(-b);
}

Eigen::VectorXd mean_inverse_weights(int size, std::span<const double> betas) {
  if (betas.empty()) throw UsageError("expected inverse kernel needs at least one sample");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(size);
  for (double raw : betas) {
    const double b = clamp_beta(raw);
    const double r = 1.0 / b;
    const double scale = 1.0 / (1.0 - b);
    double power = r;
    for (int j = 0; j + 1 < size; ++j) {
      acc(j) += power * scale;
      power *= r;
    }
    acc(size - 1) += power;
  }
  return acc / static_cast<double>(betas.size());
}

Eigen::MatrixXd expected_inverse_kernel(int size,
                                        std::span<const TcKernelParam> samples) {
  if (size < 1) throw UsageError("kernel size must be >= 1");
  if (samples.empty()) throw UsageError("expected inverse kernel needs at least one sample");
  std::vector<double> raw;
  raw.reserve(samples.size());
  for (const auto& s : samples) raw.push_back(s.value());
  return tridiagonal_from_weights(mean_inverse_weights(size, raw));
}

Eigen::MatrixXd inverse_of_weighted(const Eigen::VectorXd& w) {
  const auto t = w.size();
  // tail(m) = sum_{j >= m} 1/w_j
  Eigen::VectorXd tail(t);
  double acc = 0.0;
  for (Eigen::Index j = t - 1; j >= 0; --j) {
    acc += 1.0 / w(j);
    tail(j) = acc;
  }
  Eigen::MatrixXd k(t, t);
  for (Eigen::Index s = 0; s < t; ++s)
    for (Eigen::Index r = 0; r < t; ++r) k(r, s) = tail(std::max(r, s));
  return k;
}

Eigen::VectorXd bidiagonal_congruence_diag(const Eigen::Ref<const Eigen::MatrixXd>& b) {
  const auto t = b.rows();
  Eigen::VectorXd d(t);
  for (Eigen::Index j = 0; j + 1 < t; ++j)
    d(j) = b(j, j) - b(j, j + 1) - b(j + 1, j) + b(j + 1, j + 1);
  if (t > 0) d(t - 1) = b(t - 1, t - 1);
  return d;
}

}  // namespace netinf::kernel
