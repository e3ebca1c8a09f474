#pragma once

// TC (tuned/correlated) kernel k(t,s) = beta^max(t,s) over impulse-response
// lags, with its analytic inverse factorization K^{-1} = U' W U.
//
// U is the T x T upper-bidiagonal matrix with unit diagonal and -1 on the
// superdiagonal; it never changes with beta, so it is kept implicit and only
// the diagonal of W is stored. Products with K^{-1} therefore cost O(T).

#include <span>
#include <vector>

#include <Eigen/Core>

namespace netinf::kernel {

inline constexpr double kBetaFloor = 1e-4;
inline constexpr double kBetaCeil = 1.0 - 1e-4;

/// Decay rate of a TC kernel. Rejects values outside the open interval (0,1).
class TcKernelParam {
 public:
  explicit TcKernelParam(double beta);

  double value() const { return beta_; }
  /// beta restricted to [kBetaFloor, kBetaCeil]; used by every O(T) routine
  /// so that W stays finite for samples that land near the endpoints.
  double clamped() const;

 private:
  double beta_;
};

double clamp_beta(double beta);

/// beta^max(t,s) for lags t, s >= 1.
double tc_kernel_entry(int t, int s, TcKernelParam beta);

/// Dense T x T kernel matrix. Test and diagnostic use only.
Eigen::MatrixXd tc_kernel_matrix(int size, TcKernelParam beta);

struct TcDecomposition {
  Eigen::VectorXd w_diag;

  int size() const { return static_cast<int>(w_diag.size()); }

  Eigen::MatrixXd u_matrix() const;
  /// U' diag(w) U as a dense matrix (tridiagonal).
  Eigen::MatrixXd inverse_dense() const;
  /// K^{-1} x in O(T).
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& x) const;
};

TcDecomposition tc_inverse_decomposition(int size, TcKernelParam beta);

/// log |K| = T(T+1)/2 log(beta) + (T-1) log(1-beta), evaluated in log space.
double tc_log_determinant(int size, TcKernelParam beta);

/// (1/N) U' (sum_k W^k) U: the sample mean of the inverse kernels.
Eigen::MatrixXd expected_inverse_kernel(int size,
                                        std::span<const TcKernelParam> samples);

// Low-level helpers shared by the variational and empirical-Bayes code.

/// Writes diag(W) for a raw (clamped internally) beta into `out` (size T).
void inverse_weights(double beta, std::span<double> out);

/// log diag(W); finite for every beta in (0,1).
void log_inverse_weights(double beta, std::span<double> out);

/// Mean of diag(W^k) over raw beta samples.
Eigen::VectorXd mean_inverse_weights(int size, std::span<const double> betas);

/// Dense U' diag(w) U for an arbitrary positive weight vector.
Eigen::MatrixXd tridiagonal_from_weights(const Eigen::VectorXd& w);

/// (U' diag(w) U)^{-1} = U^{-1} diag(1/w) U^{-T}: entry (s,t) is
/// sum_{j >= max(s,t)} 1/w_j. Built in O(T^2).
Eigen::MatrixXd inverse_of_weighted(const Eigen::VectorXd& w);

/// d_j = (U B U')_jj for a symmetric T x T block B, so that
/// trace(U' W U B) = sum_j w_j d_j.
Eigen::VectorXd bidiagonal_congruence_diag(const Eigen::Ref<const Eigen::MatrixXd>& b);

}  // namespace netinf::kernel
