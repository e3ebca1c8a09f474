#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature of positive integrands
// that are only available through their logarithm. All components of a
// vector-valued integrand share the subdivision; each component is shifted by
// its own maximum before exponentiation so that results far below the double
// range (e.g. exp(-1e4)) are still returned accurately as logarithms.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace netinf::quad {

struct QuadOptions {
  double rel_tol = 1e-10;
  int initial_cells = 16;      // uniform cells seeded before adaptation
  int max_subdivisions = 4000;
};

struct LogIntegral {
  std::vector<double> log_value;  // log of each component integral
  double rel_error = 0.0;         // worst component error estimate / value
  int evaluations = 0;
  bool converged = false;
};

/// f(x, out) writes log f_c(x) for every component c (out.size() == dim).
/// -inf is a valid value (zero integrand).
using LogIntegrand = std::function<void(double, std::span<double>)>;

LogIntegral integrate_log(const LogIntegrand& f, std::size_t dim, double a, double b,
                          const QuadOptions& options = {});

/// Scalar convenience wrapper: log of the integral of exp(log_f) over [a,b].
double integrate_log_scalar(const std::function<double(double)>& log_f, double a, double b,
                            const QuadOptions& options = {});

}  // namespace netinf::quad
