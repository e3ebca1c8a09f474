#include "netinf/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>

#include "netinf/error.hpp"

namespace netinf::quad {
namespace {

// Kronrod abscissae (descending); even indices 1,3,5 are the Gauss points.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kOverflowMargin = 300.0;

struct Cell {
  double a = 0.0;
  double b = 0.0;
  std::vector<double> value;  // shifted integral per component
  std::vector<double> error;
  double priority = 0.0;
};

struct ByPriority {
  bool operator()(const Cell* x, const Cell* y) const { return x->priority < y->priority; }
};

class Integrator {
 public:
  Integrator(const LogIntegrand& f, std::size_t dim, std::vector<double> shift)
      : f_(f), dim_(dim), shift_(std::move(shift)), buf_(dim) {}

  // Returns false if a value exceeded the shift by kOverflowMargin; the shift
  // is raised and the caller restarts.
  bool rule(Cell& c) {
    const double centre = 0.5 * (c.a + c.b);
    const double half = 0.5 * (c.b - c.a);
    std::vector<double> k15(dim_, 0.0), g7(dim_, 0.0);
    for (int j = 0; j < 8; ++j) {
      const int reps = (j == 7) ? 1 : 2;
      for (int r = 0; r < reps; ++r) {
        const double x = centre + (r == 0 ? 1.0 : -1.0) * half * kXgk[j];
        if (!eval(x)) return false;
        for (std::size_t d = 0; d < dim_; ++d) {
          k15[d] += kWgk[j] * buf_[d];
          if (j % 2 == 1) g7[d] += kWg[j / 2] * buf_[d];
        }
      }
    }
    c.value.resize(dim_);
    c.error.resize(dim_);
    for (std::size_t d = 0; d < dim_; ++d) {
      c.value[d] = half * k15[d];
      c.error[d] = std::abs(half * (k15[d] - g7[d]));
    }
    return true;
  }

  const std::vector<double>& shift() const { return shift_; }
  int evaluations() const { return evaluations_; }

 private:
  bool eval(double x) {
    f_(x, buf_);
    ++evaluations_;
    bool ok = true;
    for (std::size_t d = 0; d < dim_; ++d) {
      const double v = buf_[d];
      if (std::isnan(v)) throw NumericalError("quadrature: NaN log-integrand");
      if (v > shift_[d] + kOverflowMargin) {
        shift_[d] = v;
        ok = false;
      }
      buf_[d] = std::exp(v - shift_[d]);
    }
    return ok;
  }

  const LogIntegrand& f_;
  std::size_t dim_;
  std::vector<double> shift_;
  std::vector<double> buf_;
  int evaluations_ = 0;
};

}  // namespace

LogIntegral integrate_log(const LogIntegrand& f, std::size_t dim, double a, double b,
                          const QuadOptions& options) {
  if (!(b > a)) throw UsageError("integrate_log: empty interval");
  if (dim == 0) throw UsageError("integrate_log: zero-dimensional integrand");
  const int cells = std::max(1, options.initial_cells);

  // Coarse scan for per-component maxima.
  std::vector<double> shift(dim, -std::numeric_limits<double>::infinity());
  std::vector<double> buf(dim);
  int scan_evals = 0;
  for (int k = 0; k <= 2 * cells; ++k) {
    const double x = a + (b - a) * static_cast<double>(k) / (2.0 * cells);
    f(x, buf);
    ++scan_evals;
    for (std::size_t d = 0; d < dim; ++d) shift[d] = std::max(shift[d], buf[d]);
  }
  for (double& s : shift)
    if (!std::isfinite(s)) s = 0.0;

  for (int attempt = 0; attempt < 8; ++attempt) {
    Integrator integ(f, dim, shift);
    std::vector<Cell> storage;
    storage.reserve(static_cast<std::size_t>(cells + 2 * options.max_subdivisions + 2));
    bool restart = false;
    for (int k = 0; k < cells && !restart; ++k) {
      Cell c;
      c.a = a + (b - a) * k / cells;
      c.b = a + (b - a) * (k + 1) / cells;
      if (!integ.rule(c)) restart = true;
      storage.push_back(std::move(c));
    }
    if (restart) {
      shift = integ.shift();
      continue;
    }

    std::vector<double> total(dim, 0.0), total_err(dim, 0.0);
    for (const auto& c : storage)
      for (std::size_t d = 0; d < dim; ++d) {
        total[d] += c.value[d];
        total_err[d] += c.error[d];
      }

    auto priority = [&](const Cell& c) {
      double p = 0.0;
      for (std::size_t d = 0; d < dim; ++d)
        p = std::max(p, c.error[d] / std::max(total[d], std::numeric_limits<double>::min()));
      return p;
    };
    auto worst = [&] {
      double r = 0.0;
      for (std::size_t d = 0; d < dim; ++d)
        r = std::max(r, total_err[d] / std::max(total[d], std::numeric_limits<double>::min()));
      return r;
    };

    std::priority_queue<Cell*, std::vector<Cell*>, ByPriority> heap;
    for (auto& c : storage) {
      c.priority = priority(c);
      heap.push(&c);
    }

    std::vector<const Cell*> exhausted;
    int subdivisions = 0;
    while (worst() > options.rel_tol && subdivisions < options.max_subdivisions && !heap.empty()) {
      Cell* parent = heap.top();
      heap.pop();
      const double mid = 0.5 * (parent->a + parent->b);
      if (!(mid > parent->a && mid < parent->b)) {
        exhausted.push_back(parent);
        continue;
      }
      Cell left{parent->a, mid, {}, {}, 0.0};
      Cell right{mid, parent->b, {}, {}, 0.0};
      if (!integ.rule(left) || !integ.rule(right)) {
        restart = true;
        break;
      }
      for (std::size_t d = 0; d < dim; ++d) {
        total[d] += left.value[d] + right.value[d] - parent->value[d];
        total_err[d] += left.error[d] + right.error[d] - parent->error[d];
      }
      storage.push_back(std::move(left));
      Cell* lp = &storage.back();
      storage.push_back(std::move(right));
      Cell* rp = &storage.back();
      lp->priority = priority(*lp);
      rp->priority = priority(*rp);
      heap.push(lp);
      heap.push(rp);
      ++subdivisions;
    }
    if (restart) {
      shift = integ.shift();
      continue;
    }

    // Re-sum from scratch to shed accumulated cancellation in the running totals.
    std::vector<double> final_value(dim, 0.0);
    for (const Cell* c : exhausted)
      for (std::size_t d = 0; d < dim; ++d) final_value[d] += c->value[d];
    while (!heap.empty()) {
      const Cell* c = heap.top();
      heap.pop();
      for (std::size_t d = 0; d < dim; ++d) final_value[d] += c->value[d];
    }

    LogIntegral out;
    out.log_value.resize(dim);
    for (std::size_t d = 0; d < dim; ++d)
      out.log_value[d] = final_value[d] > 0.0 ? integ.shift()[d] + std::log(final_value[d])
                                              : -std::numeric_limits<double>::infinity();
    out.rel_error = worst();
    out.evaluations = scan_evals + integ.evaluations();
    out.converged = out.rel_error <= options.rel_tol;
    return out;
  }
  throw NumericalError("integrate_log: integrand scale did not stabilize");
}

double integrate_log_scalar(const std::function<double(double)>& log_f, double a, double b,
                            const QuadOptions& options) {
  LogIntegrand wrapped = [&](double x, std::span<double> out) { out[0] = log_f(x); };
  return integrate_log(wrapped, 1, a, b, options).log_value[0];
}

}  // namespace netinf::quad
