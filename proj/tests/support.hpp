#pragma once

// Test-only oracles. Everything here goes through independent routes
// (finite differences, Eigen dense decompositions, exhaustive enumeration)
// so the library code under test never checks itself.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

/// Central finite differences of a scalar function at theta.
inline Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    Eigen::VectorXd theta, double step) {
  Eigen::VectorXd grad(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double saved = theta(i);
    theta(i) = saved + step;
    const double up = f(theta);
    theta(i) = saved - step;
    const double down = f(theta);
    theta(i) = saved;
    grad(i) = (up - down) / (2.0 * step);
  }
  return grad;
}

inline double max_relative_error(const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& b,
                                 double floor = 1e-3) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a(i)), std::abs(b(i)), floor});
    worst = std::max(worst, std::abs(a(i) - b(i)) / denom);
  }
  return worst;
}

/// Best uniform scalar by its closed form, computed independently.
inline double dense_best_uniform(const Eigen::MatrixXd& cols,
                                 const Eigen::VectorXd& g) {
  const Eigen::VectorXd s = cols.rowwise().sum();
  const double denom = s.squaredNorm();
  return denom == 0.0 ? 0.0 : s.dot(g) / denom;
}

/// gamma = (A^T A + lambda I)^{-1} (A^T g + lambda u 1) via Eigen LDLT on
/// the dense normal equations.
inline Eigen::VectorXd dense_solve_weights(const Eigen::MatrixXd& cols,
                                           const Eigen::VectorXd& g,
                                           double lambda, double center) {
  const Eigen::Index k = cols.cols();
  const Eigen::MatrixXd normal =
      cols.transpose() * cols +
      lambda * Eigen::MatrixXd::Identity(k, k);
  const Eigen::VectorXd rhs =
      cols.transpose() * g +
      lambda * center * Eigen::VectorXd::Ones(k);
  return normal.ldlt().solve(rhs);
}

/// Plain least-squares residual of fitting g with the given columns
/// (rank-revealing, handles dependent columns).
inline double dense_ls_residual(const Eigen::MatrixXd& cols,
                                const Eigen::VectorXd& g) {
  if (cols.cols() == 0) return g.norm();
  const Eigen::VectorXd gamma =
      cols.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(g);
  return (g - cols * gamma).norm();
}

/// Exhaustive best residual over all column subsets of size <= max_size.
inline double best_subset_residual(const Eigen::MatrixXd& dict,
                                   const Eigen::VectorXd& g,
                                   std::size_t max_size) {
  const std::size_t n = static_cast<std::size_t>(dict.cols());
  double best = g.norm();
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    const std::size_t popcount = static_cast<std::size_t>(__builtin_popcountll(mask));
    if (popcount > max_size) continue;
    Eigen::MatrixXd cols(dict.rows(), static_cast<Eigen::Index>(popcount));
    Eigen::Index at = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (mask & (std::size_t{1} << j))
        cols.col(at++) = dict.col(static_cast<Eigen::Index>(j));
    best = std::min(best, dense_ls_residual(cols, g));
  }
  return best;
}

/// Dense lower-Cholesky of A + lambda I via Eigen LLT.
inline Eigen::MatrixXd dense_cholesky(const Eigen::MatrixXd& cols,
                                      double lambda) {
  const Eigen::Index k = cols.cols();
  const Eigen::MatrixXd a =
      cols.transpose() * cols + lambda * Eigen::MatrixXd::Identity(k, k);
  return Eigen::MatrixXd(a.llt().matrixL());
}

// --- chi-square survival function ------------------------------------------
// Regularized incomplete gamma Q(a, x), series + continued fraction.

inline double gamma_series_p(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_cf_q(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/// P(Chi2_dof > x).
inline double chi2_sf(double x, double dof) {
  if (x <= 0) return 1.0;
  const double a = dof / 2.0;
  const double half_x = x / 2.0;
  if (half_x < a + 1.0) return 1.0 - gamma_series_p(a, half_x);
  return gamma_cf_q(a, half_x);
}

}  // namespace oracle
