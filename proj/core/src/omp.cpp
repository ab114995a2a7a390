#include "gmc/omp.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace gmc {

void OmpConfig::validate() const {
  if (coreset_size == 0) throw ConfigError("coreset size n must be >= 1");
  if (lambda < 0) throw ConfigError("lambda must be nonnegative");
  if (pivot_tol <= 0) throw ConfigError("pivot tolerance must be positive");
}

// ---------------------------------------------------------------------------
// CholState
// ---------------------------------------------------------------------------

CholState::CholState(Eigen::Index embed_dim, double lambda, double pivot_tol)
    : lambda_(lambda),
      pivot_tol_(pivot_tol),
      cols_(embed_dim, 8),
      lower_(Eigen::MatrixXd::Zero(8, 8)),
      colsum_(Eigen::VectorXd::Zero(embed_dim)),
      target_dots_(8) {
  if (lambda < 0) throw ConfigError("lambda must be nonnegative");
}

void CholState::grow(std::size_t need) {
  if (need <= static_cast<std::size_t>(lower_.rows())) return;
  const Eigen::Index cap =
      std::max<Eigen::Index>(static_cast<Eigen::Index>(need), lower_.rows() * 2);
  cols_.conservativeResize(Eigen::NoChange, cap);
  Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(cap, cap);
  grown.topLeftCorner(lower_.rows(), lower_.cols()) = lower_;
  lower_ = std::move(grown);
  target_dots_.conservativeResize(cap);
}

bool CholState::try_append(const Eigen::VectorXd& column,
                           const Eigen::VectorXd& target) {
  if (column.size() != cols_.rows())
    throw ConfigError("column height does not match the selection state");
  grow(count_ + 1);

  const Eigen::Index k = static_cast<Eigen::Index>(count_);
  // w = L^{-1} (G_I^T g_new), forward substitution on the live factor.
  Eigen::VectorXd v = selected().transpose() * column;
  for (Eigen::Index i = 0; i < k; ++i) {
    double acc = v(i);
    for (Eigen::Index j = 0; j < i; ++j) acc -= lower_(i, j) * v(j);
    v(i) = acc / lower_(i, i);
  }
  ops_ += static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(k + 1) / 2;

  const double pivot_sq = column.squaredNorm() + lambda_ - v.squaredNorm();
  ops_ += static_cast<std::uint64_t>(k);
  if (pivot_sq <= pivot_tol_) return false;

  lower_.row(k).head(k) = v.transpose();
  lower_(k, k) = std::sqrt(pivot_sq);
  cols_.col(k) = column;
  colsum_ += column;
  target_dots_(k) = column.dot(target);
  ++count_;
  return true;
}

Eigen::MatrixXd CholState::factor() const {
  const Eigen::Index k = static_cast<Eigen::Index>(count_);
  return lower_.topLeftCorner(k, k)
      .triangularView<Eigen::Lower>()
      .toDenseMatrix();
}

Eigen::VectorXd CholState::solve_normal(const Eigen::VectorXd& rhs) const {
  const Eigen::Index k = static_cast<Eigen::Index>(count_);
  if (rhs.size() != k)
    throw ConfigError("rhs length does not match the selection size");
  Eigen::VectorXd x = rhs;
  for (Eigen::Index i = 0; i < k; ++i) {
    double acc = x(i);
    for (Eigen::Index j = 0; j < i; ++j) acc -= lower_(i, j) * x(j);
    x(i) = acc / lower_(i, i);
  }
  for (Eigen::Index i = k; i-- > 0;) {
    double acc = x(i);
    for (Eigen::Index j = i + 1; j < k; ++j) acc -= lower_(j, i) * x(j);
    x(i) = acc / lower_(i, i);
  }
  ops_ += static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(k + 1);
  return x;
}

// ---------------------------------------------------------------------------
// Weight solves
// ---------------------------------------------------------------------------

double best_uniform(const Eigen::Ref<const Eigen::MatrixXd>& selected,
                    const Eigen::VectorXd& target) {
  if (selected.cols() == 0) throw ConfigError("best_uniform needs >= 1 column");
  const Eigen::VectorXd ones_image = selected.rowwise().sum();
  const double denom = ones_image.squaredNorm();
  if (denom == 0.0) return 0.0;
  return ones_image.dot(target) / denom;
}

namespace {

double best_uniform_cached(const CholState& state,
                           const Eigen::VectorXd& target) {
  const double denom = state.column_sum().squaredNorm();
  if (denom == 0.0) return 0.0;
  return state.column_sum().dot(target) / denom;
}

}  // namespace

Eigen::VectorXd solve_weights(const CholState& state,
                              const Eigen::VectorXd& target,
                              RegCenter center) {
  if (state.size() == 0) throw ConfigError("solve_weights needs >= 1 column");
  const double u_star = center == RegCenter::best_uniform
                            ? best_uniform_cached(state, target)
                            : 0.0;
  Eigen::VectorXd rhs = state.target_products();
  if (state.lambda() != 0.0 && u_star != 0.0)
    rhs.array() += state.lambda() * u_star;
  return state.solve_normal(rhs);
}

Eigen::VectorXd solve_weights(const Eigen::MatrixXd& selected,
                              const Eigen::VectorXd& target, double lambda,
                              RegCenter center) {
  if (selected.cols() == 0) throw ConfigError("solve_weights needs >= 1 column");
  CholState state(selected.rows(), lambda);
  for (Eigen::Index j = 0; j < selected.cols(); ++j) {
    if (!state.try_append(selected.col(j), target))
      throw NumericError("singular normal matrix: column " + std::to_string(j) +
                         " is numerically dependent on the preceding columns");
  }
  return solve_weights(state, target, center);
}

Eigen::VectorXd clip_weights(const Eigen::VectorXd& gamma) {
  return gamma.cwiseMax(0.0);
}

// ---------------------------------------------------------------------------
// Greedy selection
// ---------------------------------------------------------------------------

Selection omp_select(const Eigen::MatrixXd& dictionary,
                     const Eigen::VectorXd& target, const OmpConfig& cfg) {
  cfg.validate();
  const Eigen::Index n_cols = dictionary.cols();
  if (target.size() != dictionary.rows())
    throw ConfigError("target length does not match dictionary height");
  if (cfg.coreset_size > static_cast<std::size_t>(n_cols))
    throw ConfigError("coreset size n = " + std::to_string(cfg.coreset_size) +
                      " exceeds dictionary size " + std::to_string(n_cols));

  Selection sel;
  CholState state(dictionary.rows(), cfg.lambda, cfg.pivot_tol);
  std::vector<char> excluded(static_cast<std::size_t>(n_cols), 0);
  Eigen::VectorXd residual = target;
  Eigen::VectorXd gamma;

  while (state.size() < cfg.coreset_size) {
    // Most-correlated remaining column; ascending scan keeps ties at the
    // lowest index.
    double best = 0.0;
    Eigen::Index best_k = -1;
    for (Eigen::Index k = 0; k < n_cols; ++k) {
      if (excluded[static_cast<std::size_t>(k)]) continue;
      const double corr = dictionary.col(k).dot(residual);
      if (corr > best) {
        best = corr;
        best_k = k;
      }
    }
    if (best_k < 0) break;  // every remaining correlation <= 0: no progress

    excluded[static_cast<std::size_t>(best_k)] = 1;
    if (!state.try_append(dictionary.col(best_k), target)) {
      ++sel.skipped_dependent;
      continue;
    }
    sel.indices.push_back(static_cast<std::size_t>(best_k));
    gamma = solve_weights(state, target, cfg.center);
    residual = target - state.selected() * gamma;
    sel.residual_history.push_back(residual.norm());
  }

  if (cfg.clip_negative && gamma.size() > 0) {
    sel.clipped_count =
        static_cast<std::size_t>((gamma.array() < 0.0).count());
    gamma = clip_weights(gamma);
    residual = target - state.selected() * gamma;
  }
  sel.weights = std::move(gamma);
  sel.residual_norm = residual.norm();
  sel.solve_ops = state.solve_ops();
  return sel;
}

}  // namespace gmc
