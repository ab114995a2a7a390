#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "gmc/embedding.hpp"

namespace gmc {

/// Where the weight regularizer is centered. The default pulls weights
/// toward the best uniform solution u* 1; `zero` is the plain ridge
/// ablation.
enum class RegCenter : std::uint8_t { best_uniform, zero };

struct OmpConfig {
  std::size_t coreset_size = 1;  // n
  double lambda = 0.5;
  bool clip_negative = true;
  RegCenter center = RegCenter::best_uniform;
  double pivot_tol = 1e-10;  // columns below this are treated as dependent

  void validate() const;
};

/// Incrementally maintained Cholesky factor L with
///   L L^T = G_I^T G_I + lambda I
/// over the appended columns, plus the cached products G_I^T g and the
/// column sum G_I 1 needed by the regularized solve. Appending costs
/// O(|I|^2); solving costs two triangular substitutions.
class CholState {
 public:
  CholState(Eigen::Index embed_dim, double lambda, double pivot_tol = 1e-10);

  std::size_t size() const { return count_; }
  double lambda() const { return lambda_; }

  /// Extends the factor by one column. Returns false (state unchanged)
  /// when the pivot c + lambda - ||w||^2 falls below the tolerance, i.e.
  /// the column is numerically dependent on the selected set.
  bool try_append(const Eigen::VectorXd& column, const Eigen::VectorXd& target);

  /// Selected columns G_I (embed_dim x |I|).
  Eigen::Ref<const Eigen::MatrixXd> selected() const {
    return cols_.leftCols(static_cast<Eigen::Index>(count_));
  }
  /// Cached G_I 1.
  Eigen::Ref<const Eigen::VectorXd> column_sum() const {
    return colsum_;
  }
  /// Cached G_I^T g for the bound target.
  Eigen::Ref<const Eigen::VectorXd> target_products() const {
    return target_dots_.head(static_cast<Eigen::Index>(count_));
  }
  /// Copy of the lower-triangular factor (for verification).
  Eigen::MatrixXd factor() const;

  /// (G_I^T G_I + lambda I)^{-1} rhs via two triangular solves.
  Eigen::VectorXd solve_normal(const Eigen::VectorXd& rhs) const;

  /// Scalar multiply-accumulate count spent in triangular solves and
  /// factor updates; the selection cost model is asserted against this.
  std::uint64_t solve_ops() const { return ops_; }

 private:
  double lambda_;
  double pivot_tol_;
  std::size_t count_ = 0;
  Eigen::MatrixXd cols_;        // embed_dim x capacity
  Eigen::MatrixXd lower_;       // capacity x capacity, lower triangle live
  Eigen::VectorXd colsum_;
  Eigen::VectorXd target_dots_;
  mutable std::uint64_t ops_ = 0;

  void grow(std::size_t need);
};

/// Best single weight shared by all selected columns:
/// u* = <G_I 1, g> / ||G_I 1||^2, or 0 when G_I 1 vanishes.
double best_uniform(const Eigen::Ref<const Eigen::MatrixXd>& selected,
                    const Eigen::VectorXd& target);

/// gamma = (G_I^T G_I + lambda I)^{-1} (G_I^T g + lambda u* 1), where u*
/// recenters the regularizer (0 for RegCenter::zero). lambda = 0 is plain
/// least squares and requires an independent column set.
Eigen::VectorXd solve_weights(const CholState& state,
                              const Eigen::VectorXd& target,
                              RegCenter center = RegCenter::best_uniform);

/// Convenience form over raw columns; builds the factor internally and
/// throws NumericError naming the offending column if the normal matrix is
/// singular at lambda = 0.
Eigen::VectorXd solve_weights(const Eigen::MatrixXd& selected,
                              const Eigen::VectorXd& target, double lambda,
                              RegCenter center = RegCenter::best_uniform);

/// Entrywise max(gamma, 0).
Eigen::VectorXd clip_weights(const Eigen::VectorXd& gamma);

struct Selection {
  std::vector<std::size_t> indices;      // dictionary columns, pick order
  Eigen::VectorXd weights;               // final (clipped) weights
  double residual_norm = 0.0;            // ||g - G_I gamma|| at final weights
  std::vector<double> residual_history;  // after each greedy refit, pre-clip
  std::size_t clipped_count = 0;
  std::size_t skipped_dependent = 0;
  std::uint64_t solve_ops = 0;
};

/// Greedy orthogonal matching pursuit toward the target: repeatedly adds
/// the column most correlated with the residual (ties -> lowest index),
/// refits all weights through the regularized normal equations, and stops
/// at the size budget or when every remaining correlation is <= 0.
/// Numerically dependent columns are skipped, not fatal.
Selection omp_select(const Eigen::MatrixXd& dictionary,
                     const Eigen::VectorXd& target, const OmpConfig& cfg);

inline Selection omp_select(const EmbeddingMatrix& dictionary,
                            const Eigen::VectorXd& target,
                            const OmpConfig& cfg) {
  return omp_select(dictionary.columns(), target, cfg);
}

}  // namespace gmc
