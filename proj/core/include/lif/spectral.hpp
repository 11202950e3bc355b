#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lif/error.hpp"

namespace lif {

/// Pairwise rigidity rewards of one soft cluster: symmetric, entries in
/// [0, 1], unit diagonal.
class RewardMatrix {
 public:
  /// Throws Error(kInvalidValue) if the matrix violates the invariants.
  explicit RewardMatrix(Eigen::MatrixXd entries);

  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  Eigen::Index dim() const noexcept { return entries_.rows(); }

 private:
  Eigen::MatrixXd entries_;
};

struct PowerIterationOptions {
  double tol = 1e-10;
  std::size_t max_iter = 1000;
};

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = 0.0;
  std::size_t iterations = 0;
};

/// Largest eigenpair of a symmetric entrywise non-negative matrix by power
/// iteration from the normalized all-ones vector. Stops once
/// ||A v - lambda v|| <= tol * n. The eigenvector has unit norm and is
/// oriented so its largest-magnitude component (lowest index on ties) is
/// non-negative. Throws NonConvergenceError after max_iter iterations.
EigenPair principal_eig(const Eigen::Ref<const Eigen::MatrixXd>& a,
                        const PowerIterationOptions& options = {});
EigenPair principal_eig(const RewardMatrix& a, const PowerIterationOptions& options = {});

/// principal_eig over a batch, possibly spread across workers. Results keep
/// input order. A failure is rethrown as IndexedError carrying the lowest
/// failing index.
std::vector<EigenPair> batch_principal_eig(std::span<const RewardMatrix> mats,
                                           const PowerIterationOptions& options = {});

}  // namespace lif
