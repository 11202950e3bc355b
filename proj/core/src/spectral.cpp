#include "lif/spectral.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "lif/parallel.hpp"

namespace lif {

RewardMatrix::RewardMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  const Eigen::Index n = entries_.rows();
  if (n < 1 || entries_.cols() != n) {
    throw Error(ErrorKind::kInvalidValue, "reward matrix must be square and non-empty");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (entries_(i, i) != 1.0) {
      throw Error(ErrorKind::kInvalidValue, "reward matrix diagonal must be 1");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = entries_(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorKind::kInvalidValue, "reward matrix entries must lie in [0, 1]");
      }
      if (std::abs(v - entries_(j, i)) > 1e-12) {
        throw Error(ErrorKind::kInvalidValue, "reward matrix must be symmetric");
      }
    }
  }
}

EigenPair principal_eig(const Eigen::Ref<const Eigen::MatrixXd>& a,
                        const PowerIterationOptions& options) {
  const Eigen::Index n = a.rows();
  const double bound = options.tol * static_cast<double>(n);

  EigenPair out;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Eigen::VectorXd av(n);
  for (std::size_t iter = 1;; ++iter) {
    av.noalias() = a * v;
    const double lambda = v.dot(av);
    const double residual = (av - lambda * v).norm();
    out.value = lambda;
    out.residual = residual;
    out.iterations = iter;
    if (residual <= bound) break;
    if (iter >= options.max_iter) {
      throw NonConvergenceError("power iteration did not converge in " +
                                    std::to_string(options.max_iter) +
                                    " iterations (residual " + std::to_string(residual) + ")",
                                residual);
    }
    const double norm = av.norm();
    if (!(norm > 0.0)) {
      throw NonConvergenceError("power iteration collapsed to the zero vector", residual);
    }
    v = av / norm;
  }

  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(v(i)) > best) {
      best = std::abs(v(i));
      arg = i;
    }
  }
  if (v(arg) < 0.0) v = -v;
  out.vector = std::move(v);
  return out;
}

EigenPair principal_eig(const RewardMatrix& a, const PowerIterationOptions& options) {
  return principal_eig(a.entries(), options);
}

std::vector<EigenPair> batch_principal_eig(std::span<const RewardMatrix> mats,
                                           const PowerIterationOptions& options) {
  std::vector<EigenPair> out(mats.size());
  std::vector<std::optional<NonConvergenceError>> errors(mats.size());
  parallel_for(mats.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      try {
        out[i] = principal_eig(mats[i], options);
      } catch (const NonConvergenceError& err) {
        errors[i].emplace(err);
      }
    }
  }, 16);
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) {
      throw IndexedError(ErrorKind::kNonConvergence,
                         "matrix " + std::to_string(i) + ": " + errors[i]->what(), i);
    }
  }
  return out;
}

}  // namespace lif
