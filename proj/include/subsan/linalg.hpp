#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "subsan/errors.hpp"

namespace subsan::linalg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Empirical second-moment (or centered covariance) of a batch of states.
struct CovarianceEstimate {
  Mat matrix;          // D x D, symmetric PSD
  long sample_count = 0;
  Vec mean;            // zero vector when centering is disabled

  int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Eigenvalues (descending) and orthonormal eigenvectors of a covariance.
struct EigenModel {
  Vec eigenvalues;   // descending
  Mat eigenvectors;  // columns, orthonormal

  int dim() const { return static_cast<int>(eigenvalues.size()); }
};

/// Rank-d orthogonal projector onto the span of `basis`.
struct Projector {
  Mat basis;   // D x d, orthonormal columns
  Mat matrix;  // D x D, basis * basis^T

  int ambient_dim() const { return static_cast<int>(basis.rows()); }
  int rank() const { return static_cast<int>(basis.cols()); }
};

enum class DimensionStrategyKind { AbsoluteThreshold, LargestRelativeGap };

struct DimensionStrategy {
  DimensionStrategyKind kind;
  double tau = 1e-10;  // only for AbsoluteThreshold
};

inline DimensionStrategy absolute_threshold(double tau) {
  return {DimensionStrategyKind::AbsoluteThreshold, tau};
}
inline DimensionStrategy largest_relative_gap() {
  return {DimensionStrategyKind::LargestRelativeGap, 0.0};
}

/// matrix = (1/n) sum s_j s_j^T; with `center`, the mean is subtracted first
/// and stored in the estimate.
CovarianceEstimate empirical_covariance(const std::vector<Vec>& samples, bool center);

/// Symmetric eigendecomposition with descending eigenvalues. Each
/// eigenvector's first nonzero entry is made positive; equal eigenvalues are
/// tie-broken lexicographically so fixtures are stable across runs.
EigenModel eigendecompose(const CovarianceEstimate& cov);

/// Projector onto the span of the top-d eigenvectors.
Projector projector(const EigenModel& model, int d);

/// Projector onto span of the given orthonormal columns.
Projector projector_from_basis(const Mat& basis);

/// Orthonormal basis of the orthogonal complement of span(basis).
Mat orthonormal_complement(const Mat& basis);

/// Spectral norm ||P - Q||_2.
double projector_distance(const Projector& p, const Projector& q);

/// Frobenius norm ||P - Q||_F.
double projector_distance_frobenius(const Projector& p, const Projector& q);

/// ||sin Theta(P, Q)||_F from the singular values of basis(P)^T basis(Q).
double sin_theta_frobenius(const Projector& p, const Projector& q);

/// (2 sqrt(d) / delta_*) * ||Sigma - Sigma_hat||_2 where delta_* is the
/// d-th eigen gap of `true_cov`. Throws DegenerateGap when the gap is not
/// strictly positive.
double davis_kahan_bound(const CovarianceEstimate& true_cov,
                         const CovarianceEstimate& est_cov, int d);

/// Safe-subspace dimension from the eigenvalue spectrum.
int select_dimension(const EigenModel& model, const DimensionStrategy& strategy);

/// Spectral norm of a symmetric matrix.
double spectral_norm_symmetric(const Mat& m);

void to_json(nlohmann::json& j, const EigenModel& m);
void from_json(const nlohmann::json& j, EigenModel& m);
void to_json(nlohmann::json& j, const Projector& p);
void from_json(const nlohmann::json& j, Projector& p);

}  // namespace subsan::linalg
