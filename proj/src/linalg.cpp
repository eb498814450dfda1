#include "subsan/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

namespace subsan::linalg {

namespace {

constexpr double kSymTol = 1e-12;   // relative symmetry tolerance
constexpr double kSignTol = 1e-12;  // "first nonzero entry" threshold

void fix_sign(Eigen::Ref<Vec> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > kSignTol) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

// Lexicographic "greater" on vectors, used to order eigenvectors within a
// degenerate eigenvalue block deterministically.
bool lex_greater(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

}  // namespace

CovarianceEstimate empirical_covariance(const std::vector<Vec>& samples, bool center) {
  if (samples.empty()) throw InvalidInput("empirical_covariance: empty sample list");
  const Eigen::Index d = samples.front().size();
  for (const Vec& s : samples) {
    if (s.size() != d)
      throw DimensionMismatch("empirical_covariance: inconsistent sample dimensions");
  }
  const double n = static_cast<double>(samples.size());
  Vec mean = Vec::Zero(d);
  if (center) {
    for (const Vec& s : samples) mean += s;
    mean /= n;
  }
  Mat cov = Mat::Zero(d, d);
  for (const Vec& s : samples) {
    Vec c = s - mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= n;
  cov = (0.5 * (cov + cov.transpose())).eval();  // scrub accumulation asymmetry
  return {std::move(cov), static_cast<long>(samples.size()), std::move(mean)};
}

EigenModel eigendecompose(const CovarianceEstimate& cov) {
  const Mat& m = cov.matrix;
  if (m.rows() != m.cols()) throw InvalidInput("eigendecompose: matrix not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymTol * scale)
    throw InvalidInput("eigendecompose: matrix not symmetric within tolerance");

  Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (m + m.transpose()));
  if (solver.info() != Eigen::Success)
    throw InvalidInput("eigendecompose: eigensolver failed to converge");

  const Eigen::Index d = m.rows();
  // Eigen returns ascending order; flip to descending.
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());

  Vec values(d);
  Mat vectors(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    values[i] = solver.eigenvalues()[order[i]];
    vectors.col(i) = solver.eigenvectors().col(order[i]);
    fix_sign(vectors.col(i));
  }

  // Deterministic ordering inside degenerate blocks.
  const double tie_tol = 1e-12 * std::max(1.0, std::abs(values[0]));
  Eigen::Index block = 0;
  while (block < d) {
    Eigen::Index end = block + 1;
    while (end < d && values[block] - values[end] <= tie_tol) ++end;
    if (end - block > 1) {
      std::vector<Eigen::Index> idx(end - block);
      std::iota(idx.begin(), idx.end(), block);
      std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        return lex_greater(vectors.col(a), vectors.col(b));
      });
      Mat sorted(d, end - block);
      for (Eigen::Index k = 0; k < end - block; ++k) sorted.col(k) = vectors.col(idx[k]);
      vectors.middleCols(block, end - block) = sorted;
    }
    block = end;
  }
  return {std::move(values), std::move(vectors)};
}

Projector projector(const EigenModel& model, int d) {
  if (d < 1 || d > model.dim())
    throw InvalidInput("projector: d out of range [1, D]");
  return projector_from_basis(model.eigenvectors.leftCols(d));
}

Projector projector_from_basis(const Mat& basis) {
  if (basis.rows() < basis.cols())
    throw InvalidInput("projector_from_basis: more columns than ambient dimensions");
  const Mat gram = basis.transpose() * basis;
  const Eigen::Index d = basis.cols();
  if (d > 0 && (gram - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8)
    throw InvalidInput("projector_from_basis: columns are not orthonormal");
  Mat p = basis * basis.transpose();
  p = (0.5 * (p + p.transpose())).eval();
  return {basis, std::move(p)};
}

Mat orthonormal_complement(const Mat& basis) {
  const Eigen::Index dim = basis.rows();
  const Eigen::Index d = basis.cols();
  Eigen::HouseholderQR<Mat> qr(basis);
  Mat q = qr.householderQ() * Mat::Identity(dim, dim);
  return q.rightCols(dim - d);
}

namespace {
void check_compatible(const Projector& p, const Projector& q) {
  if (p.ambient_dim() != q.ambient_dim())
    throw DimensionMismatch("projector pair: ambient dimensions differ");
  if (p.rank() != q.rank())
    throw DimensionMismatch("projector pair: subspace dimensions differ");
}
}  // namespace

double projector_distance(const Projector& p, const Projector& q) {
  check_compatible(p, q);
  return spectral_norm_symmetric(p.matrix - q.matrix);
}

double projector_distance_frobenius(const Projector& p, const Projector& q) {
  check_compatible(p, q);
  return (p.matrix - q.matrix).norm();
}

double sin_theta_frobenius(const Projector& p, const Projector& q) {
  check_compatible(p, q);
  Eigen::JacobiSVD<Mat> svd(p.basis.transpose() * q.basis);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    const double c = std::min(1.0, svd.singularValues()[i]);
    sum += 1.0 - c * c;
  }
  return std::sqrt(std::max(0.0, sum));
}

double davis_kahan_bound(const CovarianceEstimate& true_cov,
                         const CovarianceEstimate& est_cov, int d) {
  if (true_cov.dim() != est_cov.dim())
    throw DimensionMismatch("davis_kahan_bound: covariance dimensions differ");
  EigenModel model = eigendecompose(true_cov);
  if (d < 1 || d >= model.dim())
    throw InvalidInput("davis_kahan_bound: need 1 <= d < D");
  const double gap = model.eigenvalues[d - 1] - model.eigenvalues[d];
  if (gap <= 0.0)
    throw DegenerateGap("davis_kahan_bound: eigen gap lambda_d - lambda_{d+1} <= 0");
  const double diff = spectral_norm_symmetric(true_cov.matrix - est_cov.matrix);
  return 2.0 * std::sqrt(static_cast<double>(d)) / gap * diff;
}

int select_dimension(const EigenModel& model, const DimensionStrategy& strategy) {
  const Vec& lam = model.eigenvalues;
  const int dim = model.dim();
  if (strategy.kind == DimensionStrategyKind::AbsoluteThreshold) {
    int d = 0;
    while (d < dim && lam[d] >= strategy.tau) ++d;
    if (d == 0)
      throw EmptySubspace("select_dimension: no eigenvalue reaches threshold");
    return d;
  }
  // Largest relative gap: argmax_i lambda_i / lambda_{i+1} over i with
  // lambda_{i+1} > 0. Falls back to the positive-eigenvalue count when no
  // ratio is defined.
  int best = -1;
  double best_ratio = -1.0;
  for (int i = 0; i + 1 < dim; ++i) {
    if (lam[i + 1] > 0.0) {
      const double ratio = lam[i] / lam[i + 1];
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = i + 1;  // keep eigenvalues up to and including index i
      }
    }
  }
  if (best < 0) {
    int d = 0;
    while (d < dim && lam[d] > 0.0) ++d;
    if (d == 0) throw EmptySubspace("select_dimension: spectrum has no positive mass");
    return d;
  }
  return best;
}

double spectral_norm_symmetric(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (m + m.transpose()),
                                            Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

nlohmann::json matrix_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

}  // namespace

void to_json(nlohmann::json& j, const EigenModel& m) {
  j = nlohmann::json{{"dim", m.dim()},
                     {"eigenvalues", std::vector<double>(
                          m.eigenvalues.data(), m.eigenvalues.data() + m.eigenvalues.size())},
                     {"eigenvectors", matrix_to_json(m.eigenvectors)}};
}

void from_json(const nlohmann::json& j, EigenModel& m) {
  const auto values = j.at("eigenvalues").get<std::vector<double>>();
  m.eigenvalues = Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
  m.eigenvectors = matrix_from_json(j.at("eigenvectors"));
}

void to_json(nlohmann::json& j, const Projector& p) {
  j = nlohmann::json{{"dim", p.ambient_dim()},
                     {"d", p.rank()},
                     {"basis", matrix_to_json(p.basis)}};
}

void from_json(const nlohmann::json& j, Projector& p) {
  Mat basis = matrix_from_json(j.at("basis"));
  p = projector_from_basis(basis);
}

}  // namespace subsan::linalg
