#include "tdlab/linalg_proj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tdlab/errors.hpp"

namespace tdlab {
namespace {

int count_above(const Vector& sv, double cutoff) {
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++r;
  }
  return r;
}

}  // namespace

double rank_cutoff(const Vector& singular_values, Eigen::Index rows, Eigen::Index cols) {
  const double sigma_max = singular_values.size() > 0 ? singular_values.maxCoeff() : 0.0;
  return static_cast<double>(std::max(rows, cols)) * sigma_max *
         std::numeric_limits<double>::epsilon() * 16.0;
}

int numerical_rank(const Matrix& M) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const Vector& sv = svd.singularValues();
  return count_above(sv, rank_cutoff(sv, M.rows(), M.cols()));
}

Matrix pseudo_inverse(const Matrix& M) {
  Matrix result = Matrix::Zero(M.cols(), M.rows());
  if (M.size() == 0) return result;
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff = rank_cutoff(sv, M.rows(), M.cols());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) {
      result.noalias() += (svd.matrixV().col(i) / sv(i)) * svd.matrixU().col(i).transpose();
    }
  }
  return result;
}

Matrix null_space_basis(const Matrix& M) {
  const Eigen::Index n = M.cols();
  if (M.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const int r = count_above(sv, rank_cutoff(sv, M.rows(), M.cols()));
  return svd.matrixV().rightCols(n - r);
}

Matrix range_basis(const Matrix& M) {
  const Eigen::Index m = M.rows();
  if (M.cols() == 0) return Matrix::Zero(m, 0);
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU);
  const Vector& sv = svd.singularValues();
  const int r = count_above(sv, rank_cutoff(sv, M.rows(), M.cols()));
  return svd.matrixU().leftCols(r);
}

Weighting::Weighting(Vector diagonal) : diag_(std::move(diagonal)) {
  if (diag_.size() == 0 || !diag_.allFinite() || diag_.minCoeff() <= 0.0) {
    throw InvalidStochastic("Weighting: diagonal must be finite and strictly positive");
  }
  sqrt_diag_ = diag_.cwiseSqrt();
}

FeatureMap::FeatureMap(Matrix X) : X_(std::move(X)) {
  if (X_.rows() < 1) throw DimensionMismatch("FeatureMap: need at least one state");
  if (!X_.allFinite()) throw DimensionMismatch("FeatureMap: non-finite feature");
  rank_ = X_.cols() == 0 ? 0 : numerical_rank(X_);
}

double d_norm(const Vector& v, const Weighting& D) {
  if (v.size() != D.size()) throw DimensionMismatch("d_norm: size mismatch");
  return std::sqrt(v.dot(D.diagonal().cwiseProduct(v)));
}

Vector least_norm_weight(const FeatureMap& features, const Weighting& D, const Vector& v) {
  if (v.size() != features.n_states() || D.size() != features.n_states()) {
    throw DimensionMismatch("least_norm_weight: expected " + std::to_string(features.n_states()) +
                            " states");
  }
  const Matrix scaled = D.sqrt_diagonal().asDiagonal() * features.X();
  return pseudo_inverse(scaled) * D.sqrt_diagonal().cwiseProduct(v);
}

Projector projection_matrix(const FeatureMap& features, const Weighting& D) {
  if (D.size() != features.n_states()) {
    throw DimensionMismatch("projection_matrix: weighting has " + std::to_string(D.size()) +
                            " entries, features have " + std::to_string(features.n_states()) +
                            " rows");
  }
  const auto sqrt_d = D.sqrt_diagonal().asDiagonal();
  const Matrix scaled = sqrt_d * features.X();
  Projector proj;
  proj.Pi = features.X() * pseudo_inverse(scaled) * sqrt_d;
  proj.weights = D.diagonal();
  return proj;
}

}  // namespace tdlab
