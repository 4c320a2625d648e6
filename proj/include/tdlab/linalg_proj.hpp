#pragma once

#include <Eigen/Dense>

#include "tdlab/markov_core.hpp"

namespace tdlab {

/// Singular values at or below this are treated as zero:
/// max(m, n) * sigma_max * machine_epsilon * 16.
double rank_cutoff(const Vector& singular_values, Eigen::Index rows, Eigen::Index cols);

int numerical_rank(const Matrix& M);

/// Moore-Penrose pseudo-inverse from the SVD. Total: the zero matrix maps to
/// the zero matrix of transposed shape.
Matrix pseudo_inverse(const Matrix& M);

/// Orthonormal basis of ker(M), possibly with zero columns.
Matrix null_space_basis(const Matrix& M);

/// Orthonormal basis of range(M), possibly with zero columns.
Matrix range_basis(const Matrix& M);

/// Positive diagonal weighting D = diag(mu).
class Weighting {
 public:
  explicit Weighting(Vector diagonal);

  Eigen::Index size() const { return diag_.size(); }
  const Vector& diagonal() const { return diag_; }
  const Vector& sqrt_diagonal() const { return sqrt_diag_; }
  Matrix matrix() const { return diag_.asDiagonal(); }

 private:
  Vector diag_;
  Vector sqrt_diag_;
};

/// Feature matrix X (row s is x(s)^T). No rank or independence assumptions.
class FeatureMap {
 public:
  explicit FeatureMap(Matrix X);

  const Matrix& X() const { return X_; }
  int n_states() const { return static_cast<int>(X_.rows()); }
  int dim() const { return static_cast<int>(X_.cols()); }
  int rank() const { return rank_; }
  auto row(int s) const { return X_.row(s); }

 private:
  Matrix X_;
  int rank_;
};

/// ||v||_D = sqrt(v^T D v).
double d_norm(const Vector& v, const Weighting& D);

/// The minimiser of ||Xw - v||_D with the smallest Euclidean norm:
/// (D^{1/2} X)^+ D^{1/2} v.
Vector least_norm_weight(const FeatureMap& features, const Weighting& D, const Vector& v);

/// D-weighted projection onto the column space of X that selects the
/// least-norm weight when X is rank deficient: Pi = X (D^{1/2} X)^+ D^{1/2}.
struct Projector {
  Matrix Pi;
  Vector weights;  ///< diagonal of the D it was built with

  Vector apply(const Vector& v) const { return Pi * v; }
};

Projector projection_matrix(const FeatureMap& features, const Weighting& D);

}  // namespace tdlab
