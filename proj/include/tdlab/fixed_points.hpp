#pragma once

#include <utility>

#include "tdlab/linalg_proj.hpp"
#include "tdlab/markov_core.hpp"

namespace tdlab {

/// A = X^T D (gamma P_pi - I) X, b = X^T D r_pi. The expected TD update at w
/// is proportional to the mean field h(w) = Aw + b.
struct TdLinearSystem {
  Matrix A;
  Vector b;

  Vector mean_field(const Vector& w) const { return A * w + b; }
  int dim() const { return static_cast<int>(b.size()); }
};

TdLinearSystem build_system(const PolicyChain& chain, const FeatureMap& features, double gamma);

/// The affine set of TD fixed points {w : Aw + b = 0}, stored as the
/// least-norm solution plus an orthonormal basis of its direction space.
/// The direction space is ker(A), which coincides with ker(X).
struct FixedPointSet {
  Vector w_particular;
  Matrix null_basis;  ///< d x k, orthonormal columns
  Vector v_star;      ///< X w for every w in the set

  int null_dim() const { return static_cast<int>(null_basis.cols()); }
  /// w_particular + N c.
  Vector point(const Vector& coefficients) const {
    return w_particular + null_basis * coefficients;
  }
};

/// Fixed point of Pi T found by plain iteration from zero. Stops when
/// ||v_{k+1} - v_k||_D <= 1e-13 or after 1e5 sweeps.
Vector projected_bellman_fixed_point(const PolicyChain& chain, const Projector& proj,
                                     double gamma);

/// Solves Aw + b = 0 through the pseudo-inverse and cross-checks the value
/// X w against the Pi T iteration. Throws InconsistentSystem when the
/// least-norm solution leaves a residual above 1e-8 (1 + ||b||), and
/// CrossCheckFailure when the two value routes disagree.
FixedPointSet solve_fixed_points(const TdLinearSystem& sys, const FeatureMap& features,
                                 const PolicyChain& chain, double gamma);

/// ||Pi (T Xw - Xw)||_D^2.
double mspbe(const Vector& w, const FeatureMap& features, const Projector& proj,
             const PolicyChain& chain, double gamma);

struct EquivalenceResiduals {
  double linear;     ///< ||Aw + b||
  double projected;  ///< ||Pi T Xw - Xw||_D
};

EquivalenceResiduals check_equivalence(const Vector& w, const TdLinearSystem& sys,
                                       const FeatureMap& features, const Projector& proj,
                                       const PolicyChain& chain, double gamma);

/// Euclidean distance from w to the affine fixed-point set.
double distance_to_fixed_set(const Vector& w, const FixedPointSet& fps);

}  // namespace tdlab
