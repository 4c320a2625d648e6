#include "tdlab/fixed_points.hpp"

#include <string>

#include "tdlab/errors.hpp"

namespace tdlab {

TdLinearSystem build_system(const PolicyChain& chain, const FeatureMap& features, double gamma) {
  const int n = chain.n_states();
  if (features.n_states() != n) {
    throw DimensionMismatch("build_system: features have " + std::to_string(features.n_states()) +
                            " rows, chain has " + std::to_string(n) + " states");
  }
  const Matrix& X = features.X();
  const Matrix XtD = X.transpose() * chain.mu.asDiagonal();
  TdLinearSystem sys;
  sys.A = XtD * (gamma * chain.P - Matrix::Identity(n, n)) * X;
  sys.b = XtD * chain.r;
  return sys;
}

Vector projected_bellman_fixed_point(const PolicyChain& chain, const Projector& proj,
                                     double gamma) {
  const Weighting D(chain.mu);
  Vector v = Vector::Zero(chain.n_states());
  for (int k = 0; k < 100000; ++k) {
    Vector next = proj.apply(bellman_apply(chain, gamma, v));
    const double step = d_norm(next - v, D);
    v = std::move(next);
    if (step <= 1e-13) break;
  }
  return v;
}

FixedPointSet solve_fixed_points(const TdLinearSystem& sys, const FeatureMap& features,
                                 const PolicyChain& chain, double gamma) {
  FixedPointSet fps;
  fps.w_particular = pseudo_inverse(sys.A) * (-sys.b);
  const double residual = (sys.A * fps.w_particular + sys.b).norm();
  if (residual > 1e-8 * (1.0 + sys.b.norm())) {
    throw InconsistentSystem("solve_fixed_points: ||A w + b|| = " + std::to_string(residual));
  }
  fps.null_basis = null_space_basis(sys.A);
  fps.v_star = features.X() * fps.w_particular;

  const Projector proj = projection_matrix(features, Weighting(chain.mu));
  const Vector v_iter = projected_bellman_fixed_point(chain, proj, gamma);
  const double gap = (v_iter - fps.v_star).lpNorm<Eigen::Infinity>();
  if (gap > 1e-9 * (1.0 + fps.v_star.lpNorm<Eigen::Infinity>())) {
    throw CrossCheckFailure("solve_fixed_points: X w_particular and the Pi T fixed point differ by " +
                            std::to_string(gap));
  }
  return fps;
}

double mspbe(const Vector& w, const FeatureMap& features, const Projector& proj,
             const PolicyChain& chain, double gamma) {
  const Vector value = features.X() * w;
  const Vector err = proj.apply(bellman_apply(chain, gamma, value) - value);
  return err.dot(chain.mu.cwiseProduct(err));
}

EquivalenceResiduals check_equivalence(const Vector& w, const TdLinearSystem& sys,
                                       const FeatureMap& features, const Projector& proj,
                                       const PolicyChain& chain, double gamma) {
  const Vector value = features.X() * w;
  const Vector diff = proj.apply(bellman_apply(chain, gamma, value)) - value;
  return {sys.mean_field(w).norm(), d_norm(diff, Weighting(chain.mu))};
}

double distance_to_fixed_set(const Vector& w, const FixedPointSet& fps) {
  const Vector offset = w - fps.w_particular;
  return (offset - fps.null_basis * (fps.null_basis.transpose() * offset)).norm();
}

}  // namespace tdlab
