#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "tdlab/fixed_points.hpp"

namespace tdlab {

/// exp(M t) by scaling and squaring with a Pade approximant.
Matrix matrix_exponential(const Matrix& M, double t);

struct EigenvalueCluster {
  std::complex<double> value;
  int multiplicity;
};

/// lim_{t -> inf} exp(A t) for a TD matrix A, together with the spectrum
/// it was derived from.
struct OdeLimit {
  Matrix A_inf;
  std::vector<EigenvalueCluster> spectrum_report;
  int rank_A = 0;
  /// min |Re(lambda)| over eigenvalues with Re(lambda) < 0; empty when A
  /// has no such eigenvalue (A = 0).
  std::optional<double> spectral_gap;
};

/// Closed-form solution w_* + exp(A t)(w0 - w_*) of dw/dt = Aw + b.
/// Negative t integrates backwards.
Vector ode_solution(const TdLinearSystem& sys, const FixedPointSet& fps, const Vector& w0,
                    double t);

struct OdeTrajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  Vector w0;
};

/// Fixed-step classic RK4 on dw/dt = Aw + b. Every `record_every`-th state
/// is kept, plus the endpoint.
OdeTrajectory rk4_trajectory(const TdLinearSystem& sys, const Vector& w0, double step,
                             double horizon, int record_every = 1);

/// Grid evaluation of the closed form on [0, horizon] with `points` samples.
OdeTrajectory closed_form_trajectory(const TdLinearSystem& sys, const FixedPointSet& fps,
                                     const Vector& w0, double horizon, int points);

/// Eigenvalues of A grouped within 1e-8, sorted by real part descending.
std::vector<EigenvalueCluster> spectrum(const Matrix& A);

/// A_inf as the oblique projector onto ker(A) along range(A).
/// Throws ZeroEigenvalueNotSemisimple when rank(A) != rank(A^2).
OdeLimit limit_projector(const TdLinearSystem& sys);

/// A_inf (w0 - w_*) + w_*: the point of the fixed-point set the mean ODE
/// started at w0 converges to.
Vector w_infinity(const OdeLimit& lim, const FixedPointSet& fps, const Vector& w0);

struct BoundedInvariantReport {
  double forward_horizon = 0.0;
  double backward_horizon = 0.0;
  /// First grid time at which the backward arc left the bound, or
  /// backward_horizon when it never did.
  double backward_exit_time = 0.0;
  double forward_sup = 0.0;
  double backward_sup = 0.0;
  double forward_max_deviation = 0.0;   ///< sup ||w(t) - w0|| on the forward arc
  double backward_max_deviation = 0.0;  ///< same on the (possibly truncated) backward arc
  double forward_endpoint_error = 0.0;  ///< ||w(forward_horizon) - w_inf(w0)||
  double distance_to_fixed_set = 0.0;
  double bound = 0.0;                   ///< 10 ||w0|| + 10
  bool backward_bounded = false;
  bool forward_converged = false;
  /// Bounded backward arc implies w0 is within 1e-6 of the fixed-point set.
  bool consistent = false;
};

/// Follows the closed form forward over [0, horizon] and backward over
/// [-horizon, 0] on a `points`-sample grid each way. The backward sweep stops
/// as soon as the arc leaves the bound.
BoundedInvariantReport bounded_invariant_check(const TdLinearSystem& sys, const FixedPointSet& fps,
                                               const OdeLimit& lim, const Vector& w0,
                                               double horizon, int points = 2000);

/// Same, with separate horizons. Round-off in w0 off the fixed-point set grows
/// like exp(|lambda_max| t) backwards, so the backward horizon usually has to
/// be much shorter than the time the forward arc needs to settle.
BoundedInvariantReport bounded_invariant_check(const TdLinearSystem& sys, const FixedPointSet& fps,
                                               const OdeLimit& lim, const Vector& w0,
                                               double forward_horizon, double backward_horizon,
                                               int points);

}  // namespace tdlab
