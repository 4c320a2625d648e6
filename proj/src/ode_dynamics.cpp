#include "tdlab/ode_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>

#include "tdlab/errors.hpp"

namespace tdlab {

Matrix matrix_exponential(const Matrix& M, double t) {
  if (M.rows() != M.cols()) throw DimensionMismatch("matrix_exponential: matrix is not square");
  if (M.size() == 0) return M;
  const Matrix scaled = M * t;
  return scaled.exp();
}

Vector ode_solution(const TdLinearSystem& sys, const FixedPointSet& fps, const Vector& w0,
                    double t) {
  if (w0.size() != sys.dim()) throw DimensionMismatch("ode_solution: w0 has wrong size");
  if (t == 0.0) return w0;
  return fps.w_particular + matrix_exponential(sys.A, t) * (w0 - fps.w_particular);
}

OdeTrajectory rk4_trajectory(const TdLinearSystem& sys, const Vector& w0, double step,
                             double horizon, int record_every) {
  if (!(step > 0.0) || !(horizon >= step)) {
    throw DimensionMismatch("rk4_trajectory: need step > 0 and horizon >= step");
  }
  if (record_every < 1) record_every = 1;
  const auto field = [&](const Vector& w) { return sys.mean_field(w); };
  const long n_steps = static_cast<long>(std::ceil(horizon / step - 1e-9));

  OdeTrajectory traj;
  traj.w0 = w0;
  traj.times.push_back(0.0);
  traj.states.push_back(w0);
  Vector w = w0;
  for (long k = 1; k <= n_steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * step;
    const double h = k == n_steps ? horizon - t_prev : step;
    const Vector k1 = field(w);
    const Vector k2 = field(w + 0.5 * h * k1);
    const Vector k3 = field(w + 0.5 * h * k2);
    const Vector k4 = field(w + h * k3);
    w += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (k % record_every == 0 || k == n_steps) {
      traj.times.push_back(k == n_steps ? horizon : static_cast<double>(k) * step);
      traj.states.push_back(w);
    }
  }
  return traj;
}

OdeTrajectory closed_form_trajectory(const TdLinearSystem& sys, const FixedPointSet& fps,
                                     const Vector& w0, double horizon, int points) {
  points = std::max(points, 2);
  OdeTrajectory traj;
  traj.w0 = w0;
  // One exponential per grid step, reused by repeated multiplication.
  const double dt = horizon / (points - 1);
  const Matrix step = matrix_exponential(sys.A, dt);
  Vector z = w0 - fps.w_particular;
  for (int i = 0; i < points; ++i) {
    traj.times.push_back(i == points - 1 ? horizon : dt * i);
    traj.states.push_back(i == 0 ? w0 : Vector(fps.w_particular + z));
    z = step * z;
  }
  return traj;
}

std::vector<EigenvalueCluster> spectrum(const Matrix& A) {
  std::vector<EigenvalueCluster> clusters;
  if (A.size() == 0) return clusters;
  Eigen::EigenSolver<Matrix> solver(A, false);
  std::vector<std::complex<double>> values(solver.eigenvalues().begin(),
                                           solver.eigenvalues().end());
  std::sort(values.begin(), values.end(), [](const auto& x, const auto& y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
  const double scale = std::max(1.0, A.norm());
  for (const auto& v : values) {
    auto it = std::find_if(clusters.begin(), clusters.end(), [&](const EigenvalueCluster& c) {
      return std::abs(c.value - v) <= 1e-8 * scale;
    });
    if (it == clusters.end()) {
      clusters.push_back({v, 1});
    } else {
      ++it->multiplicity;
    }
  }
  return clusters;
}

OdeLimit limit_projector(const TdLinearSystem& sys) {
  const Matrix& A = sys.A;
  const Eigen::Index d = A.rows();
  OdeLimit lim;
  lim.spectrum_report = spectrum(A);
  lim.rank_A = numerical_rank(A);
  const int rank_sq = numerical_rank(A * A);
  if (rank_sq != lim.rank_A) {
    throw ZeroEigenvalueNotSemisimple("limit_projector: rank(A) = " + std::to_string(lim.rank_A) +
                                      " but rank(A^2) = " + std::to_string(rank_sq));
  }

  const Matrix K = null_space_basis(A);
  const Matrix R = range_basis(A);
  const Eigen::Index k = K.cols();
  Matrix basis(d, d);
  basis << K, R;
  // Coordinates of each unit vector in [K | R]; keeping only the kernel part
  // gives the projector onto ker(A) along range(A).
  const Matrix coords = basis.fullPivLu().inverse();
  lim.A_inf = K * coords.topRows(k);

  if (lim.rank_A > 0) {
    Eigen::EigenSolver<Matrix> solver(A, false);
    std::vector<std::complex<double>> values(solver.eigenvalues().begin(),
                                             solver.eigenvalues().end());
    std::sort(values.begin(), values.end(),
              [](const auto& x, const auto& y) { return std::abs(x) < std::abs(y); });
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = static_cast<std::size_t>(k); i < values.size(); ++i) {
      gap = std::min(gap, std::abs(values[i].real()));
    }
    lim.spectral_gap = gap;
  }
  return lim;
}

Vector w_infinity(const OdeLimit& lim, const FixedPointSet& fps, const Vector& w0) {
  return lim.A_inf * (w0 - fps.w_particular) + fps.w_particular;
}

BoundedInvariantReport bounded_invariant_check(const TdLinearSystem& sys, const FixedPointSet& fps,
                                               const OdeLimit& lim, const Vector& w0,
                                               double horizon, int points) {
  return bounded_invariant_check(sys, fps, lim, w0, horizon, horizon, points);
}

BoundedInvariantReport bounded_invariant_check(const TdLinearSystem& sys, const FixedPointSet& fps,
                                               const OdeLimit& lim, const Vector& w0,
                                               double forward_horizon, double backward_horizon,
                                               int points) {
  points = std::max(points, 2);
  BoundedInvariantReport rep;
  rep.forward_horizon = forward_horizon;
  rep.backward_horizon = backward_horizon;
  rep.bound = 10.0 * w0.norm() + 10.0;
  rep.distance_to_fixed_set = distance_to_fixed_set(w0, fps);
  // exp(At) fixes A_inf z0, so only the transient part is stepped; this keeps
  // per-step rounding proportional to the transient instead of the whole state.
  const Vector z0 = w0 - fps.w_particular;
  const Vector rest = fps.w_particular + lim.A_inf * z0;
  const Vector t0 = z0 - lim.A_inf * z0;

  const Matrix fwd_step = matrix_exponential(sys.A, forward_horizon / (points - 1));
  Vector z = t0;
  for (int i = 0; i < points; ++i) {
    const Vector w = rest + z;
    rep.forward_sup = std::max(rep.forward_sup, w.norm());
    rep.forward_max_deviation = std::max(rep.forward_max_deviation, (w - w0).norm());
    if (i + 1 < points) z = fwd_step * z;
  }
  rep.forward_endpoint_error = (rest + z - w_infinity(lim, fps, w0)).norm();
  rep.forward_converged = rep.forward_endpoint_error <= 1e-6 * (1.0 + w0.norm());

  const Matrix bwd_step = matrix_exponential(sys.A, -backward_horizon / (points - 1));
  z = t0;
  rep.backward_bounded = true;
  rep.backward_exit_time = backward_horizon;
  for (int i = 0; i < points; ++i) {
    const Vector w = rest + z;
    const double norm = w.norm();
    rep.backward_sup = std::max(rep.backward_sup, std::isfinite(norm) ? norm : HUGE_VAL);
    rep.backward_max_deviation =
        std::max(rep.backward_max_deviation, std::isfinite(norm) ? (w - w0).norm() : HUGE_VAL);
    if (!(rep.backward_sup <= rep.bound)) {
      rep.backward_bounded = false;
      rep.backward_exit_time = backward_horizon * i / (points - 1);
      break;
    }
    if (i + 1 < points) z = bwd_step * z;
  }
  rep.consistent = !rep.backward_bounded || rep.distance_to_fixed_set <= 1e-6;
  return rep;
}

}  // namespace tdlab
