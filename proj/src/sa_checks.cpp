#include "tdlab/sa_checks.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "tdlab/errors.hpp"

namespace tdlab {

PairChain build_pair_chain(const Mdp& mdp, const Policy& policy, const PolicyChain& chain) {
  PairChain pair;
  const int n = mdp.n_states();
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      if (policy(s, a) <= 0.0) continue;
      for (int s_next = 0; s_next < n; ++s_next) {
        if (mdp.p(s, a, s_next) <= 0.0) continue;
        pair.states.push_back({s, a, s_next, mdp.r(s, a)});
      }
    }
  }
  const int m = pair.size();
  pair.P = Matrix::Zero(m, m);
  pair.eta = Vector::Zero(m);
  for (int i = 0; i < m; ++i) {
    const Transition& from = pair.states[i];
    pair.eta(i) = chain.mu(from.s) * policy(from.s, from.a) * mdp.p(from.s, from.a, from.s_next);
    for (int j = 0; j < m; ++j) {
      const Transition& to = pair.states[j];
      if (to.s != from.s_next) continue;
      pair.P(i, j) = policy(to.s, to.a) * mdp.p(to.s, to.a, to.s_next);
    }
  }
  if (!check_irreducible(pair.P)) {
    throw NotIrreducible("build_pair_chain: transition chain is not irreducible");
  }
  return pair;
}

Matrix fundamental_matrix(const Matrix& P, const Vector& eta) {
  const Eigen::Index m = P.rows();
  const Matrix I = Matrix::Identity(m, m);
  const Matrix P_star = Vector::Ones(m) * eta.transpose();
  return (I - P + P_star).partialPivLu().solve(I - P_star);
}

Matrix td_field_rows(const Vector& w, const PairChain& pair, const FeatureMap& features,
                     double gamma) {
  Matrix rows(pair.size(), features.dim());
  for (int i = 0; i < pair.size(); ++i) {
    const Transition& y = pair.states[i];
    const double td_error =
        y.reward + gamma * features.row(y.s_next).dot(w) - features.row(y.s).dot(w);
    rows.row(i) = td_error * features.row(y.s);
  }
  return rows;
}

double poisson_residual(const Vector& w, const PairChain& pair, const FeatureMap& features,
                        const TdLinearSystem& sys, double gamma) {
  if (pair.size() == 0 || features.dim() == 0) return 0.0;
  const Matrix H_w = td_field_rows(w, pair, features, gamma);
  const Matrix nu = fundamental_matrix(pair.P, pair.eta) * H_w;
  const Matrix centred = H_w - Vector::Ones(pair.size()) * sys.mean_field(w).transpose();
  return (nu - pair.P * nu - centred).cwiseAbs().maxCoeff();
}

Vector gamma_projection(const Vector& w, const FeatureMap& features, const Vector& mu) {
  const Matrix gram = features.X().transpose() * mu.asDiagonal() * features.X();
  return gram * (pseudo_inverse(gram) * w);
}

bool AssumptionReport::all_pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

std::string AssumptionReport::failures() const {
  std::string out;
  for (const auto& c : checks) {
    if (c.pass) continue;
    if (!out.empty()) out += "; ";
    out += c.name + ": " + c.detail;
  }
  return out;
}

AssumptionReport check_assumptions(const Mdp& mdp, const Policy& policy,
                                   const FeatureMap& features,
                                   const LearningRateSchedule& schedule) {
  AssumptionReport rep;
  const auto add = [&](std::string name, bool pass, std::string detail) {
    rep.checks.push_back({std::move(name), pass, std::move(detail)});
  };

  {
    std::ostringstream os;
    os << "alpha_t = " << schedule.alpha0 << "/(t+1)^" << schedule.p;
    if (!schedule.admissible()) os << "; need alpha0 > 0 and p in (0.5, 1]";
    add("learning_rate", schedule.admissible(), os.str());
  }

  const int n = mdp.n_states();
  if (features.n_states() != n || policy.n_states() != n ||
      policy.n_actions() != mdp.n_actions()) {
    add("dimensions", false, "MDP, policy and features disagree on |S| or |A|");
    return rep;
  }

  Matrix P = Matrix::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) P.row(s) += policy(s, a) * mdp.transition(a).row(s);
  }
  const bool base_ok = check_irreducible(P);
  add("irreducible_chain", base_ok,
      base_ok ? "support graph of P_pi is strongly connected"
              : "support graph of P_pi has more than one communicating class");
  if (!base_ok) {
    add("irreducible_pair_chain", false, "skipped: base chain reducible");
    return rep;
  }

  const PolicyChain chain = induce_chain(mdp, policy);
  const double gamma = mdp.discount();
  const PairChain pair = build_pair_chain(mdp, policy, chain);
  add("irreducible_pair_chain", check_irreducible(pair.P),
      std::to_string(pair.size()) + " transition states");

  double max_feature = 0.0;
  for (int s = 0; s < n; ++s) max_feature = std::max(max_feature, features.row(s).norm());
  rep.lipschitz.reserve(pair.size());
  for (const Transition& y : pair.states) {
    const double xs = features.row(y.s).norm();
    rep.growth_bound = std::max(rep.growth_bound, xs * (std::abs(y.reward) + (1.0 + gamma) * max_feature));
    rep.lipschitz.push_back(
        xs * (gamma * features.row(y.s_next) - features.row(y.s)).norm());
  }
  {
    std::ostringstream os;
    os.precision(17);
    os << "K1 = " << rep.growth_bound;
    add("linear_growth", std::isfinite(rep.growth_bound), os.str());
  }
  {
    double l_max = 0.0;
    bool finite = true;
    for (double l : rep.lipschitz) {
      finite = finite && std::isfinite(l);
      l_max = std::max(l_max, l);
    }
    std::ostringstream os;
    os.precision(17);
    os << "max_y L(y) = " << l_max;
    add("lipschitz_field", finite, os.str());
  }

  const TdLinearSystem sys = build_system(chain, features, gamma);
  {
    double max_sym = 0.0;
    double max_re = -std::numeric_limits<double>::infinity();
    if (sys.dim() > 0) {
      const Matrix sym = 0.5 * (sys.A + sys.A.transpose());
      max_sym = Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly)
                    .eigenvalues()
                    .maxCoeff();
      const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(sys.A, false).eigenvalues();
      for (Eigen::Index i = 0; i < ev.size(); ++i) max_re = std::max(max_re, ev(i).real());
    } else {
      max_re = 0.0;
    }
    const double tol = 1e-10 * std::max(1.0, sys.A.norm());
    std::ostringstream os;
    os.precision(17);
    os << "max eig(sym A) = " << max_sym << ", max Re(lambda(A)) = " << max_re;
    add("A_negative_semidefinite", max_sym <= tol && max_re <= tol, os.str());
  }
  {
    const Matrix M = chain.mu.asDiagonal() * (gamma * chain.P - Matrix::Identity(n, n));
    const double max_sym =
        Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly)
            .eigenvalues()
            .maxCoeff();
    std::ostringstream os;
    os.precision(17);
    os << "max eig(sym D(gamma P - I)) = " << max_sym;
    add("D_gammaP_minus_I_negative_definite", max_sym < 0.0, os.str());
  }
  return rep;
}

}  // namespace tdlab
