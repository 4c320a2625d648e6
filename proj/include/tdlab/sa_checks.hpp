#pragma once

#include <string>
#include <vector>

#include "tdlab/fixed_points.hpp"
#include "tdlab/markov_core.hpp"
#include "tdlab/schedule.hpp"

namespace tdlab {

struct Transition {
  int s;
  int a;
  int s_next;
  double reward;
};

/// The chain of transitions Y_t = (S_t, A_t, S_{t+1}) restricted to triples
/// with positive probability.
struct PairChain {
  std::vector<Transition> states;
  Matrix P;    ///< P((s,a,s'), (s',a'',s''')) = pi(a''|s') p(s'''|s',a'')
  Vector eta;  ///< mu(s) pi(a|s) p(s'|s,a)

  int size() const { return static_cast<int>(states.size()); }
};

/// Throws NotIrreducible if the resulting pair chain is not irreducible.
PairChain build_pair_chain(const Mdp& mdp, const Policy& policy, const PolicyChain& chain);

/// Deviation matrix (I - P + P*)^{-1} (I - P*), P* = 1 eta^T. Solves the
/// Poisson equation (I - P) H = I - P* with H 1 = 0.
Matrix fundamental_matrix(const Matrix& P, const Vector& eta);

/// Rows H(w, y)^T = (r(s,a) + gamma w^T x(s') - w^T x(s)) x(s)^T, one per
/// pair state.
Matrix td_field_rows(const Vector& w, const PairChain& pair, const FeatureMap& features,
                     double gamma);

/// max |nu - P nu - (H_w - 1 (Aw + b)^T)| with nu = H H_w.
double poisson_residual(const Vector& w, const PairChain& pair, const FeatureMap& features,
                        const TdLinearSystem& sys, double gamma);

/// Gamma(w) = X^T D X (X^T D X)^+ w, the orthogonal projection onto the row
/// space of X^T D X.
Vector gamma_projection(const Vector& w, const FeatureMap& features, const Vector& mu);

struct AssumptionCheck {
  std::string name;
  bool pass;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  double growth_bound = 0.0;          ///< K1 in ||H(w,y)|| <= K1 (1 + ||w||)
  std::vector<double> lipschitz;      ///< L(y) per pair state
  bool all_pass() const;
  std::string failures() const;
};

AssumptionReport check_assumptions(const Mdp& mdp, const Policy& policy,
                                   const FeatureMap& features,
                                   const LearningRateSchedule& schedule);

}  // namespace tdlab
