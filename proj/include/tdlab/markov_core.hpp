#pragma once

#include <Eigen/Dense>
#include <vector>

namespace tdlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kStochasticTol = 1e-12;
inline constexpr double kSupportThreshold = 1e-15;

/// Finite MDP with deterministic rewards r(s, a).
///
/// `transition[a](s, s')` is p(s' | s, a). Construction validates every row
/// and the discount factor; an Mdp that exists is always well formed.
class Mdp {
 public:
  Mdp(std::vector<Matrix> transition, Matrix reward, double discount);

  int n_states() const { return static_cast<int>(reward_.rows()); }
  int n_actions() const { return static_cast<int>(reward_.cols()); }
  double discount() const { return discount_; }

  const Matrix& transition(int action) const { return transition_[action]; }
  double p(int s, int a, int s_next) const { return transition_[a](s, s_next); }
  const Matrix& reward() const { return reward_; }
  double r(int s, int a) const { return reward_(s, a); }

 private:
  std::vector<Matrix> transition_;
  Matrix reward_;
  double discount_;
};

/// Stationary policy, `probs(s, a)` = pi(a | s).
class Policy {
 public:
  explicit Policy(Matrix probs);

  static Policy uniform(int n_states, int n_actions);

  int n_states() const { return static_cast<int>(probs_.rows()); }
  int n_actions() const { return static_cast<int>(probs_.cols()); }
  double operator()(int s, int a) const { return probs_(s, a); }
  const Matrix& probs() const { return probs_; }

 private:
  Matrix probs_;
};

/// Markov chain induced by running a policy in an MDP.
struct PolicyChain {
  Matrix P;   ///< P_pi(s, s') = sum_a pi(a|s) p(s'|s,a)
  Vector r;   ///< r_pi(s) = sum_a pi(a|s) r(s,a)
  Vector mu;  ///< stationary distribution, strictly positive

  int n_states() const { return static_cast<int>(P.rows()); }
  Matrix D() const { return mu.asDiagonal(); }
};

/// Builds P_pi, r_pi and the stationary distribution.
/// Throws InvalidStochastic, DimensionMismatch or NotIrreducible.
PolicyChain induce_chain(const Mdp& mdp, const Policy& policy);

/// True iff the support graph of P (entries > 1e-15) is strongly connected.
bool check_irreducible(const Matrix& P);

/// Stationary distribution of an irreducible stochastic matrix: the null
/// vector of (P^T - I) from an SVD, normalised to sum one.
Vector stationary_distribution(const Matrix& P);

/// T v = r_pi + gamma P_pi v.
Vector bellman_apply(const PolicyChain& chain, double gamma, const Vector& v);

/// Solves (I - gamma P_pi) v = r_pi.
Vector true_value(const PolicyChain& chain, double gamma);

}  // namespace tdlab
