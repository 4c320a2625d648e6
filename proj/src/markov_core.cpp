#include "tdlab/markov_core.hpp"

#include <cmath>
#include <string>

#include "tdlab/errors.hpp"

namespace tdlab {
namespace {

void validate_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, const std::string& what) {
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (!std::isfinite(row(j)) || row(j) < 0.0) {
      throw InvalidStochastic(what + ": entry " + std::to_string(j) + " is negative or non-finite");
    }
  }
  const double sum = row.sum();
  if (std::abs(sum - 1.0) > kStochasticTol) {
    throw InvalidStochastic(what + ": row sums to " + std::to_string(sum));
  }
}

std::vector<bool> reachable(const Matrix& P, bool transpose) {
  const Eigen::Index n = P.rows();
  std::vector<bool> seen(n, false);
  std::vector<Eigen::Index> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const Eigen::Index i = stack.back();
    stack.pop_back();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double edge = transpose ? P(j, i) : P(i, j);
      if (edge > kSupportThreshold && !seen[j]) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

}  // namespace

Mdp::Mdp(std::vector<Matrix> transition, Matrix reward, double discount)
    : transition_(std::move(transition)), reward_(std::move(reward)), discount_(discount) {
  if (reward_.rows() < 1 || reward_.cols() < 1) {
    throw DimensionMismatch("Mdp: need at least one state and one action");
  }
  if (static_cast<Eigen::Index>(transition_.size()) != reward_.cols()) {
    throw DimensionMismatch("Mdp: " + std::to_string(transition_.size()) +
                            " transition matrices for " + std::to_string(reward_.cols()) +
                            " actions");
  }
  if (!(discount_ >= 0.0 && discount_ < 1.0)) {
    throw InvalidStochastic("Mdp: discount must lie in [0, 1), got " + std::to_string(discount_));
  }
  if (!reward_.allFinite()) throw InvalidStochastic("Mdp: non-finite reward");
  const Eigen::Index n = reward_.rows();
  for (std::size_t a = 0; a < transition_.size(); ++a) {
    if (transition_[a].rows() != n || transition_[a].cols() != n) {
      throw DimensionMismatch("Mdp: transition for action " + std::to_string(a) + " is not " +
                              std::to_string(n) + "x" + std::to_string(n));
    }
    for (Eigen::Index s = 0; s < n; ++s) {
      validate_row(transition_[a].row(s),
                   "p(.|s=" + std::to_string(s) + ",a=" + std::to_string(a) + ")");
    }
  }
}

Policy::Policy(Matrix probs) : probs_(std::move(probs)) {
  if (probs_.rows() < 1 || probs_.cols() < 1) throw DimensionMismatch("Policy: empty table");
  for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
    validate_row(probs_.row(s), "pi(.|s=" + std::to_string(s) + ")");
  }
}

Policy Policy::uniform(int n_states, int n_actions) {
  return Policy(Matrix::Constant(n_states, n_actions, 1.0 / n_actions));
}

bool check_irreducible(const Matrix& P) {
  if (P.rows() == 0 || P.rows() != P.cols()) return false;
  // Strongly connected iff every state is reachable from state 0 both in the
  // graph and in its reverse.
  for (bool transpose : {false, true}) {
    const auto seen = reachable(P, transpose);
    for (bool b : seen) {
      if (!b) return false;
    }
  }
  return true;
}

Vector stationary_distribution(const Matrix& P) {
  const Eigen::Index n = P.rows();
  const Matrix M = P.transpose() - Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
  // Singular values are sorted descending; the last right singular vector
  // spans the null space for an irreducible chain.
  Vector mu = svd.matrixV().col(n - 1);
  mu /= mu.sum();
  return mu;
}

PolicyChain induce_chain(const Mdp& mdp, const Policy& policy) {
  const int n = mdp.n_states();
  if (policy.n_states() != n || policy.n_actions() != mdp.n_actions()) {
    throw DimensionMismatch("induce_chain: policy is " + std::to_string(policy.n_states()) + "x" +
                            std::to_string(policy.n_actions()) + ", MDP has " + std::to_string(n) +
                            " states and " + std::to_string(mdp.n_actions()) + " actions");
  }
  PolicyChain chain;
  chain.P = Matrix::Zero(n, n);
  chain.r = Vector::Zero(n);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      chain.P.row(s) += policy(s, a) * mdp.transition(a).row(s);
      chain.r(s) += policy(s, a) * mdp.r(s, a);
    }
  }
  for (int s = 0; s < n; ++s) validate_row(chain.P.row(s), "P_pi(s=" + std::to_string(s) + ",.)");
  if (!check_irreducible(chain.P)) {
    throw NotIrreducible("induce_chain: the policy-induced chain is not irreducible");
  }
  chain.mu = stationary_distribution(chain.P);
  if (chain.mu.minCoeff() <= 0.0) {
    throw NotIrreducible("induce_chain: stationary distribution has a non-positive entry");
  }
  return chain;
}

Vector bellman_apply(const PolicyChain& chain, double gamma, const Vector& v) {
  if (v.size() != chain.n_states()) {
    throw DimensionMismatch("bellman_apply: value has " + std::to_string(v.size()) +
                            " entries, chain has " + std::to_string(chain.n_states()) + " states");
  }
  return chain.r + gamma * (chain.P * v);
}

Vector true_value(const PolicyChain& chain, double gamma) {
  const int n = chain.n_states();
  const Matrix M = Matrix::Identity(n, n) - gamma * chain.P;
  Vector v = M.partialPivLu().solve(chain.r);
  const double residual = (M * v - chain.r).lpNorm<Eigen::Infinity>();
  if (!v.allFinite() || residual > 1e-10 * (1.0 + chain.r.lpNorm<Eigen::Infinity>())) {
    throw CrossCheckFailure("true_value: linear solve residual " + std::to_string(residual));
  }
  return v;
}

}  // namespace tdlab
