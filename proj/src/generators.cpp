#include "tdlab/generators.hpp"

#include <cmath>
#include <string>

#include "tdlab/errors.hpp"
#include "tdlab/rng.hpp"

namespace tdlab::gen {
namespace {

void require_positive(int value, const char* what) {
  if (value < 1) {
    throw DimensionMismatch(std::string(what) + " must be positive, got " + std::to_string(value));
  }
}

}  // namespace

Mdp random_walk(int n, double discount) {
  require_positive(n, "random_walk: n");
  Matrix P = Matrix::Zero(n, n);
  Matrix reward = Matrix::Zero(n, 1);
  for (int s = 0; s < n; ++s) {
    P(s, s > 0 ? s - 1 : s) += 0.5;
    P(s, s + 1 < n ? s + 1 : s) += 0.5;
  }
  if (n > 1) {
    reward(0, 0) = -1.0;
    reward(n - 1, 0) = 1.0;
  }
  return Mdp({P}, reward, discount);
}

Mdp cycle(int n, double discount) {
  require_positive(n, "cycle: n");
  Matrix P = Matrix::Zero(n, n);
  Matrix reward(n, 1);
  for (int s = 0; s < n; ++s) {
    P(s, (s + 1) % n) = 1.0;
    reward(s, 0) = s % 2 == 0 ? 1.0 : -1.0;
  }
  return Mdp({P}, reward, discount);
}

Mdp random_mdp(int n, int n_actions, std::uint64_t seed, double discount) {
  require_positive(n, "random_mdp: n");
  require_positive(n_actions, "random_mdp: actions");
  SplitMix64 rng(seed);
  std::vector<Matrix> transition;
  for (int a = 0; a < n_actions; ++a) {
    Matrix P(n, n);
    for (int s = 0; s < n; ++s) {
      for (int t = 0; t < n; ++t) P(s, t) = rng.uniform() < 0.4 ? 0.0 : rng.uniform();
      P(s, (s + 1) % n) += 0.1 + rng.uniform();
      P.row(s) /= P.row(s).sum();
    }
    transition.push_back(std::move(P));
  }
  Matrix reward(n, n_actions);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < n_actions; ++a) reward(s, a) = rng.uniform(-1.0, 1.0);
  }
  return Mdp(std::move(transition), std::move(reward), discount);
}

Mdp with_rewards(const Mdp& mdp, Matrix reward) {
  std::vector<Matrix> transition;
  for (int a = 0; a < mdp.n_actions(); ++a) transition.push_back(mdp.transition(a));
  return Mdp(std::move(transition), std::move(reward), mdp.discount());
}

Policy random_policy(int n_states, int n_actions, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Matrix probs(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) probs(s, a) = 0.05 + rng.uniform();
    probs.row(s) /= probs.row(s).sum();
  }
  return Policy(std::move(probs));
}

Matrix tabular(int n) {
  require_positive(n, "tabular: n");
  return Matrix::Identity(n, n);
}

Matrix duplicate_columns(const Matrix& base, int k) {
  if (k < 0) throw DimensionMismatch("duplicate_columns: k must be non-negative");
  Matrix X(base.rows(), base.cols() * (k + 1));
  for (int i = 0; i <= k; ++i) X.middleCols(i * base.cols(), base.cols()) = base;
  return X;
}

Matrix random_rank(int n, int r, int d, std::uint64_t seed) {
  require_positive(n, "random_rank: n");
  require_positive(r, "random_rank: r");
  require_positive(d, "random_rank: d");
  SplitMix64 rng(seed);
  Matrix left(n, r);
  Matrix right(r, d);
  for (Eigen::Index i = 0; i < left.size(); ++i) left.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < right.size(); ++i) right.data()[i] = rng.normal();
  return left * right / std::sqrt(static_cast<double>(r));
}

Matrix zero_pad(const Matrix& base, int k) {
  if (k < 0) throw DimensionMismatch("zero_pad: k must be non-negative");
  Matrix X = Matrix::Zero(base.rows(), base.cols() + k);
  X.leftCols(base.cols()) = base;
  return X;
}

Matrix zero(int n, int d) {
  require_positive(n, "zero: n");
  if (d < 0) throw DimensionMismatch("zero: d must be non-negative");
  return Matrix::Zero(n, d);
}

}  // namespace tdlab::gen
