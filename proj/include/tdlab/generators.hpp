#pragma once

#include <cstdint>

#include "tdlab/linalg_proj.hpp"
#include "tdlab/markov_core.hpp"

namespace tdlab::gen {

/// One action; from s move to s-1 or s+1 with probability 1/2 each, the
/// probability of stepping off an end stays put. Reward 1 in the rightmost
/// state, -1 in the leftmost, 0 elsewhere (a single state gets reward 0).
Mdp random_walk(int n, double discount);

/// One action; s -> s+1 mod n deterministically. Reward +1 in even states,
/// -1 in odd ones.
Mdp cycle(int n, double discount);

/// Sparse random transitions that always keep an edge s -> s+1 mod n under
/// every action (so every policy induces an irreducible chain), rewards
/// uniform in [-1, 1].
Mdp random_mdp(int n, int n_actions, std::uint64_t seed, double discount);

/// Same transitions, rewards replaced.
Mdp with_rewards(const Mdp& mdp, Matrix reward);

/// Row-normalised uniform random weights, all strictly positive.
Policy random_policy(int n_states, int n_actions, std::uint64_t seed);

Matrix tabular(int n);

/// [base | base | ... | base] with k extra copies.
Matrix duplicate_columns(const Matrix& base, int k);

/// n x r Gaussian times r x d Gaussian: rank min(r, n, d) almost surely.
Matrix random_rank(int n, int r, int d, std::uint64_t seed);

/// base with k zero columns appended.
Matrix zero_pad(const Matrix& base, int k);

Matrix zero(int n, int d);

}  // namespace tdlab::gen
