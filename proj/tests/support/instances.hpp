#pragma once

#include <cstdint>
#include <string>

#include "tdlab/generators.hpp"
#include "tdlab/td_sim.hpp"

namespace tdlab::testing {

struct Instance {
  std::string label;
  TdProblem problem;
};

/// Two-state deterministic cycle, zero reward, X = [[1,1],[1,1]], gamma 0.9.
Instance two_cycle_rank_one();

/// Two-state deterministic cycle, r_pi = (1, -1), X = I, gamma 0.9.
Instance two_cycle_tabular();

/// Five-state random walk with X = [I | I] (d = 10, rank 5), gamma 0.9.
Instance random_walk_duplicated();

/// Random instance: |S| in [2,8], |A| in [1,3], d in [1,12], features drawn
/// from tabular / duplicated / random-rank / zero (zero only when
/// `allow_zero`), gamma in {0.5, 0.9, 0.99}.
Instance random_instance(std::uint64_t seed, bool allow_zero = true);

Vector random_vector(int n, SplitMix64& rng);

}  // namespace tdlab::testing
