#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdlab/fixed_points.hpp"
#include "tdlab/markov_core.hpp"
#include "tdlab/rng.hpp"
#include "tdlab/sa_checks.hpp"
#include "tdlab/schedule.hpp"

namespace tdlab {

/// Everything derived once from (MDP, policy, features) and shared read-only
/// by every TD run on that instance.
struct TdProblem {
  Mdp mdp;
  Policy policy;
  FeatureMap features;
  PolicyChain chain;
  TdLinearSystem system;
  Projector projector;
  FixedPointSet fixed;

  double gamma() const { return mdp.discount(); }
};

TdProblem make_problem(Mdp mdp, Policy policy, FeatureMap features);

struct TdConfig {
  LearningRateSchedule schedule;
  long n_steps = 100000;
  std::uint64_t seed = 0;
  Vector w_init;  ///< empty means zero
  long checkpoint_every = 1000;
  /// Record every step over the last `dense_tail` steps.
  long dense_tail = 0;
};

struct Checkpoint {
  long step;  ///< number of updates applied
  Vector w;
  double dnorm_value_error;  ///< ||X w - v_*||_D
  double mspbe;
  double dist_W;
  double norm_w;
  double norm_gamma_proj;  ///< ||Gamma w||
};

struct TdTrace {
  std::uint64_t seed = 0;
  std::vector<Checkpoint> checkpoints;
  Vector final_w;
  double max_norm_w = 0.0;  ///< over every iterate, not only checkpoints
};

/// a ~ pi(.|s), s' ~ p(.|s,a), reward r(s,a).
Transition sample_step(const Mdp& mdp, const Policy& policy, int s, SplitMix64& rng);

/// w + alpha (r + gamma x(s')^T w - x(s)^T w) x(s).
Vector td_step(const Vector& w, const Transition& tr, double alpha, const FeatureMap& features,
               double gamma);

/// Exact expectation of td_step(w, y, alpha) - w under the stationary law of
/// the transition chain.
Vector mean_td_displacement(const Vector& w, const PairChain& pair, const FeatureMap& features,
                            double gamma, double alpha);

Checkpoint make_checkpoint(const TdProblem& problem, long step, const Vector& w);

/// Deterministic in config.seed. Throws AssumptionViolation before sampling
/// if check_assumptions fails and NonFiniteIterate if an iterate overflows.
TdTrace run_td(const TdProblem& problem, const TdConfig& config);

/// Header `step,dnorm_value_error,mspbe,dist_W,norm_w,norm_gamma_proj`, one
/// row per checkpoint, 17 significant digits.
std::string trace_csv(const TdTrace& trace);

struct StabilityWindow {
  long anchor;      ///< checkpoint step t_k closest to the fixed-point set in its segment
  long window_end;  ///< min(m(t_k, T), last recorded step)
  double anchor_dist;
  double window_max;  ///< max dist(w_j, W_*) over recorded j in [t_k, window_end]
};

struct LocalStabilityReport {
  std::vector<StabilityWindow> windows;
  bool non_increasing = false;
  double first_to_last_ratio = 0.0;  ///< windows.front().window_max / windows.back().window_max
};

/// Splits the recorded steps in [from_step, last] into `segments` equal
/// step ranges, anchors one window in each at the checkpoint nearest to the
/// fixed-point set and takes the largest distance over the recorded steps
/// of the window [t_k, m(t_k, T)].
LocalStabilityReport local_stability_report(const TdTrace& trace, const FixedPointSet& fps,
                                            const LearningRateSchedule& sched, double budget,
                                            int segments = 4, long from_step = 0);

}  // namespace tdlab
