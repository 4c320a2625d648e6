#include "tdlab/td_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "tdlab/errors.hpp"

namespace tdlab {

long m_horizon(const LearningRateSchedule& sched, long t, double budget) {
  double total = schedule_alpha(sched, t);
  if (total > budget) {
    throw BudgetTooSmall("m_horizon: alpha_" + std::to_string(t) + " = " + std::to_string(total) +
                         " exceeds budget " + std::to_string(budget));
  }
  long n = t;
  for (;;) {
    const double next = total + schedule_alpha(sched, n + 1);
    if (next > budget) return n;
    total = next;
    ++n;
  }
}

TdProblem make_problem(Mdp mdp, Policy policy, FeatureMap features) {
  PolicyChain chain = induce_chain(mdp, policy);
  const double gamma = mdp.discount();
  TdLinearSystem system = build_system(chain, features, gamma);
  Projector projector = projection_matrix(features, Weighting(chain.mu));
  FixedPointSet fixed = solve_fixed_points(system, features, chain, gamma);
  return TdProblem{std::move(mdp),   std::move(policy),    std::move(features), std::move(chain),
                   std::move(system), std::move(projector), std::move(fixed)};
}

Transition sample_step(const Mdp& mdp, const Policy& policy, int s, SplitMix64& rng) {
  const int a = rng.categorical(policy.probs().row(s));
  const int s_next = rng.categorical(mdp.transition(a).row(s));
  return {s, a, s_next, mdp.r(s, a)};
}

Vector td_step(const Vector& w, const Transition& tr, double alpha, const FeatureMap& features,
               double gamma) {
  const auto x = features.row(tr.s);
  const double td_error = tr.reward + gamma * features.row(tr.s_next).dot(w) - x.dot(w);
  return w + (alpha * td_error) * x.transpose();
}

Vector mean_td_displacement(const Vector& w, const PairChain& pair, const FeatureMap& features,
                            double gamma, double alpha) {
  Vector mean = Vector::Zero(w.size());
  for (int i = 0; i < pair.size(); ++i) {
    mean += pair.eta(i) * (td_step(w, pair.states[i], alpha, features, gamma) - w);
  }
  return mean;
}

Checkpoint make_checkpoint(const TdProblem& problem, long step, const Vector& w) {
  const Weighting D(problem.chain.mu);
  Checkpoint cp;
  cp.step = step;
  cp.w = w;
  cp.dnorm_value_error = d_norm(problem.features.X() * w - problem.fixed.v_star, D);
  cp.mspbe = mspbe(w, problem.features, problem.projector, problem.chain, problem.gamma());
  cp.dist_W = distance_to_fixed_set(w, problem.fixed);
  cp.norm_w = w.norm();
  cp.norm_gamma_proj = gamma_projection(w, problem.features, problem.chain.mu).norm();
  return cp;
}

TdTrace run_td(const TdProblem& problem, const TdConfig& config) {
  if (config.n_steps < 1 || config.checkpoint_every < 1) {
    throw AssumptionViolation("run_td: need n_steps >= 1 and checkpoint_every >= 1");
  }
  const AssumptionReport assumptions =
      check_assumptions(problem.mdp, problem.policy, problem.features, config.schedule);
  if (!assumptions.all_pass()) throw AssumptionViolation("run_td: " + assumptions.failures());

  const int d = problem.features.dim();
  Vector w = config.w_init.size() == 0 ? Vector::Zero(d) : config.w_init;
  if (w.size() != d) throw DimensionMismatch("run_td: w_init has wrong size");

  SplitMix64 rng(config.seed);
  int s = rng.categorical(problem.chain.mu);
  const double gamma = problem.gamma();
  const long dense_from = config.n_steps - config.dense_tail;

  TdTrace trace;
  trace.seed = config.seed;
  trace.max_norm_w = w.norm();
  trace.checkpoints.push_back(make_checkpoint(problem, 0, w));
  for (long t = 0; t < config.n_steps; ++t) {
    const Transition tr = sample_step(problem.mdp, problem.policy, s, rng);
    w = td_step(w, tr, schedule_alpha(config.schedule, t), problem.features, gamma);
    s = tr.s_next;
    const double norm = w.norm();
    if (!std::isfinite(norm)) {
      throw NonFiniteIterate("run_td: non-finite iterate at step " + std::to_string(t + 1));
    }
    trace.max_norm_w = std::max(trace.max_norm_w, norm);
    const long step = t + 1;
    if (step % config.checkpoint_every == 0 || step >= dense_from || step == config.n_steps) {
      trace.checkpoints.push_back(make_checkpoint(problem, step, w));
    }
  }
  trace.final_w = w;
  return trace;
}

std::string trace_csv(const TdTrace& trace) {
  std::string out = "step,dnorm_value_error,mspbe,dist_W,norm_w,norm_gamma_proj\n";
  char buf[256];
  for (const Checkpoint& cp : trace.checkpoints) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g\n", cp.step,
                  cp.dnorm_value_error, cp.mspbe, cp.dist_W, cp.norm_w, cp.norm_gamma_proj);
    out += buf;
  }
  return out;
}

LocalStabilityReport local_stability_report(const TdTrace& trace, const FixedPointSet& fps,
                                            const LearningRateSchedule& sched, double budget,
                                            int segments, long from_step) {
  LocalStabilityReport rep;
  std::vector<const Checkpoint*> cps;
  for (const Checkpoint& cp : trace.checkpoints) {
    if (cp.step >= from_step) cps.push_back(&cp);
  }
  if (cps.empty() || segments < 1) return rep;
  const long first = cps.front()->step;
  const long last = cps.back()->step;
  const double span = static_cast<double>(last - first + 1);

  // Window distances are recomputed from the stored iterates so the report
  // works for any fixed-point set, not only the one the trace was built with.
  std::vector<double> dist(cps.size());
  for (std::size_t i = 0; i < cps.size(); ++i) dist[i] = distance_to_fixed_set(cps[i]->w, fps);

  std::size_t i = 0;
  for (int seg = 0; seg < segments; ++seg) {
    const long seg_end = first + static_cast<long>(span * (seg + 1) / segments);
    std::size_t best = cps.size();
    for (; i < cps.size() && cps[i]->step < seg_end; ++i) {
      if (best == cps.size() || dist[i] < dist[best]) best = i;
    }
    if (best == cps.size()) continue;

    StabilityWindow win;
    win.anchor = cps[best]->step;
    win.anchor_dist = dist[best];
    long end = last;
    if (schedule_alpha(sched, win.anchor) <= budget) {
      end = std::min(end, m_horizon(sched, win.anchor, budget));
    } else {
      end = win.anchor;
    }
    win.window_end = end;
    win.window_max = 0.0;
    for (std::size_t j = best; j < cps.size() && cps[j]->step <= end; ++j) {
      win.window_max = std::max(win.window_max, dist[j]);
    }
    rep.windows.push_back(win);
  }

  rep.non_increasing = true;
  for (std::size_t k = 1; k < rep.windows.size(); ++k) {
    if (rep.windows[k].window_max > rep.windows[k - 1].window_max) rep.non_increasing = false;
  }
  if (!rep.windows.empty()) {
    const double tail = rep.windows.back().window_max;
    const double head = rep.windows.front().window_max;
    rep.first_to_last_ratio = tail > 0.0 ? head / tail : (head > 0.0 ? HUGE_VAL : 1.0);
  }
  return rep;
}

}  // namespace tdlab
