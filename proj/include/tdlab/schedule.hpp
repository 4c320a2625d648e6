#pragma once

#include <cmath>

namespace tdlab {

/// alpha_t = alpha0 / (t + 1)^p. For p in (0.5, 1] the family is positive,
/// decreasing, not summable and square summable, and 1/alpha_{t+1} - 1/alpha_t
/// stays bounded.
struct LearningRateSchedule {
  double alpha0 = 0.5;
  double p = 0.75;

  /// Whether the exponent is inside the admissible range (0.5, 1].
  bool admissible() const { return alpha0 > 0.0 && p > 0.5 && p <= 1.0; }
};

inline double schedule_alpha(const LearningRateSchedule& sched, long t) {
  return sched.alpha0 * std::pow(static_cast<double>(t) + 1.0, -sched.p);
}

/// Largest n >= t with alpha_t + ... + alpha_n <= budget.
/// Throws BudgetTooSmall when alpha_t alone exceeds the budget.
long m_horizon(const LearningRateSchedule& sched, long t, double budget);

}  // namespace tdlab
