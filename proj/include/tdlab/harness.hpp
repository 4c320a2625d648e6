#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdlab/errors.hpp"
#include "tdlab/ode_dynamics.hpp"
#include "tdlab/td_sim.hpp"

namespace tdlab {

/// Malformed JSON or an unparseable generator expression.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed config whose contents are inconsistent (dimensions,
/// probabilities, missing seeds).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitAssertion = 2,
  kExitIo = 3,
};

struct OdeSettings {
  std::vector<Vector> initial_conditions;  ///< empty: zero and all-ones
  std::optional<double> horizon;           ///< default 200 / spectral gap
  int points = 201;
};

struct Thresholds {
  std::optional<double> max_norm_w;
  std::optional<double> median_value_error_inf;
};

struct ExperimentConfig {
  Mdp mdp;
  Policy policy;
  FeatureMap features;
  LearningRateSchedule schedule;
  long n_steps = 0;  ///< 0 disables TD runs
  std::vector<std::uint64_t> seeds;
  long checkpoint_every = 1000;
  long dense_tail = 0;
  double stability_budget = 1.0;
  Vector w_init;
  OdeSettings ode;
  Thresholds thresholds;
  std::string outputs = "out";

  double gamma() const { return mdp.discount(); }
  bool td_requested() const { return n_steps > 0; }
};

/// Parses "name(arg, ...)" generator expressions. Arguments are numbers or
/// nested expressions; a bare name is a call with no arguments.
struct GeneratorExpr {
  std::string name;
  std::vector<GeneratorExpr> args;
  std::optional<double> number;

  static GeneratorExpr parse(const std::string& text);
  double as_number() const;
  int as_int() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);

/// Throws ParseError, ValidationError or IoError.
ExperimentConfig parse_config(const std::filesystem::path& path);

/// "0..19" or "3,5,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

struct RunResult {
  nlohmann::json report;
  std::vector<TdTrace> traces;
  std::vector<std::string> ode_csv;  ///< one per initial condition
  bool all_assertions_pass = true;
};

nlohmann::json assumptions_json(const AssumptionReport& rep);
nlohmann::json fixed_points_json(const TdProblem& problem);

/// check_assumptions, fixed points, ODE limits, then one TD run per seed on a
/// worker pool capped by TDLAB_THREADS. The report is deterministic.
RunResult run_experiment(const ExperimentConfig& config);

/// CSV header `t,w0,...,w{d-1},dnorm_value_error,dist_W`.
std::string ode_trajectory_csv(const OdeTrajectory& traj, const TdProblem& problem);

/// Writes report.json, trace_seed<k>.csv and ode_trajectory_<i>.csv, returning
/// the paths written. Throws IoError.
std::vector<std::filesystem::path> emit_outputs(const RunResult& result,
                                                const std::filesystem::path& directory);

/// Number of worker threads: TDLAB_THREADS if set and positive, otherwise
/// hardware concurrency, never more than `jobs`.
unsigned worker_count(std::size_t jobs);

}  // namespace tdlab
