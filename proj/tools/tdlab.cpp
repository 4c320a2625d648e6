// tdlab: run linear TD experiments from a JSON config.
//
//   tdlab run --config <path> [--out <dir>] [--seeds 0..19] [--steps N]
//   tdlab check --config <path>
//   tdlab fixpoints --config <path>
//
// Exit codes: 0 all assertions pass, 1 invalid config, 2 assertion failure,
// 3 I/O failure.

#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>

#include "tdlab/harness.hpp"

namespace {

using nlohmann::json;

int report_error(const char* kind, const std::exception& e, int code) {
  std::cout << json{{"error", {{"kind", kind}, {"message", e.what()}, {"exit_code", code}}}}.dump(2)
            << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear TD learning with arbitrary features"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string seeds;
  long steps = -1;

  auto* run = app.add_subcommand("run", "Run the full experiment and write outputs");
  run->add_option("--config", config_path, "JSON experiment config")->required();
  run->add_option("--out", out_dir, "Output directory (overrides config.outputs)");
  run->add_option("--seeds", seeds, "Seed list, e.g. 0..19 or 1,4,9");
  run->add_option("--steps", steps, "Number of TD steps per seed");

  auto* check = app.add_subcommand("check", "Check the stochastic-approximation assumptions");
  check->add_option("--config", config_path, "JSON experiment config")->required();

  auto* fix = app.add_subcommand("fixpoints", "Print a summary of the TD fixed-point set");
  fix->add_option("--config", config_path, "JSON experiment config")->required();

  CLI11_PARSE(app, argc, argv);

  using namespace tdlab;
  try {
    ExperimentConfig cfg = parse_config(config_path);
    if (*check) {
      const AssumptionReport rep =
          check_assumptions(cfg.mdp, cfg.policy, cfg.features, cfg.schedule);
      std::cout << json{{"assumptions", assumptions_json(rep)}}.dump(2) << "\n";
      return rep.all_pass() ? kExitOk : kExitAssertion;
    }
    if (*fix) {
      const AssumptionReport rep =
          check_assumptions(cfg.mdp, cfg.policy, cfg.features, cfg.schedule);
      if (!rep.all_pass()) {
        std::cout << json{{"assumptions", assumptions_json(rep)}}.dump(2) << "\n";
        return kExitAssertion;
      }
      const TdProblem problem = make_problem(cfg.mdp, cfg.policy, cfg.features);
      std::cout << json{{"fixed_points", fixed_points_json(problem)}}.dump(2) << "\n";
      return kExitOk;
    }

    if (!seeds.empty()) cfg.seeds = parse_seed_list(seeds);
    if (steps >= 0) cfg.n_steps = steps;
    if (cfg.td_requested() && cfg.seeds.empty()) {
      throw ValidationError("seeds: TD runs requested but the seed list is empty");
    }
    const RunResult result = run_experiment(cfg);
    emit_outputs(result, out_dir.empty() ? cfg.outputs : out_dir);
    std::cout << result.report.dump(2) << "\n";
    return result.all_assertions_pass ? kExitOk : kExitAssertion;
  } catch (const ParseError& e) {
    return report_error("ParseError", e, kExitValidation);
  } catch (const ValidationError& e) {
    return report_error("ValidationError", e, kExitValidation);
  } catch (const IoError& e) {
    return report_error("IoError", e, kExitIo);
  } catch (const Error& e) {
    return report_error("AssertionFailure", e, kExitAssertion);
  } catch (const std::exception& e) {
    return report_error("InternalError", e, kExitAssertion);
  }
}
