#include "tdlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "tdlab/generators.hpp"
#include "tdlab/ode_dynamics.hpp"

namespace tdlab {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Generator expressions

class ExprParser {
 public:
  explicit ExprParser(const std::string& text) : text_(text) {}

  GeneratorExpr parse_all() {
    GeneratorExpr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  GeneratorExpr parse_expr() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      return parse_number();
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) fail("expected a name or a number");
    GeneratorExpr e;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      e.name += text_[pos_++];
    }
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ')') {
        ++pos_;
        return e;
      }
      for (;;) {
        e.args.push_back(parse_expr());
        skip_ws();
        if (pos_ >= text_.size()) fail("missing ')'");
        if (text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        fail("expected ',' or ')'");
      }
    }
    return e;
  }

  GeneratorExpr parse_number() {
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin) fail("bad number");
    pos_ += static_cast<std::size_t>(end - begin);
    GeneratorExpr e;
    e.number = value;
    return e;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError("generator expression '" + text_ + "': " + why + " at offset " +
                     std::to_string(pos_));
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

void expect_args(const GeneratorExpr& e, std::size_t n, const std::string& field) {
  if (e.args.size() != n) {
    throw ValidationError(field + ": " + e.name + " takes " + std::to_string(n) +
                          " argument(s), got " + std::to_string(e.args.size()));
  }
}

// ---------------------------------------------------------------------------
// JSON helpers

Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field + ": expected an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix M;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array()) throw ValidationError(field + "[" + std::to_string(r) + "]: not an array");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      M.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValidationError(field + "[" + std::to_string(r) + "]: expected " +
                            std::to_string(cols) + " entries, got " + std::to_string(row.size()));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        throw ValidationError(field + "[" + std::to_string(r) + "][" + std::to_string(c) +
                              "]: not a number");
      }
      M(r, c) = row[c].get<double>();
    }
  }
  if (rows == 0) M.resize(0, 0);
  return M;
}

Vector vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(field + "[" + std::to_string(i) + "]: not a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) rows.push_back(to_json(Vector(M.row(r).transpose())));
  return rows;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string(key) + ": " + e.what());
  }
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// ---------------------------------------------------------------------------
// Config sections

Mdp mdp_from_expr(const GeneratorExpr& e, double gamma) {
  const std::string field = "mdp";
  if (e.name == "random_walk") {
    expect_args(e, 1, field);
    return gen::random_walk(e.args[0].as_int(), gamma);
  }
  if (e.name == "cycle") {
    expect_args(e, 1, field);
    return gen::cycle(e.args[0].as_int(), gamma);
  }
  if (e.name == "random_mdp") {
    expect_args(e, 3, field);
    return gen::random_mdp(e.args[0].as_int(), e.args[1].as_int(),
                           static_cast<std::uint64_t>(e.args[2].as_int()), gamma);
  }
  throw ValidationError("mdp: unknown generator '" + e.name + "'");
}

Mdp parse_mdp(const json& j, double gamma) {
  if (j.is_string()) return mdp_from_expr(GeneratorExpr::parse(j.get<std::string>()), gamma);
  if (!j.is_object()) throw ValidationError("mdp: expected a generator string or an object");
  if (j.contains("generator")) {
    if (!j["generator"].is_string()) throw ValidationError("mdp.generator: expected a string");
    Mdp base = mdp_from_expr(GeneratorExpr::parse(j["generator"].get<std::string>()), gamma);
    if (!j.contains("reward")) return base;
    Matrix reward = matrix_from_json(j["reward"], "mdp.reward");
    if (reward.rows() != base.n_states() || reward.cols() != base.n_actions()) {
      throw ValidationError("mdp.reward: expected " + std::to_string(base.n_states()) + "x" +
                            std::to_string(base.n_actions()));
    }
    return gen::with_rewards(base, std::move(reward));
  }
  if (!j.contains("transition") || !j.contains("reward")) {
    throw ValidationError("mdp: inline tables need 'transition' and 'reward'");
  }
  // transition[s][a][s']
  const json& t = j["transition"];
  if (!t.is_array() || t.empty()) throw ValidationError("mdp.transition: expected [s][a][s']");
  const int n = static_cast<int>(t.size());
  Matrix reward = matrix_from_json(j["reward"], "mdp.reward");
  if (reward.rows() != n) {
    throw ValidationError("mdp.reward: expected " + std::to_string(n) + " rows");
  }
  const int n_actions = static_cast<int>(reward.cols());
  std::vector<Matrix> P(n_actions, Matrix::Zero(n, n));
  for (int s = 0; s < n; ++s) {
    const Matrix rows = matrix_from_json(t[s], "mdp.transition[" + std::to_string(s) + "]");
    if (rows.rows() != n_actions || rows.cols() != n) {
      throw ValidationError("mdp.transition[" + std::to_string(s) + "]: expected " +
                            std::to_string(n_actions) + "x" + std::to_string(n));
    }
    for (int a = 0; a < n_actions; ++a) P[a].row(s) = rows.row(a);
  }
  try {
    return Mdp(std::move(P), std::move(reward), gamma);
  } catch (const Error& e) {
    throw ValidationError(std::string("mdp.transition: ") + e.what());
  }
}

Policy parse_policy(const json& j, const Mdp& mdp) {
  if (j.is_null()) return Policy::uniform(mdp.n_states(), mdp.n_actions());
  if (j.is_string()) {
    const GeneratorExpr e = GeneratorExpr::parse(j.get<std::string>());
    if (e.name == "uniform") {
      expect_args(e, 0, "policy");
      return Policy::uniform(mdp.n_states(), mdp.n_actions());
    }
    if (e.name == "random") {
      expect_args(e, 1, "policy");
      return gen::random_policy(mdp.n_states(), mdp.n_actions(),
                                static_cast<std::uint64_t>(e.args[0].as_int()));
    }
    throw ValidationError("policy: unknown generator '" + e.name + "'");
  }
  Matrix probs = matrix_from_json(j, "policy");
  if (probs.rows() != mdp.n_states() || probs.cols() != mdp.n_actions()) {
    throw ValidationError("policy: expected " + std::to_string(mdp.n_states()) + "x" +
                          std::to_string(mdp.n_actions()));
  }
  try {
    return Policy(std::move(probs));
  } catch (const Error& e) {
    throw ValidationError(std::string("policy: ") + e.what());
  }
}

Matrix features_from_expr(const GeneratorExpr& e, int n) {
  const std::string field = "features";
  if (e.number) throw ValidationError("features: expected a generator, got a number");
  if (e.name == "tabular") {
    expect_args(e, 0, field);
    return gen::tabular(n);
  }
  if (e.name == "duplicate_columns") {
    expect_args(e, 2, field);
    return gen::duplicate_columns(features_from_expr(e.args[0], n), e.args[1].as_int());
  }
  if (e.name == "zero_pad") {
    expect_args(e, 2, field);
    return gen::zero_pad(features_from_expr(e.args[0], n), e.args[1].as_int());
  }
  if (e.name == "random_rank") {
    expect_args(e, 3, field);
    return gen::random_rank(n, e.args[0].as_int(), e.args[1].as_int(),
                            static_cast<std::uint64_t>(e.args[2].as_int()));
  }
  if (e.name == "zero") {
    expect_args(e, 1, field);
    return gen::zero(n, e.args[0].as_int());
  }
  throw ValidationError("features: unknown generator '" + e.name + "'");
}

Matrix parse_features(const json& j, int n) {
  Matrix X;
  if (j.is_string()) {
    X = features_from_expr(GeneratorExpr::parse(j.get<std::string>()), n);
  } else if (j.is_object() && j.contains("matrix")) {
    X = matrix_from_json(j["matrix"], "features.matrix");
  } else {
    X = matrix_from_json(j, "features");
  }
  if (X.rows() != n) {
    throw ValidationError("features: expected " + std::to_string(n) + " rows, got " +
                          std::to_string(X.rows()));
  }
  return X;
}

}  // namespace

GeneratorExpr GeneratorExpr::parse(const std::string& text) { return ExprParser(text).parse_all(); }

double GeneratorExpr::as_number() const {
  if (!number) throw ValidationError("expected a number, got '" + name + "'");
  return *number;
}

int GeneratorExpr::as_int() const {
  const double v = as_number();
  if (v != std::floor(v)) throw ValidationError("expected an integer, got " + std::to_string(v));
  return static_cast<int>(v);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto to_u64 = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
      throw ValidationError("seeds: cannot parse '" + text + "'");
    }
  };
  const auto range = text.find("..");
  if (range != std::string::npos) {
    const std::uint64_t lo = to_u64(text.substr(0, range));
    const std::uint64_t hi = to_u64(text.substr(range + 2));
    if (hi < lo) throw ValidationError("seeds: empty range '" + text + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) seeds.push_back(to_u64(item));
  }
  return seeds;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  if (!j.contains("gamma") || !j["gamma"].is_number()) {
    throw ValidationError("gamma: required number in [0, 1)");
  }
  const double gamma = j["gamma"].get<double>();
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ValidationError("gamma: must lie in [0, 1), got " + std::to_string(gamma));
  }
  if (!j.contains("mdp")) throw ValidationError("mdp: required");
  if (!j.contains("features")) throw ValidationError("features: required");

  Mdp mdp = parse_mdp(j["mdp"], gamma);
  Policy policy = parse_policy(j.value("policy", json()), mdp);
  Matrix X = parse_features(j["features"], mdp.n_states());
  ExperimentConfig cfg{.mdp = std::move(mdp),
                       .policy = std::move(policy),
                       .features = FeatureMap(std::move(X)),
                       .schedule = {},
                       .seeds = {},
                       .w_init = {},
                       .ode = {},
                       .thresholds = {}};

  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    if (!s.is_object()) throw ValidationError("schedule: expected an object");
    if (s.contains("kind") && s["kind"] != "power") {
      throw ValidationError("schedule.kind: only 'power' is supported");
    }
    cfg.schedule.alpha0 = get_or(s, "alpha0", cfg.schedule.alpha0);
    cfg.schedule.p = get_or(s, "p", cfg.schedule.p);
    if (!(cfg.schedule.alpha0 > 0.0)) throw ValidationError("schedule.alpha0: must be positive");
  }
  cfg.n_steps = get_or<long>(j, "n_steps", 0);
  if (cfg.n_steps < 0) throw ValidationError("n_steps: must be non-negative");
  if (j.contains("seeds")) {
    const json& s = j["seeds"];
    if (s.is_string()) {
      cfg.seeds = parse_seed_list(s.get<std::string>());
    } else if (s.is_array()) {
      for (const json& v : s) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw ValidationError("seeds: expected non-negative integers");
        cfg.seeds.push_back(v.get<std::uint64_t>());
      }
    } else {
      throw ValidationError("seeds: expected an array or a range string");
    }
  }
  cfg.checkpoint_every = get_or<long>(j, "checkpoint_every", cfg.checkpoint_every);
  if (cfg.checkpoint_every < 1) throw ValidationError("checkpoint_every: must be >= 1");
  cfg.dense_tail = get_or<long>(j, "dense_tail", 0);
  if (cfg.dense_tail < 0) throw ValidationError("dense_tail: must be >= 0");
  cfg.stability_budget = get_or(j, "stability_budget", cfg.stability_budget);
  if (!(cfg.stability_budget > 0.0)) throw ValidationError("stability_budget: must be positive");
  if (j.contains("w_init")) {
    cfg.w_init = vector_from_json(j["w_init"], "w_init");
    if (cfg.w_init.size() != cfg.features.dim()) {
      throw ValidationError("w_init: expected " + std::to_string(cfg.features.dim()) + " entries");
    }
  }
  if (j.contains("ode")) {
    const json& o = j["ode"];
    if (o.contains("initial_conditions")) {
      const json& ics = o["initial_conditions"];
      if (!ics.is_array()) throw ValidationError("ode.initial_conditions: expected an array");
      for (std::size_t i = 0; i < ics.size(); ++i) {
        const std::string field = "ode.initial_conditions[" + std::to_string(i) + "]";
        Vector w0 = vector_from_json(ics[i], field);
        if (w0.size() != cfg.features.dim()) {
          throw ValidationError(field + ": expected " + std::to_string(cfg.features.dim()) +
                                " entries");
        }
        cfg.ode.initial_conditions.push_back(std::move(w0));
      }
    }
    if (o.contains("horizon")) {
      cfg.ode.horizon = get_or<double>(o, "horizon", 0.0);
      if (!(*cfg.ode.horizon > 0.0)) throw ValidationError("ode.horizon: must be positive");
    }
    cfg.ode.points = get_or<int>(o, "points", cfg.ode.points);
    if (cfg.ode.points < 2) throw ValidationError("ode.points: must be >= 2");
  }
  if (j.contains("thresholds")) {
    const json& t = j["thresholds"];
    if (t.contains("max_norm_w")) cfg.thresholds.max_norm_w = get_or<double>(t, "max_norm_w", 0.0);
    if (t.contains("median_value_error_inf")) {
      cfg.thresholds.median_value_error_inf = get_or<double>(t, "median_value_error_inf", 0.0);
    }
  }
  cfg.outputs = get_or<std::string>(j, "outputs", cfg.outputs);
  if (cfg.td_requested() && cfg.seeds.empty()) {
    throw ValidationError("seeds: TD runs requested (n_steps > 0) but the seed list is empty");
  }
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }
}

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TDLAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, jobs)));
}

json assumptions_json(const AssumptionReport& rep) {
  json arr = json::array();
  for (const auto& c : rep.checks) arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return arr;
}

json fixed_points_json(const TdProblem& problem) {
  const FixedPointSet& fps = problem.fixed;
  return {
      {"rank_X", problem.features.rank()},
      {"null_dim", fps.null_dim()},
      {"v_star", to_json(fps.v_star)},
      {"w_particular", to_json(fps.w_particular)},
      {"null_basis", to_json(Matrix(fps.null_basis.transpose()))},  // one row per basis vector
      {"norm_w_particular", fps.w_particular.norm()},
      {"true_value", to_json(true_value(problem.chain, problem.gamma()))},
  };
}

std::string ode_trajectory_csv(const OdeTrajectory& traj, const TdProblem& problem) {
  const Weighting D(problem.chain.mu);
  std::string out = "t";
  const int d = problem.features.dim();
  for (int i = 0; i < d; ++i) out += ",w" + std::to_string(i);
  out += ",dnorm_value_error,dist_W\n";
  char buf[64];
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const Vector& w = traj.states[k];
    std::snprintf(buf, sizeof buf, "%.17g", traj.times[k]);
    out += buf;
    for (int i = 0; i < d; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", w(i));
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g",
                  d_norm(problem.features.X() * w - problem.fixed.v_star, D));
    out += buf;
    std::snprintf(buf, sizeof buf, ",%.17g\n", distance_to_fixed_set(w, problem.fixed));
    out += buf;
  }
  return out;
}

RunResult run_experiment(const ExperimentConfig& config) {
  RunResult result;
  json& report = result.report;
  json assertions = json::array();
  const auto assert_that = [&](const std::string& name, bool pass, const std::string& detail) {
    assertions.push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
    result.all_assertions_pass = result.all_assertions_pass && pass;
  };
  const auto fmt = [](double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };

  report["instance"] = {{"n_states", config.mdp.n_states()},
                        {"n_actions", config.mdp.n_actions()},
                        {"d", config.features.dim()},
                        {"gamma", config.gamma()}};

  const AssumptionReport assumptions =
      check_assumptions(config.mdp, config.policy, config.features, config.schedule);
  report["assumptions"] = assumptions_json(assumptions);
  assert_that("assumptions", assumptions.all_pass(),
              assumptions.all_pass() ? "all pass" : assumptions.failures());
  if (!assumptions.all_pass()) {
    report["assertions"] = assertions;
    report["exit_code"] = kExitAssertion;
    return result;
  }

  const TdProblem problem = make_problem(config.mdp, config.policy, config.features);
  report["fixed_points"] = fixed_points_json(problem);
  assert_that("fixed_point_routes_agree", true,
              "least-norm solution and Pi T iteration agree within 1e-9");

  // ODE limits.
  const OdeLimit lim = limit_projector(problem.system);
  const Matrix& A = problem.system.A;
  const int d = problem.features.dim();
  {
    const double idem = (lim.A_inf * lim.A_inf - lim.A_inf).norm();
    const double left = (A * lim.A_inf).norm();
    const double right = (lim.A_inf * A).norm();
    const double tol = 1e-9 * std::max(1.0, lim.A_inf.norm()) * std::max(1.0, A.norm());
    assert_that("A_inf_projector_identities", idem <= tol && left <= tol && right <= tol,
                "||A_inf^2 - A_inf|| = " + fmt(idem) + ", ||A A_inf|| = " + fmt(left) +
                    ", ||A_inf A|| = " + fmt(right));
  }
  json ode;
  json spec = json::array();
  for (const auto& c : lim.spectrum_report) {
    spec.push_back({{"re", c.value.real()}, {"im", c.value.imag()}, {"multiplicity", c.multiplicity}});
  }
  ode["spectrum"] = spec;
  ode["rank_A"] = lim.rank_A;
  ode["spectral_gap"] = lim.spectral_gap ? json(*lim.spectral_gap) : json();
  ode["norm_A_inf"] = lim.A_inf.norm();
  if (lim.spectral_gap && *lim.spectral_gap >= 1e-8) {
    const double err = (matrix_exponential(A, 1e3 / *lim.spectral_gap) - lim.A_inf).norm();
    ode["exp_limit_error"] = err;
    assert_that("exp_limit_matches_A_inf", err <= 1e-6, "||exp(A T_big) - A_inf|| = " + fmt(err));
  } else {
    ode["exp_limit_error"] = json();
  }

  std::vector<Vector> ics = config.ode.initial_conditions;
  if (ics.empty()) {
    ics.push_back(Vector::Zero(d));
    ics.push_back(Vector::Ones(d));
  }
  const double horizon =
      config.ode.horizon.value_or(lim.spectral_gap ? 200.0 / *lim.spectral_gap : 1.0);
  ode["horizon"] = horizon;
  json limits = json::array();
  for (std::size_t i = 0; i < ics.size(); ++i) {
    const Vector w_inf = w_infinity(lim, problem.fixed, ics[i]);
    const double residual = problem.system.mean_field(w_inf).norm();
    assert_that("w_inf_in_fixed_set_" + std::to_string(i), residual <= 1e-8 * (1.0 + problem.system.b.norm()),
                "||A w_inf + b|| = " + fmt(residual));
    limits.push_back({{"w0", to_json(ics[i])}, {"w_inf", to_json(w_inf)}});
    result.ode_csv.push_back(ode_trajectory_csv(
        closed_form_trajectory(problem.system, problem.fixed, ics[i], horizon, config.ode.points),
        problem));
  }
  ode["limits"] = limits;
  report["ode"] = ode;

  // TD runs, one job per seed.
  if (config.td_requested()) {
    const std::size_t jobs = config.seeds.size();
    result.traces.resize(jobs);
    std::vector<std::exception_ptr> errors(jobs);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
      for (std::size_t i = next++; i < jobs; i = next++) {
        try {
          TdConfig td;
          td.schedule = config.schedule;
          td.n_steps = config.n_steps;
          td.seed = config.seeds[i];
          td.w_init = config.w_init;
          td.checkpoint_every = config.checkpoint_every;
          td.dense_tail = config.dense_tail;
          result.traces[i] = run_td(problem, td);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    const unsigned n_workers = worker_count(jobs);
    for (unsigned k = 1; k < n_workers; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    json td;
    td["schedule"] = {{"kind", "power"}, {"alpha0", config.schedule.alpha0}, {"p", config.schedule.p}};
    td["n_steps"] = config.n_steps;
    json per_seed = json::array();
    std::vector<double> err_inf, err_d, dists, mspbes, max_norms, ratios;
    for (const TdTrace& trace : result.traces) {
      const Checkpoint& last = trace.checkpoints.back();
      const double e_inf =
          (problem.features.X() * trace.final_w - problem.fixed.v_star).lpNorm<Eigen::Infinity>();
      json entry = {{"seed", trace.seed},
                    {"final_w", to_json(trace.final_w)},
                    {"null_coordinates", to_json(Vector(problem.fixed.null_basis.transpose() *
                                                        (trace.final_w - problem.fixed.w_particular)))},
                    {"value_error_inf", e_inf},
                    {"dnorm_value_error", last.dnorm_value_error},
                    {"mspbe", last.mspbe},
                    {"dist_W", last.dist_W},
                    {"norm_w", last.norm_w},
                    {"norm_gamma_proj", last.norm_gamma_proj},
                    {"max_norm_w", trace.max_norm_w},
                    {"checkpoints", trace.checkpoints.size()}};
      if (config.dense_tail > 0) {
        const LocalStabilityReport st = local_stability_report(
            trace, problem.fixed, config.schedule, config.stability_budget);
        json windows = json::array();
        for (const auto& w : st.windows) {
          windows.push_back({{"anchor", w.anchor},
                             {"window_end", w.window_end},
                             {"anchor_dist", w.anchor_dist},
                             {"window_max", w.window_max}});
        }
        entry["local_stability"] = {{"windows", windows},
                                    {"non_increasing", st.non_increasing},
                                    {"first_to_last_ratio", st.first_to_last_ratio}};
        ratios.push_back(st.first_to_last_ratio);
      }
      per_seed.push_back(entry);
      err_inf.push_back(e_inf);
      err_d.push_back(last.dnorm_value_error);
      dists.push_back(last.dist_W);
      mspbes.push_back(last.mspbe);
      max_norms.push_back(trace.max_norm_w);
    }
    td["seeds"] = per_seed;
    // Where in W_* the seeds ended up; reported, not asserted.
    const int k = problem.fixed.null_dim();
    double spread = 0.0;
    for (int c = 0; c < k; ++c) {
      double lo = HUGE_VAL, hi = -HUGE_VAL;
      for (const auto& e : per_seed) {
        const double x = e["null_coordinates"][c].get<double>();
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      spread = std::max(spread, hi - lo);
    }
    td["null_coordinates_max_spread"] = spread;
    td["median_value_error_inf"] = median(err_inf);
    td["median_dnorm_value_error"] = median(err_d);
    td["median_mspbe"] = median(mspbes);
    td["median_dist_W"] = median(dists);
    td["max_norm_w"] = *std::max_element(max_norms.begin(), max_norms.end());
    if (!ratios.empty()) td["median_stability_ratio"] = median(ratios);
    report["td"] = td;

    if (config.thresholds.max_norm_w) {
      const double worst = td["max_norm_w"].get<double>();
      assert_that("max_norm_w", worst <= *config.thresholds.max_norm_w,
                  "max over seeds and steps " + fmt(worst) + " vs " +
                      fmt(*config.thresholds.max_norm_w));
    }
    if (config.thresholds.median_value_error_inf) {
      const double med = median(err_inf);
      assert_that("median_value_error_inf", med <= *config.thresholds.median_value_error_inf,
                  "median " + fmt(med) + " vs " + fmt(*config.thresholds.median_value_error_inf));
    }
  }

  json files = json::array();
  for (const TdTrace& trace : result.traces) files.push_back("trace_seed" + std::to_string(trace.seed) + ".csv");
  for (std::size_t i = 0; i < result.ode_csv.size(); ++i) {
    files.push_back("ode_trajectory_" + std::to_string(i) + ".csv");
  }
  report["files"] = files;
  report["assertions"] = assertions;
  report["exit_code"] = result.all_assertions_pass ? kExitOk : kExitAssertion;
  return result;
}

std::vector<std::filesystem::path> emit_outputs(const RunResult& result,
                                                const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create '" + directory.string() + "': " + ec.message());
  std::vector<fs::path> written;
  const auto write = [&](const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw IoError("write to '" + path.string() + "' failed");
    written.push_back(path);
  };
  write(directory / "report.json", result.report.dump(2) + "\n");
  for (const TdTrace& trace : result.traces) {
    write(directory / ("trace_seed" + std::to_string(trace.seed) + ".csv"), trace_csv(trace));
  }
  for (std::size_t i = 0; i < result.ode_csv.size(); ++i) {
    write(directory / ("ode_trajectory_" + std::to_string(i) + ".csv"), result.ode_csv[i]);
  }
  return written;
}

}  // namespace tdlab
