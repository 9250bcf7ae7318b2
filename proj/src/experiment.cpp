#include "olrhc/experiment.hpp"

#include "olrhc/metrics.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace olrhc {

using nlohmann::json;

ControllerKind parse_controller(const std::string& name) {
  if (name == "online-rhc") return ControllerKind::OnlineRhc;
  if (name == "etc") return ControllerKind::Etc;
  if (name == "oracle") return ControllerKind::Oracle;
  if (name == "hindsight") return ControllerKind::Hindsight;
  throw ConfigError("unknown controller '" + name + "' (expected online-rhc, etc, oracle, hindsight)");
}

std::string to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::OnlineRhc: return "online-rhc";
    case ControllerKind::Etc: return "etc";
    case ControllerKind::Oracle: return "oracle";
    case ControllerKind::Hindsight: return "hindsight";
  }
  return "unknown";
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) {
    throw ConfigError(where + ": expected an object");
  }
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.contains(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) {
    throw ConfigError(where + ": missing key '" + key + "'");
  }
  return obj.at(key);
}

double to_double(const json& v, const std::string& where) {
  if (!v.is_number()) {
    throw ConfigError(where + ": expected a number");
  }
  return v.get<double>();
}

/// A number (1x1) or a list of rows.
Matrix to_matrix(const json& v, const std::string& where) {
  if (v.is_number()) {
    return Matrix::Constant(1, 1, v.get<double>());
  }
  if (!v.is_array() || v.empty()) {
    throw ConfigError(where + ": expected a number or a nonempty list of rows");
  }
  const auto rows = static_cast<Eigen::Index>(v.size());
  const auto cols = static_cast<Eigen::Index>(v.front().is_array() ? v.front().size() : 0);
  if (cols == 0) {
    throw ConfigError(where + ": rows must be nonempty lists");
  }
  Matrix M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(where + ": ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      M(r, c) = to_double(row[static_cast<std::size_t>(c)], where);
    }
  }
  return M;
}

Vector to_vector(const json& v, const std::string& where) {
  if (v.is_number()) {
    return Vector::Constant(1, v.get<double>());
  }
  if (!v.is_array() || v.empty()) {
    throw ConfigError(where + ": expected a number or a nonempty list");
  }
  Vector x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    x(static_cast<Eigen::Index>(i)) = to_double(v[i], where);
  }
  return x;
}

Schedule parse_schedule(const std::string& s) {
  if (s == "constant") return Schedule::Constant;
  if (s == "periodic") return Schedule::Periodic;
  if (s == "per-step") return Schedule::PerStep;
  throw ConfigError("cost.schedule: expected constant, periodic or per-step");
}

StageCostSpec parse_cost(const json& c, int n, int m) {
  reject_unknown(c, {"family", "schedule", "Q", "R", "a", "b", "beta_ref", "params"}, "cost");
  const std::string family = require(c, "family", "cost").get<std::string>();
  const Schedule schedule = parse_schedule(c.value("schedule", std::string("constant")));
  CostFamily fam;
  if (family == "quadratic") {
    fam = CostFamily::Quadratic;
  } else if (family == "power") {
    fam = CostFamily::Power;
  } else if (family == "tracking") {
    fam = CostFamily::Tracking;
  } else {
    throw ConfigError("cost.family: expected quadratic, power or tracking");
  }
  auto one = [&](const json& p, const std::string& where) {
    StageParams sp;
    if (fam == CostFamily::Quadratic) {
      sp.Q = to_matrix(require(p, "Q", where), where + ".Q");
      sp.R = to_matrix(require(p, "R", where), where + ".R");
    } else {
      sp.a = to_double(require(p, "a", where), where + ".a");
      if (fam == CostFamily::Tracking) {
        sp.b = to_vector(require(p, "b", where), where + ".b");
      }
    }
    return sp;
  };
  try {
    if (c.contains("params")) {
      const auto& list = c.at("params");
      if (!list.is_array() || list.empty()) {
        throw ConfigError("cost.params: expected a nonempty list");
      }
      std::vector<StageParams> params;
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string where = "cost.params[" + std::to_string(i) + "]";
        reject_unknown(list[i], {"Q", "R", "a", "b"}, where);
        params.push_back(one(list[i], where));
      }
      return StageCostSpec::with_schedule(fam, std::move(params), schedule, n, m);
    }
    if (schedule != Schedule::Constant) {
      throw ConfigError("cost: non-constant schedules need a 'params' list");
    }
    if (fam == CostFamily::Tracking) {
      const StageParams sp = one(c, "cost");
      return StageCostSpec::tracking(sp.b, sp.a, m, c.value("beta_ref", 0.0));
    }
    return StageCostSpec::with_schedule(fam, {one(c, "cost")}, Schedule::Constant, n, m);
  } catch (const ContractError& e) {
    throw ConfigError(std::string("cost: ") + e.what());
  }
}

PolytopeU parse_constraint(const json& c, int m) {
  reject_unknown(c, {"lo", "hi", "F", "b"}, "constraint");
  try {
    PolytopeU U;
    if (c.contains("lo") || c.contains("hi")) {
      U = PolytopeU::box(to_vector(require(c, "lo", "constraint"), "constraint.lo"),
                         to_vector(require(c, "hi", "constraint"), "constraint.hi"));
    } else {
      U = PolytopeU(to_matrix(require(c, "F", "constraint"), "constraint.F"),
                    to_vector(require(c, "b", "constraint"), "constraint.b"));
    }
    if (U.dim() != m) {
      throw ConfigError("constraint: dimension does not match B");
    }
    return U;
  } catch (const ContractError& e) {
    throw ConfigError(std::string("constraint: ") + e.what());
  }
}

std::pair<SystemParams, NoiseModel> parse_system(const json& s) {
  reject_unknown(s, {"A", "B", "eps_c", "S", "noise"}, "system");
  try {
    SystemParams sys(to_matrix(require(s, "A", "system"), "system.A"), to_matrix(require(s, "B", "system"), "system.B"),
                     to_double(require(s, "S", "system"), "system.S"));
    NoiseModel noise;
    noise.eps_c = to_double(require(s, "eps_c", "system"), "system.eps_c");
    const std::string kind = s.value("noise", std::string("uniform-ball"));
    if (kind == "zero") {
      noise.kind = NoiseModel::Kind::Zero;
    } else if (kind != "uniform-ball") {
      throw ConfigError("system.noise: expected uniform-ball or zero");
    }
    if (noise.eps_c < 0.0) {
      throw ConfigError("system.eps_c must be >= 0");
    }
    return {sys, noise};
  } catch (const ContractError& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
}

std::optional<TerminalCostSpec> parse_terminal(const json& t, const SystemParams& sys) {
  reject_unknown(t, {"kind", "Gamma", "P", "corners", "offset"}, "terminal");
  const std::string kind = t.value("kind", std::string("lyapunov"));
  const double Gamma = t.value("Gamma", 1.0);
  Vector offset;
  if (t.contains("offset")) {
    offset = to_vector(t.at("offset"), "terminal.offset");
  }
  try {
    if (kind == "none") {
      return std::nullopt;
    }
    if (kind == "matrix") {
      return TerminalCostSpec(to_matrix(require(t, "P", "terminal"), "terminal.P"), Gamma, offset);
    }
    if (kind == "lyapunov") {
      std::vector<Matrix> corners;
      if (t.contains("corners")) {
        for (const auto& c : t.at("corners")) corners.push_back(to_matrix(c, "terminal.corners"));
      } else {
        corners.push_back(sys.A);
      }
      TerminalCostSpec spec = synth_terminal(corners, Gamma);
      if (offset.size() > 0) {
        spec = TerminalCostSpec(spec.P, Gamma, offset);
      }
      return spec;
    }
  } catch (const ContractError& e) {
    throw ConfigError(std::string("terminal: ") + e.what());
  } catch (const NumericalError& e) {
    throw ConfigError(std::string("terminal: ") + e.what());
  }
  throw ConfigError("terminal.kind: expected lyapunov, matrix or none");
}

template <typename T>
std::vector<T> to_list(const json& v, const std::string& where) {
  if (v.is_number_integer()) {
    return {v.get<T>()};
  }
  if (!v.is_array() || v.empty()) {
    throw ConfigError(where + ": expected a nonempty list of integers");
  }
  std::vector<T> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) {
      throw ConfigError(where + ": expected integers");
    }
    out.push_back(e.get<T>());
  }
  return out;
}

}  // namespace

ExperimentSpec parse_experiment(const std::string& json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spec is not valid JSON: ") + e.what());
  }
  reject_unknown(root,
                 {"system", "system_file", "x1", "cost", "terminal", "constraint", "controller", "T", "seeds",
                  "output", "delta", "lambda", "overrides", "perturb", "pin_theta", "drop_interval_start", "solver"},
                 "spec");
  try {
    json sys_json;
    if (root.contains("system") == root.contains("system_file")) {
      throw ConfigError("spec: give exactly one of 'system' or 'system_file'");
    }
    if (root.contains("system")) {
      sys_json = root.at("system");
    } else {
      const auto path = base_dir / root.at("system_file").get<std::string>();
      std::ifstream in(path);
      if (!in) {
        throw ConfigError("spec: cannot open system file " + path.string());
      }
      try {
        sys_json = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError("system file is not valid JSON: " + std::string(e.what()));
      }
    }
    ExperimentSpec spec;
    auto [sys, noise] = parse_system(sys_json);
    const int n = sys.n();
    const int m = sys.m();
    spec.scenario.sys = sys;
    spec.scenario.noise = noise;
    spec.scenario.x1 = to_vector(require(root, "x1", "spec"), "x1");
    if (spec.scenario.x1.size() != n) {
      throw ConfigError("x1: dimension does not match A");
    }
    spec.scenario.costs = parse_cost(require(root, "cost", "spec"), n, m);
    spec.scenario.U = parse_constraint(require(root, "constraint", "spec"), m);
    spec.scenario.terminal = parse_terminal(root.value("terminal", json::object()), sys);
    spec.controller = parse_controller(root.value("controller", std::string("online-rhc")));
    spec.T = to_list<int>(require(root, "T", "spec"), "T");
    spec.seeds = to_list<std::uint64_t>(require(root, "seeds", "spec"), "seeds");
    for (int T : spec.T) {
      if (T < 1) throw ConfigError("T: values must be positive");
    }
    spec.output = root.value("output", std::string("out"));
    spec.base.delta = root.value("delta", 0.1);
    if (root.contains("lambda") && !root.at("lambda").is_null()) {
      spec.base.lambda = to_double(root.at("lambda"), "lambda");
    }
    spec.base.perturb = root.value("perturb", true);
    spec.base.pin_theta = root.value("pin_theta", false);
    spec.base.drop_interval_start = root.value("drop_interval_start", false);
    if (root.contains("overrides")) {
      const auto& o = root.at("overrides");
      reject_unknown(o, {"H", "M", "K", "L", "N", "gamma"}, "overrides");
      spec.base.H = o.value("H", spec.base.H);
      spec.base.M = o.value("M", spec.base.M);
      spec.base.K = o.value("K", spec.base.K);
      spec.base.L = o.value("L", spec.base.L);
      if (o.contains("N") && !o.at("N").is_null()) spec.base.etc_N = o.at("N").get<int>();
      if (o.contains("gamma") && !o.at("gamma").is_null()) spec.base.gamma_poe = to_double(o.at("gamma"), "gamma");
    }
    if (root.contains("solver")) {
      const auto& s = root.at("solver");
      reject_unknown(s, {"grad_tol", "max_iter", "starts", "finite_differences"}, "solver");
      spec.base.solver.grad_tol = s.value("grad_tol", spec.base.solver.grad_tol);
      spec.base.solver.max_iter = s.value("max_iter", spec.base.solver.max_iter);
      spec.base.solver.starts = s.value("starts", spec.base.solver.starts);
      spec.base.solver.finite_differences = s.value("finite_differences", false);
    }
    if (spec.base.H < 1 || spec.base.M < 1 || spec.base.K < 1 || spec.base.L < 1) {
      throw ConfigError("overrides: H, M, K and L must be positive");
    }
    if (!(spec.base.delta > 0.0 && spec.base.delta < 1.0)) {
      throw ConfigError("delta must lie in (0, 1)");
    }
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spec: ") + e.what());
  }
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str(), path.parent_path());
}

namespace {

RunConfig config_for(const ExperimentSpec& spec, int T, std::uint64_t seed) {
  RunConfig cfg = spec.base;
  cfg.T = T;
  cfg.seed = seed;
  return cfg;
}

TrajectoryLog hindsight_log(const Scenario& sc, const ControlSequence& seq) {
  TrajectoryLog log;
  log.n = sc.sys.n();
  log.m = sc.sys.m();
  Vector x = sc.x1;
  for (std::size_t k = 0; k < seq.w.size(); ++k) {
    StepRecord r;
    r.t = static_cast<int>(k) + 1;
    r.x = x;
    r.y = x;
    r.xbar = x;
    r.uhat = seq.w[k];
    r.du = Vector::Zero(log.m);
    r.u = seq.w[k];
    r.cost = sc.costs.eval(r.t, x, r.u);
    r.violation = sc.U.violation(r.u);
    r.uhat_violation = r.violation;
    x = step(sc.sys, x, r.u);
    log.steps.push_back(std::move(r));
  }
  return log;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v + 0.0);  // -0 prints as 0
  return buf;
}

}  // namespace

TrajectoryLog execute_run(const ExperimentSpec& spec, int T, std::uint64_t seed) {
  const RunConfig cfg = config_for(spec, T, seed);
  switch (spec.controller) {
    case ControllerKind::OnlineRhc: return run_online_rhc(spec.scenario, cfg);
    case ControllerKind::Etc: return run_etc(spec.scenario, cfg);
    case ControllerKind::Oracle: return run_oracle_baseline(spec.scenario, cfg);
    case ControllerKind::Hindsight: return hindsight_log(spec.scenario, run_hindsight(spec.scenario, T, cfg.solver));
  }
  throw ContractError("execute_run: unknown controller");
}

void write_csv(std::ostream& os, const TrajectoryLog& log) {
  os << "t,interval";
  for (const char* name : {"x", "y", "xbar"}) {
    for (int j = 0; j < log.n; ++j) os << ',' << name << j;
  }
  for (const char* name : {"uhat", "du", "u"}) {
    for (int j = 0; j < log.m; ++j) os << ',' << name << j;
  }
  os << ",cost,violation\n";
  std::size_t next_interval = 0;
  for (const auto& r : log.steps) {
    os << r.t << ',' << r.interval;
    for (const Vector* v : {&r.x, &r.y, &r.xbar, &r.uhat, &r.du, &r.u}) {
      for (Eigen::Index j = 0; j < v->size(); ++j) os << ',' << fmt((*v)(j));
    }
    os << ',' << fmt(r.cost) << ',' << fmt(r.violation) << '\n';
    while (next_interval < log.intervals.size() && log.intervals[next_interval].t_i == r.t) {
      const auto& ir = log.intervals[next_interval++];
      os << "I," << ir.i << ',' << ir.t_i << ',' << fmt(ir.beta) << ',' << fmt(ir.theta_err_fro) << ','
         << fmt(ir.lambda_min_V) << ',' << fmt(ir.poe_bound) << ',' << (ir.covered ? "true" : "false") << '\n';
    }
  }
}

std::string summary_json(const BatchSummary& s, ControllerKind controller) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["controller"] = to_string(controller);
  j["slope_regret"] = opt(s.slope_regret);
  j["slope_violation"] = opt(s.slope_violation);
  j["coverage_rate"] = opt(s.coverage_rate);
  j["poe_pass_rate"] = opt(s.poe_pass_rate);
  json runs = json::array();
  for (const auto& r : s.runs) {
    runs.push_back({{"T", r.T},
                    {"seed", r.seed},
                    {"total_cost", r.total_cost},
                    {"hindsight_cost", r.hindsight_cost},
                    {"regret", r.regret},
                    {"violation", r.violation},
                    {"intervals", r.intervals},
                    {"csv", r.csv.filename().string()}});
  }
  j["runs"] = runs;
  return j.dump(2) + "\n";
}

const std::string& summary_schema() {
  static const std::string schema = R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "type": "object",
  "required": ["controller", "slope_regret", "slope_violation", "coverage_rate", "poe_pass_rate", "runs"],
  "additionalProperties": false,
  "properties": {
    "controller": {"enum": ["online-rhc", "etc", "oracle", "hindsight"]},
    "slope_regret": {"type": ["number", "null"]},
    "slope_violation": {"type": ["number", "null"]},
    "coverage_rate": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
    "poe_pass_rate": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
    "runs": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["T", "seed", "total_cost", "hindsight_cost", "regret", "violation", "intervals", "csv"],
        "additionalProperties": false,
        "properties": {
          "T": {"type": "integer", "minimum": 1},
          "seed": {"type": "integer", "minimum": 0},
          "total_cost": {"type": "number"},
          "hindsight_cost": {"type": "number"},
          "regret": {"type": "number"},
          "violation": {"type": "number", "minimum": 0},
          "intervals": {"type": "integer", "minimum": 0},
          "csv": {"type": "string"}
        }
      }
    }
  }
}
)";
  return schema;
}

int resolve_workers(std::optional<int> flag) {
  int w = 1;
  if (flag) {
    w = *flag;
  } else if (const char* env = std::getenv("PE_RHC_WORKERS"); env != nullptr && *env != '\0') {
    w = std::atoi(env);
  }
  if (w < 1) {
    throw ConfigError("worker count must be >= 1");
  }
  return w;
}

namespace {

/// Calls job(k) for k in [0, count) on `workers` threads; rethrows the first failure by index.
template <typename Job>
void parallel_for(std::size_t count, int workers, Job job) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        job(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  std::vector<std::thread> pool;
  for (int w = 1; w < nthreads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

BatchSummary run_batch(const ExperimentSpec& spec, int workers) {
  std::filesystem::create_directories(spec.output);
  std::vector<std::pair<int, std::uint64_t>> jobs;
  for (int T : spec.T) {
    for (auto seed : spec.seeds) jobs.emplace_back(T, seed);
  }
  std::vector<double> hindsight(spec.T.size());
  parallel_for(spec.T.size(), workers, [&](std::size_t k) {
    hindsight[k] = run_hindsight(spec.scenario, spec.T[k], spec.base.solver).objective;
  });

  BatchSummary summary;
  summary.runs.resize(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t k) {
    const auto [T, seed] = jobs[k];
    const TrajectoryLog log = execute_run(spec, T, seed);
    RunResult& r = summary.runs[k];
    r.T = T;
    r.seed = seed;
    r.total_cost = log.total_cost();
    const auto ti = static_cast<std::size_t>(std::find(spec.T.begin(), spec.T.end(), T) - spec.T.begin());
    r.hindsight_cost = hindsight[ti];
    r.regret = r.total_cost - r.hindsight_cost;
    r.violation = log.total_violation();
    r.intervals = static_cast<int>(log.intervals.size());
    for (const auto& ir : log.intervals) {
      r.intervals_covered += ir.covered;
      r.intervals_poe_pass += ir.poe_pass;
      r.all_covered = r.all_covered && ir.covered;
    }
    r.csv = spec.output / ("run_" + std::to_string(T) + "_" + std::to_string(seed) + ".csv");
    std::ofstream out(r.csv);
    if (!out) {
      throw std::runtime_error("cannot write " + r.csv.string());
    }
    write_csv(out, log);
  });

  std::set<int> distinct(spec.T.begin(), spec.T.end());
  if (distinct.size() >= 3) {
    std::vector<std::pair<double, double>> reg, vio;
    for (int T : distinct) {
      double rs = 0.0, vs = 0.0;
      int cnt = 0;
      for (const auto& r : summary.runs) {
        if (r.T == T) {
          rs += r.regret;
          vs += r.violation;
          ++cnt;
        }
      }
      reg.emplace_back(T, rs / cnt);
      vio.emplace_back(T, vs / cnt);
    }
    auto positive = [](const auto& pts) {
      return std::all_of(pts.begin(), pts.end(), [](const auto& p) { return p.second > 0.0; });
    };
    if (positive(reg)) summary.slope_regret = slope_fit_robust(reg).reported.slope;
    if (positive(vio)) summary.slope_violation = slope_fit_robust(vio).reported.slope;
  }
  if (spec.controller == ControllerKind::OnlineRhc || spec.controller == ControllerKind::Etc) {
    int covered_runs = 0, intervals = 0, poe = 0;
    for (const auto& r : summary.runs) {
      covered_runs += r.all_covered;
      intervals += r.intervals;
      poe += r.intervals_poe_pass;
    }
    summary.coverage_rate = static_cast<double>(covered_runs) / static_cast<double>(summary.runs.size());
    if (intervals > 0) summary.poe_pass_rate = static_cast<double>(poe) / intervals;
  }
  std::ofstream js(spec.output / "summary.json");
  js << summary_json(summary, spec.controller);
  return summary;
}

namespace {

/// Finite-horizon Riccati recursion for u'Ru + x'Qx stages and x'Pf x terminal.
std::vector<Vector> riccati_sequence(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                                     const Matrix& Pf, int M, const Vector& x0) {
  std::vector<Matrix> K(static_cast<std::size_t>(M));
  Matrix P = Pf;
  for (int k = M - 1; k >= 0; --k) {
    const Matrix S = R + B.transpose() * P * B;
    K[static_cast<std::size_t>(k)] = S.ldlt().solve(B.transpose() * P * A);
    P = Q + A.transpose() * P * (A - B * K[static_cast<std::size_t>(k)]);
    P = 0.5 * (P + P.transpose());
  }
  std::vector<Vector> u;
  Vector x = x0;
  for (int k = 0; k < M; ++k) {
    u.push_back(-K[static_cast<std::size_t>(k)] * x);
    x = A * x + B * u.back();
  }
  return u;
}

CheckRow dp_equivalence_check() {
  Rng rng(2024);
  std::normal_distribution<double> N01;
  std::uniform_int_distribution<int> dim(1, 2), horizon(1, 5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = dim(rng), m = dim(rng), M = horizon(rng);
    Matrix A(n, n), B(n, m);
    for (auto* X : {&A, &B})
      for (Eigen::Index i = 0; i < X->size(); ++i) X->data()[i] = N01(rng);
    Matrix Gq(n, n), Gr(m, m);
    for (auto* X : {&Gq, &Gr})
      for (Eigen::Index i = 0; i < X->size(); ++i) X->data()[i] = N01(rng);
    const Matrix Q = Gq * Gq.transpose() + 0.1 * Matrix::Identity(n, n);
    const Matrix R = Gr * Gr.transpose() + 0.1 * Matrix::Identity(m, m);
    Vector x0(n);
    for (Eigen::Index i = 0; i < n; ++i) x0(i) = N01(rng);
    const StageCostSpec costs = StageCostSpec::quadratic(Q, R);
    const PolytopeU U = PolytopeU::box(Vector::Constant(m, -1e6), Vector::Constant(m, 1e6));
    HorizonProblem hp;
    hp.A = A;
    hp.B = B;
    hp.x0 = x0;
    hp.M = M;
    hp.costs = &costs;
    hp.U = &U;
    const ControlSequence seq = solve_horizon(hp);
    const auto ref = riccati_sequence(A, B, Q, R, Matrix::Zero(n, n), M, x0);
    for (int k = 0; k < M; ++k) {
      worst = std::max(worst, (seq.w[static_cast<std::size_t>(k)] - ref[static_cast<std::size_t>(k)]).lpNorm<Eigen::Infinity>());
    }
  }
  return {"dp-equivalence", worst <= 1e-6, "max input deviation " + fmt(worst)};
}

}  // namespace

std::vector<CheckRow> run_checks(const ExperimentSpec& spec_in, int workers) {
  ExperimentSpec spec = spec_in;
  spec.controller = ControllerKind::OnlineRhc;
  const int T = spec.T.front();
  std::vector<TrajectoryLog> logs(spec.seeds.size());
  parallel_for(spec.seeds.size(), workers, [&](std::size_t k) { logs[k] = execute_run(spec, T, spec.seeds[k]); });

  int intervals = 0, poe_pass = 0, covered_runs = 0, fallbacks = 0;
  double worst_uhat = 0.0, min_sigma = std::numeric_limits<double>::infinity();
  double min_margin = std::numeric_limits<double>::infinity();
  for (const auto& log : logs) {
    bool all = true;
    for (const auto& ir : log.intervals) {
      ++intervals;
      poe_pass += ir.poe_pass;
      all = all && ir.covered;
    }
    covered_runs += all;
    worst_uhat = std::max(worst_uhat, log.max_uhat_violation());
    if (log.window.checked_steps > 0) {
      min_sigma = std::min(min_sigma, log.window.min_sigma);
      min_margin = std::min(min_margin, log.window.min_column_margin);
    }
    fallbacks += log.window.rank_fallbacks;
  }
  const double coverage = static_cast<double>(covered_runs) / static_cast<double>(logs.size());
  std::vector<CheckRow> rows;
  rows.push_back({"poe", poe_pass == intervals,
                  std::to_string(poe_pass) + "/" + std::to_string(intervals) + " intervals pass"});
  rows.push_back({"coverage", coverage >= 0.9, "rate " + fmt(coverage) + " (need >= 0.9)"});
  rows.push_back({"feasibility-split", worst_uhat <= 1e-8, "max u-hat violation " + fmt(worst_uhat)});
  const bool window_ok = spec.base.perturb ? (min_sigma > 1e-10 && min_margin >= -1e-10 && fallbacks == 0) : true;
  rows.push_back({"window-integrity", window_ok,
                  "min sigma " + fmt(min_sigma) + ", min column margin " + fmt(min_margin)});
  rows.push_back(dp_equivalence_check());
  return rows;
}

}  // namespace olrhc
