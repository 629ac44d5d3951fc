#include "tvlearn/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "tvlearn/adjoint.hpp"
#include "tvlearn/error.hpp"
#include "tvlearn/random.hpp"

namespace tvlearn {

namespace {

// Sub-seeds of the master seed.
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kRunStream = 2;
constexpr std::uint64_t kTestStream = 3;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Strips a trailing comment that is not inside quotes.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

struct RawValue {
  std::vector<std::string> items;  // one item for scalars
  bool array = false;
  int line = 0;
};

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

double to_double(const std::string& key, const RawValue& v, std::size_t i = 0) {
  const std::string& s = v.items.at(i);
  double out = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw InvalidArgument("config line " + std::to_string(v.line) + ": '" + key +
                          "' expects a number, got '" + s + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const RawValue& v, std::size_t i = 0) {
  const std::string& s = v.items.at(i);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw InvalidArgument("config line " + std::to_string(v.line) + ": '" + key +
                          "' expects a nonnegative integer, got '" + s + "'");
  }
  return out;
}

std::vector<double> to_doubles(const std::string& key, const RawValue& v) {
  std::vector<double> out;
  for (std::size_t i = 0; i < v.items.size(); ++i) out.push_back(to_double(key, v, i));
  return out;
}

RunSummary summarize(const RunResult& r, const PdeObjective& obj) {
  RunSummary s;
  s.lambda.assign(r.lambda_hat.weights().begin(), r.lambda_hat.weights().end());
  s.s0 = r.initial_sample_size;
  s.s_end = r.final_sample_size;
  s.pde_solves = r.pde_solve_count;
  s.line_search_solves = r.line_search_solves;
  s.adjoint_solves = r.adjoint_solves;
  s.iterations = r.outer_iterations;
  s.converged = r.converged;
  s.stop_reason = r.stop_reason;
  s.max_newton_iterations = obj.max_newton_iterations();
  s.unconverged_solves = obj.unconverged_solves();
  for (const auto& rec : r.trace) {
    TracePoint p;
    p.iteration = rec.iteration;
    p.value = rec.value;
    p.grad_norm = rec.grad.norm();
    p.sample_size = rec.sample_size;
    p.lambda.assign(rec.lambda.data(), rec.lambda.data() + rec.lambda.size());
    p.alpha = rec.alpha;
    p.pde_solves = rec.pde_solves;
    p.variance_ok = rec.variance_ok;
    s.trace.push_back(std::move(p));
  }
  return s;
}

double mean_test_mse(const TrainingSet& test, const std::vector<double>& lambda,
                     const FidelitySpec& spec, const StateConfig& cfg) {
  double acc = 0.0;
  for (const auto& pair : test.pairs()) {
    acc += mse(solve_state(pair.noisy, ParamVec(lambda), spec, cfg).u, pair.clean);
  }
  return acc / static_cast<double>(test.size());
}

std::string theta_tag(double theta) {
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << theta;
  return os.str();
}

std::string join_lambda(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_field_double(const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw FormatError("table: bad number '" + s + "'");
  }
  return v;
}

template <class T>
T parse_field_int(const std::string& s) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw FormatError("table: bad integer '" + s + "'");
  }
  return v;
}

nlohmann::ordered_json trace_json(const std::vector<TracePoint>& trace) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : trace) {
    arr.push_back({{"iteration", p.iteration},
                   {"J_S", p.value},
                   {"grad_norm", p.grad_norm},
                   {"sample_size", p.sample_size},
                   {"lambda", p.lambda},
                   {"alpha", p.alpha},
                   {"pde_solves", p.pde_solves},
                   {"variance_ok", p.variance_ok}});
  }
  return arr;
}

nlohmann::ordered_json summary_json(const RunSummary& s) {
  nlohmann::ordered_json j{{"lambda", s.lambda},
                           {"S0", s.s0},
                           {"S_end", s.s_end},
                           {"state_solves", s.pde_solves},
                           {"line_search_solves", s.line_search_solves},
                           {"adjoint_solves", s.adjoint_solves},
                           {"iterations", s.iterations},
                           {"converged", s.converged},
                           {"stop_reason", s.stop_reason},
                           {"max_newton_iterations", s.max_newton_iterations},
                           {"unconverged_state_solves", s.unconverged_solves}};
  if (s.test_mse) j["test_mse"] = *s.test_mse;
  j["trace"] = trace_json(s.trace);
  return j;
}

void write_series(const std::filesystem::path& path, std::string_view header,
                  const std::vector<std::pair<int, std::string>>& points) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# " << header << '\n';
  for (const auto& [i, v] : points) out << i << ' ' << v << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void ExperimentConfig::validate() const {
  if (rows < 8 || cols < 8) throw InvalidArgument("ExperimentConfig: images must be at least 8x8");
  if (sizes.empty()) throw InvalidArgument("ExperimentConfig: empty N list");
  for (auto n : sizes) {
    if (n < 1) throw InvalidArgument("ExperimentConfig: every N must be >= 1");
  }
  for (double t : thetas) {
    if (!(t >= 0.0 && t < 1.0)) throw InvalidArgument("ExperimentConfig: theta must lie in [0,1)");
  }
  if (threads < 1) throw InvalidArgument("ExperimentConfig: threads must be >= 1");
  noise.validate();
  state.validate();
  RunConfig probe = run;
  probe.lambda0 = initial_lambda();
  probe.validate();
  probe.lambda0.require_dim(fidelity);
}

std::vector<double> ExperimentConfig::theta_list() const {
  std::vector<double> out = thetas;
  out.push_back(run.theta);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ParamVec ExperimentConfig::initial_lambda() const {
  if (lambda0) return *lambda0;
  // lambda_1 weights the Huberized L1 term, lambda_2 the quadratic term.
  return fidelity.kind == FidelityKind::gaussian_only ? ParamVec{1000.0} : ParamVec{50.0, 10.0};
}

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, RawValue> kv;
  std::string section;
  int lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string val = trim(std::string_view(line).substr(eq + 1));
    if (key.empty() || val.empty()) {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key or value");
    }
    if (!section.empty()) key = section + "." + key;
    RawValue rv;
    rv.line = lineno;
    if (val.front() == '[') {
      if (val.back() != ']') {
        throw InvalidArgument("config line " + std::to_string(lineno) + ": unterminated array");
      }
      rv.array = true;
      const std::string body = trim(std::string_view(val).substr(1, val.size() - 2));
      if (!body.empty()) {
        for (const auto& item : split(body, ',')) rv.items.push_back(unquote(trim(item)));
      }
    } else {
      rv.items.push_back(unquote(val));
    }
    if (kv.contains(key)) {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    kv.emplace(std::move(key), std::move(rv));
  }

  ExperimentConfig cfg;
  for (const auto& [key, v] : kv) {
    auto scalar = [&]() -> const std::string& {
      if (v.array || v.items.size() != 1) {
        throw InvalidArgument("config line " + std::to_string(v.line) + ": '" + key + "' expects a scalar");
      }
      return v.items.front();
    };
    if (key == "seed") {
      scalar();
      cfg.seed = to_uint(key, v);
    } else if (key == "threads") {
      scalar();
      cfg.threads = static_cast<unsigned>(to_uint(key, v));
    } else if (key == "out") {
      cfg.out_dir = scalar();
    } else if (key == "dataset.phantom") {
      cfg.phantom = parse_phantom_kind(scalar());
    } else if (key == "dataset.rows") {
      scalar();
      cfg.rows = to_uint(key, v);
    } else if (key == "dataset.cols") {
      scalar();
      cfg.cols = to_uint(key, v);
    } else if (key == "dataset.size") {
      scalar();
      cfg.rows = cfg.cols = to_uint(key, v);
    } else if (key == "dataset.n") {
      cfg.sizes.clear();
      for (std::size_t i = 0; i < v.items.size(); ++i) cfg.sizes.push_back(to_uint(key, v, i));
    } else if (key == "dataset.sigma") {
      cfg.noise.gaussian_sigma = to_double(key, v);
    } else if (key == "dataset.impulse_fraction") {
      cfg.noise.impulse_fraction = to_double(key, v);
    } else if (key == "dataset.impulse_kind") {
      cfg.noise.impulse_kind = parse_impulse_kind(scalar());
    } else if (key == "dataset.test_size") {
      scalar();
      cfg.test_size = to_uint(key, v);
    } else if (key == "model.fidelity") {
      cfg.fidelity.kind = parse_fidelity_kind(scalar());
    } else if (key == "model.gamma") {
      cfg.state.huber.gamma = to_double(key, v);
    } else if (key == "model.epsilon") {
      cfg.state.epsilon = to_double(key, v);
    } else if (key == "model.boundary") {
      cfg.state.boundary = parse_boundary(scalar());
    } else if (key == "model.max_newton") {
      scalar();
      cfg.state.max_iter = static_cast<int>(to_uint(key, v));
    } else if (key == "model.residual_tol") {
      cfg.state.residual_tol = to_double(key, v);
    } else if (key == "run.theta") {
      cfg.run.theta = to_double(key, v);
    } else if (key == "run.thetas") {
      cfg.thetas = to_doubles(key, v);
    } else if (key == "run.lambda0") {
      cfg.lambda0 = ParamVec(to_doubles(key, v));
    } else if (key == "run.initial_fraction") {
      cfg.run.initial_sample_fraction = to_double(key, v);
    } else if (key == "run.grad_tol") {
      cfg.run.grad_tol = to_double(key, v);
    } else if (key == "run.step_tol") {
      cfg.run.step_tol = to_double(key, v);
    } else if (key == "run.max_iters") {
      scalar();
      cfg.run.max_outer_iters = static_cast<int>(to_uint(key, v));
    } else if (key == "run.growth") {
      cfg.run.growth = parse_sample_growth(scalar());
    } else {
      throw InvalidArgument("config line " + std::to_string(v.line) + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

TrainingSet make_training_set(const ExperimentConfig& cfg, std::size_t n) {
  NoiseModelSpec noise = cfg.noise;
  noise.seed = derive_seed(cfg.seed, kTrainStream);
  return build_training_set(cfg.phantom, cfg.rows, cfg.cols, n, noise);
}

TrainingSet make_test_set(const ExperimentConfig& cfg, std::size_t n) {
  NoiseModelSpec noise = cfg.noise;
  noise.seed = derive_seed(cfg.seed, kTestStream);
  return build_training_set(cfg.phantom, cfg.rows, cfg.cols, n, noise);
}

RunConfig make_run_config(const ExperimentConfig& cfg, RunMode mode, double theta) {
  RunConfig rc = cfg.run;
  rc.mode = mode;
  rc.theta = theta;
  rc.lambda0 = cfg.initial_lambda();
  rc.seed = derive_seed(cfg.seed, kRunStream);
  return rc;
}

double relative_difference(const std::vector<double>& lambda_sampled,
                           const std::vector<double>& lambda_full) {
  if (lambda_sampled.size() != lambda_full.size()) {
    throw DimensionMismatch("relative_difference: lambda sizes differ");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < lambda_sampled.size(); ++i) {
    num += std::abs(lambda_sampled[i] - lambda_full[i]);
    den += std::abs(lambda_sampled[i]);
  }
  if (den == 0.0) throw InvalidArgument("relative_difference: sampled lambda is zero");
  return num / den;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto thetas = cfg.theta_list();
  const std::size_t n_max = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());

  // Pair k is identical in every N, so smaller sets are prefixes of larger ones.
  const TrainingSet all = make_training_set(cfg, n_max);
  std::optional<TrainingSet> test;
  if (cfg.test_size > 0) test = make_test_set(cfg, cfg.test_size);

  GradientOptions gopts;
  gopts.threads = cfg.threads;

  ExperimentReport report;
  report.primary_theta = cfg.run.theta;
  for (std::size_t n : cfg.sizes) {
    NReport nr;
    nr.n = n;
    const TrainingSet ts(std::vector<TrainingPair>(all.pairs().begin(),
                                                   all.pairs().begin() + static_cast<std::ptrdiff_t>(n)));
    if (test) {
      double acc = 0.0;
      for (const auto& p : test->pairs()) acc += mse(p.noisy, p.clean);
      nr.test_mse_noisy = acc / static_cast<double>(test->size());
    }

    auto one_run = [&](RunMode mode, double theta) {
      const RunConfig rc = make_run_config(cfg, mode, theta);
      PdeObjective obj(ts, cfg.fidelity, cfg.state, gopts);
      RunSummary s = summarize(run(obj, rc), obj);
      if (test) s.test_mse = mean_test_mse(*test, s.lambda, cfg.fidelity, cfg.state);
      return s;
    };

    std::string full_error;
    try {
      nr.full = one_run(RunMode::full_batch, cfg.run.theta);
    } catch (const std::exception& e) {
      full_error = std::string("full batch: ") + e.what();
    }

    for (double theta : thetas) {
      ReportRow row;
      row.n = n;
      row.theta = theta;
      std::optional<RunSummary> dyn;
      try {
        dyn = one_run(RunMode::dynamic_sampling, theta);
        nr.dynamic.emplace_back(theta, *dyn);
      } catch (const std::exception& e) {
        row.error = std::string("dynamic: ") + e.what();
      }
      if (!full_error.empty()) row.error = full_error + (row.error.empty() ? "" : "; " + row.error);
      if (nr.full) {
        row.lambda_full = nr.full->lambda;
        row.eff_full = nr.full->pde_solves;
        row.iters_full = nr.full->iterations;
      }
      if (dyn) {
        row.lambda_sampled = dyn->lambda;
        row.s0 = dyn->s0;
        row.s_end = dyn->s_end;
        row.eff_dyn = dyn->pde_solves;
        row.iters_dyn = dyn->iterations;
      }
      if (row.ok()) row.diff = relative_difference(row.lambda_sampled, row.lambda_full);
      report.rows.push_back(std::move(row));
    }
    nr.error = full_error;
    report.runs.push_back(std::move(nr));
  }
  return report;
}

void emit_table(const std::vector<ReportRow>& rows, std::ostream& out, bool with_theta) {
  if (with_theta) out << "theta,";
  out << kTableHeader << '\n';
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    if (with_theta) out << format_double(r.theta) << ',';
    out << r.n << ',' << join_lambda(r.lambda_full) << ',' << join_lambda(r.lambda_sampled) << ','
        << r.s0 << ',' << r.s_end << ',' << r.eff_full << ',' << r.eff_dyn << ',' << r.iters_full
        << ',' << r.iters_dyn << ',' << format_double(100.0 * r.diff) << '\n';
  }
  if (!out) throw IoError("emit_table: write failed");
}

std::vector<ReportRow> parse_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("table: missing header");
  bool with_theta = false;
  if (line != kTableHeader) {
    if (line == "theta," + std::string(kTableHeader)) {
      with_theta = true;
    } else {
      throw FormatError("table: unexpected header '" + line + "'");
    }
  }
  auto lambdas = [](const std::string& s) {
    std::vector<double> v;
    for (const auto& item : split(s, ';')) v.push_back(parse_field_double(item));
    return v;
  };
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line, ',');
    const std::size_t off = with_theta ? 1 : 0;
    if (f.size() != 10 + off) throw FormatError("table: wrong field count in '" + line + "'");
    ReportRow r;
    if (with_theta) r.theta = parse_field_double(f[0]);
    r.n = parse_field_int<std::size_t>(f[off + 0]);
    r.lambda_full = lambdas(f[off + 1]);
    r.lambda_sampled = lambdas(f[off + 2]);
    r.s0 = parse_field_int<std::size_t>(f[off + 3]);
    r.s_end = parse_field_int<std::size_t>(f[off + 4]);
    r.eff_full = parse_field_int<std::size_t>(f[off + 5]);
    r.eff_dyn = parse_field_int<std::size_t>(f[off + 6]);
    r.iters_full = parse_field_int<int>(f[off + 7]);
    r.iters_dyn = parse_field_int<int>(f[off + 8]);
    r.diff = parse_field_double(f[off + 9]) / 100.0;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string report_json(const ExperimentReport& report, const ExperimentConfig& cfg) {
  using json = nlohmann::ordered_json;
  const ParamVec l0 = cfg.initial_lambda();
  json j;
  j["config"] = {
      {"seed", cfg.seed},
      {"phantom", to_string(cfg.phantom)},
      {"rows", cfg.rows},
      {"cols", cfg.cols},
      {"n", cfg.sizes},
      {"sigma", cfg.noise.gaussian_sigma},
      {"impulse_fraction", cfg.noise.impulse_fraction},
      {"impulse_kind", to_string(cfg.noise.impulse_kind)},
      {"test_size", cfg.test_size},
      {"fidelity", to_string(cfg.fidelity.kind)},
      {"gamma", cfg.state.huber.gamma},
      {"epsilon", cfg.state.epsilon},
      {"boundary", to_string(cfg.state.boundary)},
      {"max_newton", cfg.state.max_iter},
      {"residual_tol", cfg.state.residual_tol},
      {"theta", cfg.run.theta},
      {"thetas", cfg.theta_list()},
      {"lambda0", std::vector<double>(l0.weights().begin(), l0.weights().end())},
      {"initial_fraction", cfg.run.initial_sample_fraction},
      {"grad_tol", cfg.run.grad_tol},
      {"step_tol", cfg.run.step_tol},
      {"max_iters", cfg.run.max_outer_iters},
      {"growth", to_string(cfg.run.growth)},
  };
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row{{"N", r.n},
             {"theta", r.theta},
             {"lambda_full", r.lambda_full},
             {"lambda_sampled", r.lambda_sampled},
             {"S0", r.s0},
             {"S_end", r.s_end},
             {"eff_full", r.eff_full},
             {"eff_dyn", r.eff_dyn},
             {"iters_full", r.iters_full},
             {"iters_dyn", r.iters_dyn},
             {"diff", r.diff}};
    if (!r.ok()) row["error"] = r.error;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  json runs = json::array();
  for (const auto& nr : report.runs) {
    json e{{"N", nr.n}};
    if (nr.test_mse_noisy) e["test_mse_noisy"] = *nr.test_mse_noisy;
    e["full"] = nr.full ? summary_json(*nr.full) : json(nullptr);
    json dyn = json::array();
    for (const auto& [theta, s] : nr.dynamic) {
      json d = summary_json(s);
      d["theta"] = theta;
      dyn.push_back(std::move(d));
    }
    e["dynamic"] = std::move(dyn);
    if (!nr.error.empty()) e["error"] = nr.error;
    runs.push_back(std::move(e));
  }
  j["runs"] = std::move(runs);
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> emit_plot_data(const ExperimentReport& report,
                                                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& nr : report.runs) {
    const std::string n = std::to_string(nr.n);
    if (nr.full) {
      std::vector<std::pair<int, std::string>> pts;
      for (const auto& p : nr.full->trace) pts.emplace_back(p.iteration, format_double(p.value));
      auto path = dir / ("objective_N" + n + "_full.dat");
      write_series(path, "iteration J_S", pts);
      written.push_back(path);
    }
    for (const auto& [theta, s] : nr.dynamic) {
      std::vector<std::pair<int, std::string>> obj;
      std::vector<std::pair<int, std::string>> size;
      for (const auto& p : s.trace) {
        obj.emplace_back(p.iteration, format_double(p.value));
        size.emplace_back(p.iteration, std::to_string(p.sample_size));
      }
      const std::string tag = "N" + n + "_theta" + theta_tag(theta);
      auto po = dir / ("objective_" + tag + ".dat");
      auto ps = dir / ("sample_size_" + tag + ".dat");
      write_series(po, "iteration J_S", obj);
      write_series(ps, "iteration sample_size", size);
      written.push_back(po);
      written.push_back(ps);
    }
  }
  return written;
}

void write_report(const ExperimentReport& report, const ExperimentConfig& cfg,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    return out;
  };
  std::vector<ReportRow> primary;
  for (const auto& r : report.rows) {
    if (r.theta == report.primary_theta) primary.push_back(r);
  }
  {
    auto out = open("table.csv");
    emit_table(primary, out);
  }
  {
    auto out = open("sweep.csv");
    emit_table(report.rows, out, true);
  }
  {
    auto out = open("report.json");
    out << report_json(report, cfg);
    if (!out) throw IoError("write failed: report.json");
  }
  emit_plot_data(report, dir / "plots");
}

}  // namespace tvlearn
