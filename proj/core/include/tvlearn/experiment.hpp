#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tvlearn/bfgs.hpp"
#include "tvlearn/dataset.hpp"
#include "tvlearn/params.hpp"
#include "tvlearn/state_solver.hpp"

namespace tvlearn {

struct ExperimentConfig {
  PhantomKind phantom = PhantomKind::ellipses;
  std::size_t rows = 32;
  std::size_t cols = 32;
  std::vector<std::size_t> sizes{20};  // training-set sizes N
  NoiseModelSpec noise;                 // noise.seed is ignored; derived from seed
  std::size_t test_size = 0;            // held-out pairs for the denoising check

  FidelitySpec fidelity;
  StateConfig state;
  RunConfig run;                 // shared by both modes; run.theta is the primary theta
  std::vector<double> thetas;    // sweep; empty means {run.theta}
  std::optional<ParamVec> lambda0;  // default depends on the fidelity kind

  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::filesystem::path out_dir = "out";

  void validate() const;

  /// Sweep list with run.theta included, ascending and without duplicates.
  std::vector<double> theta_list() const;
  ParamVec initial_lambda() const;
};

/// Training pairs 0..n-1 of the configured set (noise seed derived from
/// cfg.seed); sets for different n share their leading pairs.
TrainingSet make_training_set(const ExperimentConfig& cfg, std::size_t n);
/// Held-out pairs drawn from an independent seed stream.
TrainingSet make_test_set(const ExperimentConfig& cfg, std::size_t n);
/// cfg.run with the mode, theta, initial lambda and derived sampler seed set.
RunConfig make_run_config(const ExperimentConfig& cfg, RunMode mode, double theta);

/// Parses a TOML-style key/value config. Supported: `# comments`, `[section]`
/// headers (keys become section.key), bare numbers, quoted strings and flat
/// arrays `[a, b]`. Unknown keys are errors.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct TracePoint {
  int iteration = 0;
  double value = 0.0;
  double grad_norm = 0.0;
  std::size_t sample_size = 0;
  std::vector<double> lambda;
  double alpha = 0.0;
  std::size_t pde_solves = 0;
  bool variance_ok = true;

  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

/// Summary of one optimizer run as it appears in the report.
struct RunSummary {
  std::vector<double> lambda;
  std::size_t s0 = 0;
  std::size_t s_end = 0;
  std::size_t pde_solves = 0;
  std::size_t line_search_solves = 0;
  std::size_t adjoint_solves = 0;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  int max_newton_iterations = 0;
  std::size_t unconverged_solves = 0;
  std::vector<TracePoint> trace;
  std::optional<double> test_mse;  // mean MSE of denoised test images at lambda

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

/// One (N, theta) row: the full-batch reference and the dynamic run.
struct ReportRow {
  std::size_t n = 0;
  double theta = 0.0;
  std::vector<double> lambda_full;
  std::vector<double> lambda_sampled;
  std::size_t s0 = 0;
  std::size_t s_end = 0;
  std::size_t eff_full = 0;  // state solves, full batch
  std::size_t eff_dyn = 0;   // state solves, dynamic sampling
  int iters_full = 0;
  int iters_dyn = 0;
  double diff = 0.0;  // ||lambda_S - lambda||_1 / ||lambda_S||_1
  std::string error;  // non-empty when the row failed

  bool ok() const noexcept { return error.empty(); }
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct NReport {
  std::size_t n = 0;
  std::optional<RunSummary> full;
  std::vector<std::pair<double, RunSummary>> dynamic;  // per theta, ascending
  std::optional<double> test_mse_noisy;
  std::string error;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;  // ordered by (N as configured, theta ascending)
  std::vector<NReport> runs;
  double primary_theta = 0.5;
};

/// ||a - b||_1 / ||a||_1 with a = lambda_sampled, b = lambda_full.
double relative_difference(const std::vector<double>& lambda_sampled,
                           const std::vector<double>& lambda_full);

/// Builds the datasets, runs both modes for every N (dynamic once per theta)
/// and collects counters. A failing run is recorded in its rows and does not
/// stop the sweep. Writes nothing; see write_report().
ExperimentReport run_experiment(const ExperimentConfig& cfg);

inline constexpr std::string_view kTableHeader =
    "N,lambda_full,lambda_sampled,S0,S_end,eff_full,eff_dyn,iters_full,iters_dyn,diff_pct";

/// CSV with kTableHeader. Multi-weight lambdas are ';'-separated; doubles use
/// the shortest round-trip form. Failed rows are omitted (see the JSON report).
/// With `with_theta` a leading theta column is added (sweep table).
void emit_table(const std::vector<ReportRow>& rows, std::ostream& out, bool with_theta = false);
std::vector<ReportRow> parse_table(std::istream& in);

/// Structured JSON with config echo, rows, counters and traces.
std::string report_json(const ExperimentReport& report, const ExperimentConfig& cfg);

/// Two-column series files in `dir`: objective_N<n>_full.dat,
/// objective_N<n>_theta<t>.dat and sample_size_N<n>_theta<t>.dat.
/// Returns the written paths in a fixed order.
std::vector<std::filesystem::path> emit_plot_data(const ExperimentReport& report,
                                                  const std::filesystem::path& dir);

/// table.csv (primary theta), sweep.csv (all thetas), report.json, plots/.
void write_report(const ExperimentReport& report, const ExperimentConfig& cfg,
                  const std::filesystem::path& dir);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace tvlearn
