// tvlearn: generate training sets, learn TV denoising weights, run sweeps.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tvlearn/adjoint.hpp"
#include "tvlearn/bfgs.hpp"
#include "tvlearn/dataset.hpp"
#include "tvlearn/error.hpp"
#include "tvlearn/experiment.hpp"
#include "tvlearn/state_solver.hpp"

namespace fs = std::filesystem;
using namespace tvlearn;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--threads", c.threads, "worker threads for per-image solves")
      ->check(CLI::Range(1u, 256u));
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  if (!c.out.empty()) cfg.out_dir = c.out;
  cfg.validate();
  return cfg;
}

std::string lambda_str(std::span<const double> w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? " " : "") + format_double(w[i]);
  return s;
}

TrainingSet load_or_make(const std::string& data, const ExperimentConfig& cfg, std::size_t n) {
  return data.empty() ? make_training_set(cfg, n) : load_set(data);
}

int cmd_gen_data(const Common& c, std::size_t n, const std::string& pgm_dir) {
  const ExperimentConfig cfg = resolve(c);
  const fs::path out = c.out.empty() ? fs::path("train.tvbl") : fs::path(c.out);
  if (n == 0) n = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
  const TrainingSet ts = make_training_set(cfg, n);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_set(ts, out);
  if (!pgm_dir.empty()) {
    fs::create_directories(pgm_dir);
    for (const auto& p : ts.pairs()) {
      const std::string k = std::to_string(p.index);
      write_pgm(p.clean, fs::path(pgm_dir) / ("clean_" + k + ".pgm"));
      write_pgm(p.noisy, fs::path(pgm_dir) / ("noisy_" + k + ".pgm"));
    }
  }
  std::printf("wrote %zu pairs (%zux%zu) to %s\n", ts.size(), ts.rows(), ts.cols(), out.string().c_str());
  return 0;
}

int cmd_learn(const Common& c, const std::string& mode, std::optional<double> theta,
              const std::string& data) {
  const ExperimentConfig cfg = resolve(c);
  const std::size_t n = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
  const TrainingSet ts = load_or_make(data, cfg, n);
  const RunConfig rc = make_run_config(cfg, parse_run_mode(mode), theta.value_or(cfg.run.theta));

  GradientOptions opts;
  opts.threads = cfg.threads;
  PdeObjective obj(ts, cfg.fidelity, cfg.state, opts);
  const RunResult r = run(obj, rc);

  std::printf("mode %s  N %zu  lambda %s\n", std::string(to_string(rc.mode)).c_str(), ts.size(),
              lambda_str(r.lambda_hat.weights()).c_str());
  std::printf("iterations %d  state solves %zu  adjoint solves %zu  |S| %zu -> %zu  (%s)\n",
              r.outer_iterations, r.pde_solve_count, r.adjoint_solves, r.initial_sample_size,
              r.final_sample_size, r.stop_reason.c_str());

  if (!c.out.empty()) {
    fs::create_directories(c.out);
    nlohmann::ordered_json j;
    j["mode"] = to_string(rc.mode);
    j["theta"] = rc.theta;
    j["N"] = ts.size();
    j["lambda"] = std::vector<double>(r.lambda_hat.weights().begin(), r.lambda_hat.weights().end());
    j["state_solves"] = r.pde_solve_count;
    j["line_search_solves"] = r.line_search_solves;
    j["adjoint_solves"] = r.adjoint_solves;
    j["iterations"] = r.outer_iterations;
    j["converged"] = r.converged;
    j["stop_reason"] = r.stop_reason;
    j["S0"] = r.initial_sample_size;
    j["S_end"] = r.final_sample_size;
    auto trace = nlohmann::ordered_json::array();
    for (const auto& rec : r.trace) {
      trace.push_back({{"iteration", rec.iteration},
                       {"J_S", rec.value},
                       {"sample_size", rec.sample_size},
                       {"lambda", std::vector<double>(rec.lambda.data(), rec.lambda.data() + rec.lambda.size())},
                       {"alpha", rec.alpha},
                       {"pde_solves", rec.pde_solves}});
    }
    j["trace"] = std::move(trace);
    std::ofstream(fs::path(c.out) / "learn.json", std::ios::binary) << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_experiment(const Common& c, std::optional<double> theta) {
  ExperimentConfig cfg = resolve(c);
  if (theta) {
    cfg.run.theta = *theta;
    cfg.validate();
  }
  const ExperimentReport report = run_experiment(cfg);
  write_report(report, cfg, cfg.out_dir);
  emit_table(report.rows, std::cout, true);
  int failed = 0;
  for (const auto& r : report.rows) {
    if (!r.ok()) {
      ++failed;
      std::fprintf(stderr, "row N=%zu theta=%g failed: %s\n", r.n, r.theta, r.error.c_str());
    }
  }
  std::printf("report written to %s\n", cfg.out_dir.string().c_str());
  return failed ? 2 : 0;
}

int cmd_denoise(const Common& c, const std::vector<double>& lambda, const std::string& data,
                std::size_t limit) {
  const ExperimentConfig cfg = resolve(c);
  const std::size_t n = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
  const TrainingSet ts = load_or_make(data, cfg, n);
  const ParamVec weights = lambda.empty() ? cfg.initial_lambda() : ParamVec(lambda);
  weights.require_dim(cfg.fidelity);
  const fs::path out = c.out.empty() ? fs::path("denoised") : fs::path(c.out);
  fs::create_directories(out);

  double noisy_mse = 0.0;
  double denoised_mse = 0.0;
  const std::size_t count = limit ? std::min(limit, ts.size()) : ts.size();
  for (std::size_t k = 0; k < count; ++k) {
    const auto& p = ts[k];
    const StateSolution s = solve_state(p.noisy, weights, cfg.fidelity, cfg.state);
    const std::string tag = std::to_string(p.index);
    write_pgm(p.clean, out / ("clean_" + tag + ".pgm"));
    write_pgm(p.noisy, out / ("noisy_" + tag + ".pgm"));
    write_pgm(s.u, out / ("denoised_" + tag + ".pgm"));
    noisy_mse += mse(p.noisy, p.clean);
    denoised_mse += mse(s.u, p.clean);
    std::printf("pair %zu  mse noisy %.6g  denoised %.6g  newton %d%s\n", p.index, mse(p.noisy, p.clean),
                mse(s.u, p.clean), s.report.iterations, s.report.converged ? "" : "  (not converged)");
  }
  std::printf("mean mse noisy %.6g  denoised %.6g\n", noisy_mse / count, denoised_mse / count);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn TV denoising fidelity weights with bilevel BFGS"};
  app.require_subcommand(1);

  Common gen_c;
  std::size_t gen_n = 0;
  std::string gen_pgm;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic .tvbl training set");
  add_common(gen, gen_c);
  gen->add_option("--out", gen_c.out, "output .tvbl file (default train.tvbl)");
  gen->add_option("-n,--pairs", gen_n, "number of pairs (default: largest N in the config)");
  gen->add_option("--pgm", gen_pgm, "also dump PGM images into this directory");

  Common learn_c;
  std::string learn_mode = "dynamic";
  std::optional<double> learn_theta;
  std::string learn_data;
  auto* learn = app.add_subcommand("learn", "run one optimization");
  add_common(learn, learn_c);
  learn->add_option("--out", learn_c.out, "directory for learn.json");
  learn->add_option("--mode", learn_mode, "full or dynamic")->check(CLI::IsMember({"full", "dynamic"}));
  learn->add_option("--theta", learn_theta, "variance-test parameter in [0,1)")->check(CLI::Range(0.0, 0.999999));
  learn->add_option("--data", learn_data, ".tvbl training set (default: generate from config)")
      ->check(CLI::ExistingFile);

  Common exp_c;
  std::optional<double> exp_theta;
  auto* exp = app.add_subcommand("experiment", "full vs dynamic comparison over N and theta");
  add_common(exp, exp_c);
  exp->add_option("--out", exp_c.out, "report directory (overrides the config)");
  exp->add_option("--theta", exp_theta, "primary theta (overrides the config)")->check(CLI::Range(0.0, 0.999999));

  Common den_c;
  std::vector<double> den_lambda;
  std::string den_data;
  std::size_t den_limit = 0;
  auto* den = app.add_subcommand("denoise", "denoise a set at given weights and dump PGM triples");
  add_common(den, den_c);
  den->add_option("--out", den_c.out, "output directory (default denoised)");
  den->add_option("--lambda", den_lambda, "fidelity weights")->expected(1, 2);
  den->add_option("--data", den_data, ".tvbl set (default: generate from config)")->check(CLI::ExistingFile);
  den->add_option("--limit", den_limit, "only the first k pairs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_data(gen_c, gen_n, gen_pgm);
    if (*learn) return cmd_learn(learn_c, learn_mode, learn_theta, learn_data);
    if (*exp) return cmd_experiment(exp_c, exp_theta);
    if (*den) return cmd_denoise(den_c, den_lambda, den_data, den_limit);
  } catch (const tvlearn::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
