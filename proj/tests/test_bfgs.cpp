#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "support.hpp"
#include "tvlearn/adjoint.hpp"
#include "tvlearn/bfgs.hpp"
#include "tvlearn/error.hpp"

using namespace tvlearn;

namespace {

RunConfig tight(RunMode mode, double lambda0) {
  RunConfig cfg;
  cfg.mode = mode;
  cfg.lambda0 = ParamVec{lambda0};
  cfg.grad_tol = 1e-12;
  cfg.step_tol = 1e-14;
  cfg.seed = 7;
  return cfg;
}

// Golden-section minimum of a unimodal scalar function on [a, b] in log space.
template <class F>
double golden_log(F f, double a, double b, double tol) {
  const double r = (std::sqrt(5.0) - 1) / 2;
  double lo = std::log(a), hi = std::log(b);
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = f(std::exp(x1)), f2 = f(std::exp(x2));
  while (hi - lo > tol) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(std::exp(x1));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(std::exp(x2));
    }
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace

TEST(BfgsUpdate, ScalarExample) {
  const BfgsUpdate u = bfgs_update(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1),
                                   Eigen::VectorXd::Constant(1, 2.0));
  EXPECT_TRUE(u.updated);
  EXPECT_DOUBLE_EQ(u.inv_hessian(0, 0), 0.5);
}

TEST(BfgsUpdate, SkippedWithoutCurvature) {
  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(2, 2);
  const BfgsUpdate u = bfgs_update(h, Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0));
  EXPECT_FALSE(u.updated);
  EXPECT_EQ(u.inv_hessian, h);
}

TEST(BfgsUpdate, SecantAndSymmetry) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::Vector3d s, y;
    for (int i = 0; i < 3; ++i) {
      s[i] = nd(rng);
      y[i] = s[i] + 0.3 * nd(rng);
    }
    if (s.dot(y) <= 0) continue;
    const BfgsUpdate u = bfgs_update(Eigen::MatrixXd::Identity(3, 3), s, y);
    ASSERT_TRUE(u.updated);
    EXPECT_LT((u.inv_hessian * y - s).norm(), 1e-12 * s.norm());
    EXPECT_LT((u.inv_hessian - u.inv_hessian.transpose()).norm(), 1e-15);
    EXPECT_GT(u.inv_hessian.ldlt().vectorD().minCoeff(), 0.0);
  }
}

TEST(BfgsUpdate, ExactInverseHessianAfterDConjugateSteps) {
  // Steps conjugate with respect to A make the BFGS matrix equal A^{-1}
  // after d updates on a quadratic with Hessian A.
  for (int d : {1, 2}) {
    Eigen::MatrixXd a(d, d);
    if (d == 1) {
      a << 3.5;
    } else {
      a << 4.0, 1.0, 1.0, 2.0;
    }
    std::vector<Eigen::VectorXd> steps;
    Eigen::VectorXd s1 = Eigen::VectorXd::Ones(d);
    steps.push_back(s1);
    if (d == 2) {
      Eigen::Vector2d v(1.0, -2.0);
      steps.push_back(v - (s1.dot(a * v) / s1.dot(a * s1)) * s1);
    }
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(d, d);
    for (const auto& s : steps) h = bfgs_update(h, s, a * s).inv_hessian;
    EXPECT_LT((h - a.inverse()).norm(), 1e-8) << "d=" << d;
  }
}

TEST(PositivityBound, Examples) {
  EXPECT_DOUBLE_EQ(positivity_bound(Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, -2.0)),
                   0.99 * 0.5);
  EXPECT_TRUE(std::isinf(positivity_bound(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 0))));
  EXPECT_DOUBLE_EQ(positivity_bound(Eigen::Vector2d(1, 4), Eigen::Vector2d(-1, -1)), 0.99);
}

TEST(Armijo, CapsAtPositivityBound) {
  const Eigen::VectorXd lam = Eigen::VectorXd::Constant(1, 1.0);
  const Eigen::VectorXd d = Eigen::VectorXd::Constant(1, -2.0);
  std::vector<double> tried;
  auto eval = [&](const Eigen::VectorXd& x) {
    tried.push_back(x[0]);
    BatchEvaluation ev;
    ev.value = (x[0] - 0.2) * (x[0] - 0.2);
    ev.grad = Eigen::VectorXd::Constant(1, 2 * (x[0] - 0.2));
    return ev;
  };
  const LineSearchResult r = armijo_search(lam, d, 0.64, Eigen::VectorXd::Constant(1, 1.6), eval, {});
  EXPECT_LT(r.alpha, 0.5);
  EXPECT_GT(tried.front(), 0.0);
  EXPECT_GT(r.lambda[0], 0.0);
}

TEST(Armijo, UnitStepOnQuadratic) {
  auto q = tvtest::scalar_quadratic(10, 3);
  std::vector<std::size_t> all(10);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Eigen::VectorXd lam = Eigen::VectorXd::Constant(1, 10.0);
  const BatchEvaluation ev = q.evaluate(lam, all);
  // Newton-scaled direction (H = A^{-1} = 1 with J'' = 1).
  const LineSearchResult r = armijo_search(
      lam, -ev.grad, ev.value, ev.grad, [&](const Eigen::VectorXd& x) { return q.evaluate(x, all); }, {});
  EXPECT_EQ(r.alpha, 1.0);
  EXPECT_EQ(r.evals, 1);
  EXPECT_NEAR(r.lambda[0], q.minimizer()[0], 1e-12);
}

TEST(Armijo, NonDescentDirectionCostsNothing) {
  int calls = 0;
  auto eval = [&](const Eigen::VectorXd&) {
    ++calls;
    return BatchEvaluation{};
  };
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(1, 1.0);
  EXPECT_THROW(armijo_search(g, g, 0.0, g, eval, {}), LineSearchError);
  EXPECT_THROW(armijo_search(g, Eigen::VectorXd::Zero(1), 0.0, g, eval, {}), LineSearchError);
  EXPECT_EQ(calls, 0);
}

TEST(Armijo, ExhaustedBacktracks) {
  auto eval = [](const Eigen::VectorXd&) {
    BatchEvaluation ev;
    ev.value = 1.0;
    ev.grad = Eigen::VectorXd::Zero(1);
    return ev;
  };
  ArmijoConfig cfg;
  cfg.max_backtracks = 3;
  EXPECT_THROW(armijo_search(Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 1.0), 0.0,
                             Eigen::VectorXd::Constant(1, -1.0), eval, cfg),
               LineSearchError);
}

TEST(Run, FullBatchReachesClosedFormMinimizer) {
  auto q = tvtest::scalar_quadratic(10, 4);
  const RunResult r = run(q, tight(RunMode::full_batch, 1.0));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.lambda_hat[0], q.minimizer()[0], 1e-8);
  EXPECT_LE(r.outer_iterations, 10);
  EXPECT_EQ(r.initial_sample_size, 10u);
}

TEST(Run, FullBatchTwoDimensional) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> c(2.0, 4.0);
  std::vector<Eigen::VectorXd> centers;
  for (int k = 0; k < 8; ++k) centers.push_back(Eigen::Vector2d(c(rng), c(rng)));
  Eigen::Matrix2d a;
  a << 3.0, 0.5, 0.5, 1.0;
  tvtest::QuadraticObjective q(centers, a);
  RunConfig cfg = tight(RunMode::full_batch, 1.0);
  cfg.lambda0 = ParamVec{1.0, 1.0};
  const RunResult r = run(q, cfg);
  EXPECT_LT((r.lambda_hat.as_vector() - q.minimizer()).norm(), 1e-8);
}

TEST(Run, DynamicReachesClosedFormMinimizer) {
  auto q = tvtest::scalar_quadratic(40, 6);
  RunConfig cfg = tight(RunMode::dynamic_sampling, 1.0);
  cfg.theta = 0.5;
  cfg.max_outer_iters = 100;
  const RunResult r = run(q, cfg);
  EXPECT_NEAR(r.lambda_hat[0], q.minimizer()[0], 1e-3);
  for (const auto& rec : r.trace) EXPECT_LE(rec.sample_size, 40u);
  EXPECT_EQ(r.initial_sample_size, 8u);
  // Sizes never shrink.
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_GE(r.trace[i].sample_size, r.trace[i - 1].sample_size);
  }
}

TEST(Run, CountsAndTraceAreConsistent) {
  auto q = tvtest::scalar_quadratic(10, 8);
  RunConfig cfg = tight(RunMode::dynamic_sampling, 50.0);
  const RunResult r = run(q, cfg);
  ASSERT_FALSE(r.trace.empty());
  EXPECT_EQ(r.trace.back().pde_solves, r.pde_solve_count);
  std::size_t outer = 0;
  for (const auto& rec : r.trace) outer += rec.sample_size;
  EXPECT_EQ(r.pde_solve_count, outer + r.line_search_solves);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_GT(r.trace[i].pde_solves, r.trace[i - 1].pde_solves);
  }
  EXPECT_EQ(r.final_sample_size, r.trace.back().sample_size);
}

TEST(Run, Deterministic) {
  auto q1 = tvtest::scalar_quadratic(20, 9);
  auto q2 = tvtest::scalar_quadratic(20, 9);
  RunConfig cfg = tight(RunMode::dynamic_sampling, 1.0);
  const RunResult a = run(q1, cfg);
  const RunResult b = run(q2, cfg);
  EXPECT_EQ(a.lambda_hat, b.lambda_hat);
  EXPECT_EQ(a.pde_solve_count, b.pde_solve_count);
}

TEST(Run, StaysPositive) {
  // Minimizer at a negative value: the iterates must stay > 0.
  std::vector<Eigen::VectorXd> centers{Eigen::VectorXd::Constant(1, -3.0), Eigen::VectorXd::Constant(1, -1.0)};
  tvtest::QuadraticObjective q(centers, Eigen::MatrixXd::Identity(1, 1));
  RunConfig cfg = tight(RunMode::full_batch, 2.0);
  cfg.max_outer_iters = 30;
  const RunResult r = run(q, cfg);
  for (const auto& rec : r.trace) EXPECT_GT(rec.lambda[0], 0.0);
  EXPECT_GT(r.lambda_hat[0], 0.0);
  EXPECT_LT(r.lambda_hat[0], 2.0);
}

TEST(Run, Validation) {
  auto q = tvtest::scalar_quadratic(5, 1);
  RunConfig cfg;
  cfg.lambda0 = ParamVec{1.0, 2.0};
  EXPECT_THROW(run(q, cfg), DimensionMismatch);
  EXPECT_THROW(ParamVec{-1.0}, InvalidArgument);
  cfg.lambda0 = ParamVec{0.0};
  EXPECT_THROW(run(q, cfg), InvalidArgument);
  cfg.lambda0 = ParamVec{1.0};
  cfg.theta = 1.0;
  EXPECT_THROW(run(q, cfg), InvalidArgument);
  EXPECT_EQ(initial_sample_size(0.2, 20), 4u);
  EXPECT_EQ(initial_sample_size(0.01, 20), 1u);
  EXPECT_EQ(parse_run_mode("full"), RunMode::full_batch);
  EXPECT_EQ(parse_sample_growth(to_string(SampleGrowth::nested)), SampleGrowth::nested);
}

TEST(Run, MatchesGoldenSectionOnPdeObjective) {
  NoiseModelSpec noise;
  noise.gaussian_sigma = 0.05;
  noise.seed = 21;
  const TrainingSet ts = build_training_set(PhantomKind::ellipses, 16, 16, 4, noise);
  const std::vector<std::size_t> all{0, 1, 2, 3};
  GradientOptions value_only;
  value_only.value_only = true;
  const auto j = [&](double lam) {
    return batch_gradient(ts, all, {lam}, FidelitySpec::gaussian(), StateConfig{}, nullptr, value_only).value;
  };
  const double oracle = golden_log(j, 10.0, 1e5, 1e-4);

  PdeObjective obj(ts, FidelitySpec::gaussian(), StateConfig{});
  RunConfig cfg;
  cfg.mode = RunMode::full_batch;
  cfg.grad_tol = 1e-4;
  const RunResult r = run(obj, cfg);
  EXPECT_LE(tvtest::rel_err(r.lambda_hat[0], oracle), 0.02) << r.lambda_hat[0] << " vs " << oracle;
}
