#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "support.hpp"
#include "tvlearn/adjoint.hpp"
#include "tvlearn/error.hpp"

using namespace tvlearn;
using tvtest::vec;

namespace {

TrainingSet small_set(std::size_t n, std::size_t size, double impulse, std::uint64_t seed,
                      double sigma = 0.05) {
  NoiseModelSpec noise;
  noise.gaussian_sigma = sigma;
  noise.impulse_fraction = impulse;
  noise.seed = seed;
  return build_training_set(PhantomKind::ellipses, size, size, n, noise);
}

std::vector<std::size_t> all_of(const TrainingSet& ts) {
  std::vector<std::size_t> idx(ts.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

// Central differences of J_S with a relative step per component.
std::vector<double> fd_gradient(const TrainingSet& ts, const std::vector<std::size_t>& idx,
                                const std::vector<double>& lam, const FidelitySpec& spec,
                                const StateConfig& cfg) {
  GradientOptions value_only;
  value_only.value_only = true;
  std::vector<double> g(lam.size());
  for (std::size_t i = 0; i < lam.size(); ++i) {
    const double t = 1e-5 * lam[i];
    std::vector<double> p = lam, m = lam;
    p[i] += t;
    m[i] -= t;
    const double jp = batch_gradient(ts, idx, ParamVec(p), spec, cfg, nullptr, value_only).value;
    const double jm = batch_gradient(ts, idx, ParamVec(m), spec, cfg, nullptr, value_only).value;
    g[i] = (jp - jm) / (2 * t);
  }
  return g;
}

}  // namespace

TEST(Adjoint, OperatorIsSymmetricTransposeOfJacobian) {
  const TrainingSet ts = small_set(1, 8, 0.05, 3);
  const StateConfig cfg;
  for (const auto& [spec, lam] : {std::pair{FidelitySpec::gaussian(), ParamVec{900.0}},
                                   std::pair{FidelitySpec::mixed(), ParamVec{30.0, 5.0}}}) {
    const StateSolution s = solve_state(ts[0].noisy, lam, spec, cfg);
    const Eigen::MatrixXd a(adjoint_operator(s.u, ts[0].noisy, lam, spec, cfg));
    const Eigen::MatrixXd j(state_jacobian(s.u, ts[0].noisy, lam, spec, cfg));
    EXPECT_LT((a - j.transpose()).norm(), 1e-14 * j.norm());
    EXPECT_LT((a - a.transpose()).norm(), 1e-10 * a.norm());
    // <J v, w> = <v, J^T w>
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 5; ++rep) {
      const Eigen::VectorXd v = vec(tvtest::random_image(8, 8, rng));
      const Eigen::VectorXd w = vec(tvtest::random_image(8, 8, rng));
      EXPECT_NEAR((j * v).dot(w), v.dot(a * w), 1e-10 * (j * v).norm() * w.norm());
    }
  }
}

TEST(Adjoint, ZeroMisfitGivesZero) {
  const TrainingSet ts = small_set(1, 8, 0.0, 4);
  const StateConfig cfg;
  const StateSolution s = solve_state(ts[0].noisy, {800.0}, FidelitySpec::gaussian(), cfg);
  const AdjointSolution a = solve_adjoint(s.u, ts[0].noisy, s.u, {800.0}, FidelitySpec::gaussian(), cfg);
  for (double v : a.p.values()) EXPECT_EQ(v, 0.0);
  const ImageGrid zero = ImageGrid::zeros(8, 8);
  for (double g : constraint_gradient(s.u, zero, ts[0].noisy, FidelitySpec::mixed(), cfg)) EXPECT_EQ(g, 0.0);
}

TEST(Adjoint, LossIsScaledSquaredError) {
  ImageGrid a(2, 2, 0.5, {1.0, 0.0, 0.0, 0.0});
  const ImageGrid b = ImageGrid(2, 2, 0.5);
  EXPECT_DOUBLE_EQ(constraint_loss(a, b), 0.25);
}

TEST(Adjoint, GradientMatchesFiniteDifferencesGaussian) {
  const TrainingSet ts = small_set(3, 8, 0.0, 5);
  const StateConfig cfg;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> lam_dist(10.0, 5000.0);
  for (int rep = 0; rep < 5; ++rep) {
    const std::vector<double> lam{lam_dist(rng)};
    const BatchGradient bg = batch_gradient(ts, all_of(ts), ParamVec(lam), FidelitySpec::gaussian(), cfg);
    const std::vector<double> fd = fd_gradient(ts, all_of(ts), lam, FidelitySpec::gaussian(), cfg);
    EXPECT_LE(tvtest::rel_err(bg.grad[0], fd[0]), 1e-3) << "lambda " << lam[0];
  }
}

TEST(Adjoint, GradientMatchesFiniteDifferencesMixed) {
  const TrainingSet ts = small_set(3, 8, 0.05, 7, 0.005);
  const StateConfig cfg;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> l1(5.0, 100.0), l2(1.0, 50.0);
  for (int rep = 0; rep < 5; ++rep) {
    const std::vector<double> lam{l1(rng), l2(rng)};
    const BatchGradient bg = batch_gradient(ts, all_of(ts), ParamVec(lam), FidelitySpec::mixed(), cfg);
    const std::vector<double> fd = fd_gradient(ts, all_of(ts), lam, FidelitySpec::mixed(), cfg);
    const double err = (vec(bg.grad) - vec(fd)).norm() / vec(fd).norm();
    EXPECT_LE(err, 1e-3) << lam[0] << "," << lam[1];
  }
}

TEST(Adjoint, NoisyMisfitVariantIsDifferent) {
  const TrainingSet ts = small_set(1, 8, 0.0, 9);
  GradientOptions opts;
  opts.misfit = MisfitTarget::noisy;
  const auto a = evaluate_constraint(ts[0], {500.0}, FidelitySpec::gaussian(), StateConfig{});
  const auto b = evaluate_constraint(ts[0], {500.0}, FidelitySpec::gaussian(), StateConfig{}, {}, opts);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_NE(a.grad[0], b.grad[0]);
}

TEST(Batch, SingletonIsHalfTheConstraintGradient) {
  const TrainingSet ts = small_set(3, 8, 0.0, 10);
  const StateConfig cfg;
  const std::vector<std::size_t> one{1};
  const BatchGradient bg = batch_gradient(ts, one, {700.0}, FidelitySpec::gaussian(), cfg);
  const GradientSample s = evaluate_constraint(ts[1], {700.0}, FidelitySpec::gaussian(), cfg);
  EXPECT_DOUBLE_EQ(bg.grad[0], 0.5 * s.grad[0]);
  EXPECT_DOUBLE_EQ(bg.value, 0.5 * s.loss);
}

TEST(Batch, FullSampleIsMeanOfConstraintGradients) {
  const TrainingSet ts = small_set(5, 8, 0.05, 11, 0.01);
  const StateConfig cfg;
  const ParamVec lam{40.0, 8.0};
  const BatchGradient bg = batch_gradient(ts, all_of(ts), lam, FidelitySpec::mixed(), cfg);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (std::size_t k = 0; k < ts.size(); ++k) {
    mean += vec(evaluate_constraint(ts[k], lam, FidelitySpec::mixed(), cfg).grad);
  }
  mean /= 2.0 * static_cast<double>(ts.size());
  EXPECT_LE((vec(bg.grad) - mean).norm(), 1e-10 * mean.norm());
  EXPECT_EQ(bg.state_solves, 5u);
  EXPECT_EQ(bg.adjoint_solves, 5u);
}

TEST(Batch, OrderAndThreadIndependent) {
  const TrainingSet ts = small_set(5, 8, 0.0, 12);
  const StateConfig cfg;
  const std::vector<std::size_t> a{0, 2, 3}, b{3, 0, 2};
  const BatchGradient x = batch_gradient(ts, a, {600.0}, FidelitySpec::gaussian(), cfg);
  const BatchGradient y = batch_gradient(ts, b, {600.0}, FidelitySpec::gaussian(), cfg);
  GradientOptions threaded;
  threaded.threads = 3;
  const BatchGradient z = batch_gradient(ts, b, {600.0}, FidelitySpec::gaussian(), cfg, nullptr, threaded);
  EXPECT_EQ(x.value, y.value);
  EXPECT_EQ(x.grad, y.grad);
  EXPECT_EQ(x.value, z.value);
  EXPECT_EQ(x.grad, z.grad);
  EXPECT_EQ(y.sample_indices, a);
}

TEST(Batch, RejectsBadSamples) {
  const TrainingSet ts = small_set(3, 8, 0.0, 13);
  const StateConfig cfg;
  EXPECT_THROW(batch_gradient(ts, std::vector<std::size_t>{}, {1.0}, FidelitySpec::gaussian(), cfg),
               InvalidArgument);
  EXPECT_THROW(batch_gradient(ts, std::vector<std::size_t>{0, 0}, {1.0}, FidelitySpec::gaussian(), cfg),
               InvalidArgument);
  EXPECT_THROW(batch_gradient(ts, std::vector<std::size_t>{3}, {1.0}, FidelitySpec::gaussian(), cfg),
               InvalidArgument);
  EXPECT_THROW(batch_gradient(ts, std::vector<std::size_t>{0}, {1.0, 2.0}, FidelitySpec::gaussian(), cfg),
               DimensionMismatch);
}

TEST(PdeObjectiveTest, WarmStartDoesNotChangeResults) {
  const TrainingSet ts = small_set(3, 8, 0.0, 14);
  PdeObjective obj(ts, FidelitySpec::gaussian(), StateConfig{});
  const std::vector<std::size_t> idx{0, 1, 2};
  Eigen::VectorXd lam(1);
  lam << 900.0;
  obj.evaluate(Eigen::VectorXd::Constant(1, 400.0), idx);
  const BatchEvaluation warm = obj.evaluate(lam, idx);
  const BatchGradient cold = batch_gradient(ts, idx, {900.0}, FidelitySpec::gaussian(), StateConfig{});
  EXPECT_NEAR(warm.value, cold.value, 1e-9 * cold.value);
  EXPECT_NEAR(warm.grad[0], cold.grad[0], 1e-6 * std::abs(cold.grad[0]));
  ASSERT_EQ(warm.sample_grads.size(), 3u);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(1);
  for (const auto& g : warm.sample_grads) mean += g;
  EXPECT_NEAR(mean[0] / 3.0, warm.grad[0], 1e-12 * std::abs(warm.grad[0]));
  EXPECT_EQ(obj.unconverged_solves(), 0u);
}
