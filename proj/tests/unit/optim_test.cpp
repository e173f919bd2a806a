#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "quadratic.hpp"
#include "sebert/errors.hpp"
#include "sebert/optim.hpp"

namespace sebert {
namespace {

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor64 theta = Tensor64::row({0.0}, true);
  theta.grad_mut()[0] = 1.0;
  std::vector<Tensor64> params{theta};
  AdamState<double> st;
  adam_step(std::span<Tensor64>(params), st);
  EXPECT_DOUBLE_EQ(theta.data()[0], -0.001 / (1.0 + 1e-8));
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, NonFiniteGradientThrows) {
  Tensor64 theta = Tensor64::row({0.0, 1.0}, true);
  theta.grad_mut()[1] = std::numeric_limits<double>::quiet_NaN();
  std::vector<Tensor64> params{theta};
  AdamState<double> st;
  EXPECT_THROW(adam_step(std::span<Tensor64>(params), st), DivergenceError);
}

TEST(Sgd, StepsAgainstGradient) {
  Tensor64 theta = Tensor64::row({1.0}, true);
  theta.grad_mut()[0] = 2.0;
  std::vector<Tensor64> params{theta};
  sgd_step(std::span<Tensor64>(params), 0.1);
  EXPECT_DOUBLE_EQ(theta.data()[0], 0.8);
}

TEST(Swats, OneDimensionalSwitchPoint) {
  const std::vector<double> a{1.0};
  const auto theta0 = testing::quadratic_start(1);
  const auto lib = testing::run_library_swats(a, theta0, 0.01, 2e-5, 5000);
  const auto ref = testing::swats_reference(a, theta0, 0.01, 2e-5, 5000);
  ASSERT_TRUE(ref.switch_step);
  EXPECT_EQ(*ref.switch_step, 3984u);
  EXPECT_EQ(lib.final_state.switch_step, 3984u);
  ASSERT_TRUE(lib.final_state.sgd_lr);
  EXPECT_NEAR(*lib.final_state.sgd_lr, 0.11100624900353032, 1e-12);
  EXPECT_EQ(*lib.final_state.sgd_lr, ref.sgd_lr);
  EXPECT_EQ(lib.thetas, ref.thetas);
}

TEST(Swats, TenDimensionalSwitchPoint) {
  const auto a = testing::quadratic_curvatures(10);
  const auto theta0 = testing::quadratic_start(10);
  const auto lib = testing::run_library_swats(a, theta0, 0.01, 1e-6, 5000);
  const auto ref = testing::swats_reference(a, theta0, 0.01, 1e-6, 5000);
  ASSERT_TRUE(ref.switch_step);
  EXPECT_EQ(*ref.switch_step, 3228u);
  EXPECT_EQ(lib.final_state.switch_step, 3228u);
  EXPECT_NEAR(*lib.final_state.sgd_lr, 0.015971804892125237, 1e-12);
  EXPECT_EQ(lib.thetas, ref.thetas);
  EXPECT_EQ(lib.sgd_phase, ref.sgd_phase);
}

TEST(Swats, PhasesMatchPureAdamThenPureSgd) {
  const auto a = testing::quadratic_curvatures(10);
  const auto theta0 = testing::quadratic_start(10);
  const auto lib = testing::run_library_swats(a, theta0, 0.01, 1e-6, 4000);
  const std::size_t k = lib.final_state.switch_step;
  ASSERT_GT(k, 0u);
  const auto adam = testing::run_library_adam(a, theta0, 0.01, k);
  for (std::size_t s = 0; s < k; ++s) ASSERT_EQ(lib.thetas[s], adam[s]) << s;
  const auto sgd = testing::run_library_sgd(a, lib.thetas[k - 1], *lib.final_state.sgd_lr, 4000 - k);
  for (std::size_t s = k; s < 4000; ++s) {
    ASSERT_TRUE(lib.sgd_phase[s]);
    ASSERT_EQ(lib.thetas[s], sgd[s - k]) << s;
  }
}

TEST(Swats, NoSwitchWithZeroThreshold) {
  const std::vector<double> a{1.0};
  const auto lib = testing::run_library_swats(a, {1.0}, 0.01, 0.0, 300);
  EXPECT_EQ(lib.final_state.phase, SwatsPhase::Adam);
  EXPECT_FALSE(lib.final_state.sgd_lr);
}

TEST(Optimizer, RuntimeSelection) {
  OptimizerConfig cfg;
  cfg.kind = parse_optimizer("sgd");
  cfg.sgd_lr = 0.5;
  Optimizer<double> opt(cfg);
  Tensor64 theta = Tensor64::row({1.0}, true);
  theta.grad_mut()[0] = 1.0;
  std::vector<Tensor64> params{theta};
  opt.step(std::span<Tensor64>(params));
  EXPECT_DOUBLE_EQ(theta.data()[0], 0.5);
  EXPECT_EQ(opt.phase_name(), "sgd");
  EXPECT_EQ(opt.steps(), 1u);
  EXPECT_EQ(Optimizer<double>(OptimizerConfig{}).phase_name(), "swats:adam");
  EXPECT_THROW(parse_optimizer("rmsprop"), ContractError);
}

}  // namespace
}  // namespace sebert
