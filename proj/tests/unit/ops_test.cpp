#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "grad_cases.hpp"
#include "sebert/errors.hpp"
#include "sebert/ops.hpp"

namespace sebert {
namespace {

TEST(Ops, EveryPrimitivePassesFiniteDifferences) {
  Rng rng(11);
  for (const auto& c : testing::primitive_grad_cases()) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto r = c.trial(rng);
      EXPECT_LT(r.max_rel_error, 1e-5) << c.name << ": " << r.worst;
    }
  }
}

TEST(Ops, MatmulValues) {
  Tape<double> tape;
  Tensor64 a({2, 2}, {1, 2, 3, 4});
  Tensor64 b({2, 1}, {5, 6});
  const auto c = ops::matmul(tape, a, b);
  EXPECT_EQ(c.at(0, 0), 17.0);
  EXPECT_EQ(c.at(1, 0), 39.0);
  EXPECT_THROW(ops::matmul(tape, b, b), DimensionError);
}

TEST(Ops, ElementwiseShapeMismatchThrows) {
  Tape<double> tape;
  EXPECT_THROW(ops::add(tape, Tensor64({1, 2}), Tensor64({2, 1})), DimensionError);
}

TEST(Ops, MaskedSoftmaxZeroesMaskedSlots) {
  Tape<double> tape;
  Tensor64 x = Tensor64::row({1.0, 5.0, 2.0});
  const auto p = ops::masked_softmax(tape, x, {true, false, true});
  EXPECT_EQ(p.data()[1], 0.0);
  EXPECT_NEAR(p.data()[0] + p.data()[2], 1.0, 1e-15);
  const auto lp = ops::masked_log_softmax(tape, x, {true, false, true});
  EXPECT_EQ(lp.data()[1], -std::numeric_limits<double>::infinity());
  EXPECT_NEAR(std::exp(lp.data()[0]), p.data()[0], 1e-15);
}

TEST(Ops, FullyMaskedRowThrows) {
  Tape<double> tape;
  EXPECT_THROW(ops::masked_softmax(tape, Tensor64::row({1.0, 2.0}), {false, false}), DegenerateMaskError);
}

TEST(Ops, EmbeddingLookupRejectsOutOfRangeIds) {
  Tape<double> tape;
  Tensor64 table({3, 2});
  const std::vector<int> ids{0, 3};
  EXPECT_THROW(ops::embedding_lookup(tape, table, std::span<const int>(ids)), IndexError);
}

TEST(Ops, LayerNormNormalizesRows) {
  Tape<double> tape;
  Tensor64 x({1, 4}, {1, 2, 3, 4});
  const auto y = ops::layer_norm(tape, x, Tensor64::row({1, 1, 1, 1}), Tensor64::row({0, 0, 0, 0}));
  double mean = 0, var = 0;
  for (double v : y.data()) mean += v / 4;
  for (double v : y.data()) var += (v - mean) * (v - mean) / 4;
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(var, 1.0, 1e-4);
}

}  // namespace
}  // namespace sebert
