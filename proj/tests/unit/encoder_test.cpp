#include <gtest/gtest.h>

#include <cmath>

#include "random_tensors.hpp"
#include "sebert/encoder.hpp"
#include "sebert/errors.hpp"

namespace sebert {
namespace {

EncoderConfig small_config() {
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.max_len = 24;
  cfg.vocab_size = 12;
  cfg.dropout = 0.0;
  return cfg;
}

TEST(Encoder, ValidateRejectsIndivisibleHeads) {
  auto cfg = small_config();
  cfg.n_heads = 3;
  EXPECT_THROW(cfg.validate(), ContractError);
}

TEST(Encoder, OutputShapeAndAttentionRowsSumToOne) {
  Rng rng(3);
  Encoder<double> enc(small_config(), rng);
  const std::vector<int> ids{2, 5, 6, 3, 7, 3};
  const std::vector<int> segs{0, 0, 0, 0, 1, 1};
  const std::vector<bool> mask{true, true, true, true, true, false};
  Tape<double> tape(false);
  const auto out = enc.encode(tape, ids, segs, mask);
  EXPECT_EQ(out.hidden.rows(), 6u);
  EXPECT_EQ(out.hidden.cols(), 8u);
  ASSERT_EQ(out.attentions.size(), 2u);
  ASSERT_EQ(out.attentions[0].size(), 2u);
  for (const auto& layer : out.attentions)
    for (const auto& a : layer)
      for (std::size_t q = 0; q < 6; ++q) {
        double row = 0.0;
        for (std::size_t k = 0; k < 6; ++k) row += a.at(q, k);
        EXPECT_NEAR(row, 1.0, 1e-12);
        EXPECT_EQ(a.at(q, 5), 0.0);
      }
}

TEST(Encoder, PaddingIsInvisibleToRealPositions) {
  Rng rng(5);
  Encoder<double> enc(small_config(), rng);
  const std::vector<int> ids{2, 4, 9, 3, 8, 3};
  const std::vector<int> segs{0, 0, 0, 0, 1, 1};
  std::vector<int> padded_ids = ids, padded_segs = segs;
  std::vector<bool> mask(ids.size(), true);
  for (int i = 0; i < 5; ++i) {
    padded_ids.push_back(static_cast<int>(rng.below(12)));
    padded_segs.push_back(1);
    mask.push_back(false);
  }
  Tape<double> tape(false);
  const auto a = enc.encode(tape, ids, segs, std::vector<bool>(ids.size(), true));
  const auto b = enc.encode(tape, padded_ids, padded_segs, mask);
  for (std::size_t r = 0; r < ids.size(); ++r)
    for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(a.hidden.at(r, c), b.hidden.at(r, c), 1e-12);
}

TEST(Encoder, RejectsOverlongInput) {
  Rng rng(1);
  Encoder<double> enc(small_config(), rng);
  const std::vector<int> ids(25, 4), segs(25, 0);
  Tape<double> tape(false);
  EXPECT_THROW(enc.encode(tape, ids, segs, std::vector<bool>(25, true)), LengthError);
}

TEST(Encoder, DropoutOnlyWithGenerator) {
  auto cfg = small_config();
  cfg.dropout = 0.5;
  Rng init(2);
  Encoder<double> enc(cfg, init);
  const std::vector<int> ids{2, 4, 3, 5, 3};
  const std::vector<int> segs{0, 0, 0, 1, 1};
  const std::vector<bool> mask(5, true);
  Tape<double> tape(false);
  const auto a = enc.encode(tape, ids, segs, mask);
  const auto b = enc.encode(tape, ids, segs, mask);
  Rng drop(9);
  const auto c = enc.encode(tape, ids, segs, mask, &drop);
  bool differs = false;
  for (std::size_t i = 0; i < a.hidden.numel(); ++i) {
    EXPECT_EQ(a.hidden.data()[i], b.hidden.data()[i]);
    differs = differs || a.hidden.data()[i] != c.hidden.data()[i];
  }
  EXPECT_TRUE(differs);
}

}  // namespace
}  // namespace sebert
