#pragma once

// Transformer encoder producing contextual vectors l_1..l_{n+m} for the joint
// (text, event type) sequence. Trained from scratch on the span objective.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sebert/params.hpp"
#include "sebert/rng.hpp"
#include "sebert/tensor.hpp"

namespace sebert {

enum class FeedForwardActivation { Relu, Tanh };

struct EncoderConfig {
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t max_len = 140;
  std::size_t vocab_size = 0;
  double dropout = 0.1;
  FeedForwardActivation activation = FeedForwardActivation::Relu;

  /// Throws ContractError when the configuration is inconsistent.
  void validate() const;
};

template <typename T>
struct EncoderLayerParams {
  BasicTensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
  BasicTensor<T> ln1_gain, ln1_bias;
  BasicTensor<T> w1, b1, w2, b2;
  BasicTensor<T> ln2_gain, ln2_bias;
};

template <typename T>
struct EncoderParams {
  BasicTensor<T> token_embedding;     // [vocab x d]
  BasicTensor<T> position_embedding;  // [max_len x d]
  BasicTensor<T> segment_embedding;   // [2 x d]
  BasicTensor<T> emb_ln_gain, emb_ln_bias;
  std::vector<EncoderLayerParams<T>> layers;
};

template <typename T>
struct EncoderOutput {
  /// [seq_len x d_model]
  BasicTensor<T> hidden;
  /// attentions[layer][head] is [seq_len x seq_len]; row = query, col = key.
  std::vector<std::vector<BasicTensor<T>>> attentions;
};

template <typename T>
class Encoder {
 public:
  Encoder(const EncoderConfig& config, Rng& rng);

  const EncoderConfig& config() const noexcept { return config_; }
  EncoderParams<T>& params() noexcept { return params_; }
  const EncoderParams<T>& params() const noexcept { return params_; }
  void append_parameters(const std::string& prefix, ParamList<T>& out) const;

  /// Token + learned position + segment embedding, then layer norm.
  BasicTensor<T> embed(Tape<T>& tape, std::span<const int> token_ids, std::span<const int> segment_ids) const;

  /// Full stack over one (possibly padded) sequence. `mask` is false on PAD
  /// positions, which are never attended to. Pass a generator to enable
  /// dropout; nullptr runs deterministically.
  EncoderOutput<T> encode(Tape<T>& tape, std::span<const int> token_ids, std::span<const int> segment_ids,
                          const std::vector<bool>& mask, Rng* dropout_rng = nullptr) const;

 private:
  BasicTensor<T> dropout(Tape<T>& tape, const BasicTensor<T>& x, Rng* rng) const;

  EncoderConfig config_;
  EncoderParams<T> params_;
};

}  // namespace sebert
