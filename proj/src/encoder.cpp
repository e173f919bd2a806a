#include "sebert/encoder.hpp"

#include <cmath>

#include "sebert/errors.hpp"
#include "sebert/ops.hpp"

namespace sebert {

void EncoderConfig::validate() const {
  if (d_model == 0 || n_layers == 0 || n_heads == 0 || d_ff == 0 || max_len == 0 || vocab_size == 0)
    throw ContractError("encoder sizes must all be positive");
  if (d_model % n_heads != 0)
    throw ContractError("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                        std::to_string(n_heads));
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ContractError("dropout must lie in [0, 1)");
}

namespace {

constexpr double kEmbeddingBound = 0.05;

template <typename T>
BasicTensor<T> linear_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  return uniform_param<T>({fan_in, fan_out}, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

template <typename T>
BasicTensor<T> zero_bias(std::size_t n) {
  return constant_param<T>({1, n}, T(0));
}

}  // namespace

template <typename T>
Encoder<T>::Encoder(const EncoderConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t d = config_.d_model;
  params_.token_embedding = uniform_param<T>({config_.vocab_size, d}, kEmbeddingBound, rng);
  params_.position_embedding = uniform_param<T>({config_.max_len, d}, kEmbeddingBound, rng);
  params_.segment_embedding = uniform_param<T>({2, d}, kEmbeddingBound, rng);
  params_.emb_ln_gain = constant_param<T>({1, d}, T(1));
  params_.emb_ln_bias = zero_bias<T>(d);
  for (std::size_t l = 0; l < config_.n_layers; ++l) {
    EncoderLayerParams<T> p;
    p.wq = linear_weight<T>(d, d, rng);
    p.bq = zero_bias<T>(d);
    p.wk = linear_weight<T>(d, d, rng);
    p.bk = zero_bias<T>(d);
    p.wv = linear_weight<T>(d, d, rng);
    p.bv = zero_bias<T>(d);
    p.wo = linear_weight<T>(d, d, rng);
    p.bo = zero_bias<T>(d);
    p.ln1_gain = constant_param<T>({1, d}, T(1));
    p.ln1_bias = zero_bias<T>(d);
    p.w1 = linear_weight<T>(d, config_.d_ff, rng);
    p.b1 = zero_bias<T>(config_.d_ff);
    p.w2 = linear_weight<T>(config_.d_ff, d, rng);
    p.b2 = zero_bias<T>(d);
    p.ln2_gain = constant_param<T>({1, d}, T(1));
    p.ln2_bias = zero_bias<T>(d);
    params_.layers.push_back(std::move(p));
  }
}

template <typename T>
void Encoder<T>::append_parameters(const std::string& prefix, ParamList<T>& out) const {
  out.push_back({prefix + "token_embedding", params_.token_embedding});
  out.push_back({prefix + "position_embedding", params_.position_embedding});
  out.push_back({prefix + "segment_embedding", params_.segment_embedding});
  out.push_back({prefix + "embedding_ln.gain", params_.emb_ln_gain});
  out.push_back({prefix + "embedding_ln.bias", params_.emb_ln_bias});
  for (std::size_t l = 0; l < params_.layers.size(); ++l) {
    const auto& p = params_.layers[l];
    const std::string lp = prefix + "layer" + std::to_string(l) + ".";
    out.push_back({lp + "attention.wq", p.wq});
    out.push_back({lp + "attention.bq", p.bq});
    out.push_back({lp + "attention.wk", p.wk});
    out.push_back({lp + "attention.bk", p.bk});
    out.push_back({lp + "attention.wv", p.wv});
    out.push_back({lp + "attention.bv", p.bv});
    out.push_back({lp + "attention.wo", p.wo});
    out.push_back({lp + "attention.bo", p.bo});
    out.push_back({lp + "attention_ln.gain", p.ln1_gain});
    out.push_back({lp + "attention_ln.bias", p.ln1_bias});
    out.push_back({lp + "ffn.w1", p.w1});
    out.push_back({lp + "ffn.b1", p.b1});
    out.push_back({lp + "ffn.w2", p.w2});
    out.push_back({lp + "ffn.b2", p.b2});
    out.push_back({lp + "ffn_ln.gain", p.ln2_gain});
    out.push_back({lp + "ffn_ln.bias", p.ln2_bias});
  }
}

template <typename T>
BasicTensor<T> Encoder<T>::embed(Tape<T>& tape, std::span<const int> token_ids,
                                 std::span<const int> segment_ids) const {
  const std::size_t n = token_ids.size();
  if (n > config_.max_len)
    throw LengthError("sequence of length " + std::to_string(n) + " exceeds max_len " +
                        std::to_string(config_.max_len));
  if (segment_ids.size() != n) throw DimensionError("token and segment id sequences differ in length");
  std::vector<int> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = static_cast<int>(i);
  auto tok = ops::embedding_lookup(tape, params_.token_embedding, token_ids);
  auto pos = ops::embedding_lookup(tape, params_.position_embedding, std::span<const int>(positions));
  auto seg = ops::embedding_lookup(tape, params_.segment_embedding, segment_ids);
  auto sum = ops::add(tape, ops::add(tape, tok, pos), seg);
  return ops::layer_norm(tape, sum, params_.emb_ln_gain, params_.emb_ln_bias);
}

template <typename T>
BasicTensor<T> Encoder<T>::dropout(Tape<T>& tape, const BasicTensor<T>& x, Rng* rng) const {
  if (rng == nullptr || config_.dropout == 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - config_.dropout));
  BasicTensor<T> keep(x.shape());
  for (auto& v : keep.data()) v = rng->bernoulli(config_.dropout) ? T(0) : keep_scale;
  return ops::mul(tape, x, keep);
}

template <typename T>
EncoderOutput<T> Encoder<T>::encode(Tape<T>& tape, std::span<const int> token_ids,
                                    std::span<const int> segment_ids, const std::vector<bool>& mask,
                                    Rng* dropout_rng) const {
  const std::size_t n = token_ids.size();
  if (mask.size() != n) throw DimensionError("attention mask length differs from sequence length");
  const std::size_t heads = config_.n_heads;
  const std::size_t dh = config_.d_model / heads;
  const T inv_sqrt_dh = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  EncoderOutput<T> out;
  BasicTensor<T> x = dropout(tape, embed(tape, token_ids, segment_ids), dropout_rng);
  for (const auto& p : params_.layers) {
    auto q = ops::linear(tape, x, p.wq, p.bq);
    auto k = ops::linear(tape, x, p.wk, p.bk);
    auto v = ops::linear(tape, x, p.wv, p.bv);
    std::vector<BasicTensor<T>> contexts;
    std::vector<BasicTensor<T>> weights;
    for (std::size_t h = 0; h < heads; ++h) {
      auto qh = ops::slice_cols(tape, q, h * dh, dh);
      auto kh = ops::slice_cols(tape, k, h * dh, dh);
      auto vh = ops::slice_cols(tape, v, h * dh, dh);
      auto scores = ops::scale(tape, ops::matmul(tape, qh, ops::transpose(tape, kh)), inv_sqrt_dh);
      auto attn = ops::masked_softmax(tape, scores, mask);
      contexts.push_back(ops::matmul(tape, attn, vh));
      weights.push_back(attn);
    }
    out.attentions.push_back(std::move(weights));
    auto context = heads == 1 ? contexts.front() : ops::concat(tape, contexts, 1);
    auto attended = dropout(tape, ops::linear(tape, context, p.wo, p.bo), dropout_rng);
    x = ops::layer_norm(tape, ops::add(tape, x, attended), p.ln1_gain, p.ln1_bias);

    auto inner = ops::linear(tape, x, p.w1, p.b1);
    inner = config_.activation == FeedForwardActivation::Relu ? ops::relu(tape, inner) : ops::tanh(tape, inner);
    auto ffn = dropout(tape, ops::linear(tape, inner, p.w2, p.b2), dropout_rng);
    x = ops::layer_norm(tape, ops::add(tape, x, ffn), p.ln2_gain, p.ln2_bias);
  }
  out.hidden = x;
  return out;
}

template class Encoder<float>;
template class Encoder<double>;

}  // namespace sebert
