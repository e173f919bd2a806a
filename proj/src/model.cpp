#include "sebert/model.hpp"

#include <cmath>

#include "sebert/errors.hpp"
#include "sebert/ops.hpp"

namespace sebert {

std::string variant_name(ModelVariant variant) {
  switch (variant) {
    case ModelVariant::BertBaseline: return "bert";
    case ModelVariant::SeBertNets: return "sebertnets";
    case ModelVariant::HSeBertNets: return "hsebertnets";
  }
  return "?";
}

ModelVariant parse_variant(const std::string& name) {
  if (name == "bert") return ModelVariant::BertBaseline;
  if (name == "sebertnets") return ModelVariant::SeBertNets;
  if (name == "hsebertnets") return ModelVariant::HSeBertNets;
  throw ContractError("unknown variant '" + name + "' (expected bert, sebertnets or hsebertnets)");
}

bool uses_sequence_layer(ModelVariant variant) { return variant != ModelVariant::BertBaseline; }

void ModelConfig::validate() const {
  encoder.validate();
  recall.validate();
  if (uses_sequence_layer(variant) && hidden == 0) throw ContractError("hidden size must be positive");
  if (!(clip_norm > 0.0)) throw ContractError("clip_norm must be positive");
}

std::size_t ModelConfig::head_width() const { return uses_sequence_layer(variant) ? 2 * hidden : encoder.d_model; }

template <typename T>
BasicSpanModel<T>::BasicSpanModel(ModelConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_([&] {
        config.encoder.vocab_size = vocab.size();
        config.validate();
        return config;
      }()),
      vocab_(std::move(vocab)),
      encoder_([&]() -> Encoder<T> {
        Rng rng(seed);
        return Encoder<T>(config_.encoder, rng);
      }()) {
  // Separate streams so the encoder draw does not shift with the head config.
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  if (uses_sequence_layer(config_.variant)) {
    fwd_ = RecurrentParams<T>::init(config_.cell, config_.encoder.d_model, config_.hidden, rng);
    bwd_ = RecurrentParams<T>::init(config_.cell, config_.encoder.d_model, config_.hidden, rng);
  }
  head_ = SpanHeadParams<T>::init(config_.head_width(), rng);
}

template <typename T>
void BasicSpanModel<T>::set_variant(ModelVariant variant) {
  if (variant == config_.variant) return;
  if (!uses_sequence_layer(variant) || !uses_sequence_layer(config_.variant))
    throw CompatibilityError("cannot switch between " + variant_name(config_.variant) + " and " +
                             variant_name(variant) + ": the networks differ");
  config_.variant = variant;
}

template <typename T>
ParamList<T> BasicSpanModel<T>::parameters() const {
  ParamList<T> out;
  encoder_.append_parameters("encoder.", out);
  if (uses_sequence_layer(config_.variant)) {
    fwd_.append_parameters("sequence.forward.", out);
    bwd_.append_parameters("sequence.backward.", out);
  }
  head_.append_parameters("head.", out);
  return out;
}

template <typename T>
std::vector<BasicTensor<T>> BasicSpanModel<T>::parameter_tensors() const {
  std::vector<BasicTensor<T>> out;
  for (auto& p : parameters()) out.push_back(p.tensor);
  return out;
}

template <typename T>
void BasicSpanModel<T>::check_compatible(const TokenizedInput& item) const {
  const int vocab_size = static_cast<int>(vocab_.size());
  for (int id : item.token_ids)
    if (id < 0 || id >= vocab_size)
      throw CompatibilityError("token id " + std::to_string(id) + " in '" + item.id +
                               "' is outside the model vocabulary of " + std::to_string(vocab_size));
  if (item.length() > config_.encoder.max_len)
    throw CompatibilityError("input '" + item.id + "' has length " + std::to_string(item.length()) +
                             " but the model was built for max_len " + std::to_string(config_.encoder.max_len));
}

template <typename T>
SpanLogits<T> BasicSpanModel<T>::forward_one(Tape<T>& tape, const TokenizedInput& item, Rng* dropout_rng,
                                             std::vector<std::vector<BasicTensor<T>>>* attentions) const {
  check_compatible(item);
  auto enc = encoder_.encode(tape, item.token_ids, item.segment_ids, item.attention_mask, dropout_rng);
  if (attentions) *attentions = std::move(enc.attentions);
  BasicTensor<T> features = enc.hidden;
  if (uses_sequence_layer(config_.variant))
    features = bidirectional_encode(tape, features, item.attention_mask, fwd_, bwd_);
  return score(tape, features, head_, item.text_span);
}

template <typename T>
ForwardResult<T> BasicSpanModel<T>::forward(Tape<T>& tape, const Batch& batch, Rng* dropout_rng,
                                            bool with_attention) const {
  ForwardResult<T> out;
  for (std::size_t b = 0; b < batch.size; ++b) {
    std::vector<std::vector<BasicTensor<T>>> attn;
    out.logits.push_back(forward_one(tape, *batch.items[b], dropout_rng, with_attention ? &attn : nullptr));
    if (with_attention) out.attentions.push_back(std::move(attn));
  }
  return out;
}

template <typename T>
std::vector<SpanCandidate> BasicSpanModel<T>::predict(const TokenizedInput& item, std::size_t k) const {
  Tape<T> tape(false);
  const auto logits = forward_one(tape, item);
  RecallConfig cfg = config_.recall;
  cfg.k = k;
  switch (config_.variant) {
    case ModelVariant::SeBertNets:
      return {decode_top1(logits, item.text, item.text_span, cfg)};
    case ModelVariant::BertBaseline:
      cfg.channels = {RecallChannel::JointTopK};
      return decode_multichannel(logits, item.text, item.text_span, cfg);
    case ModelVariant::HSeBertNets:
      break;
  }
  return decode_multichannel(logits, item.text, item.text_span, cfg);
}

template <typename T>
double clip_grad_norm(std::span<BasicTensor<T>> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params)
    for (T g : p.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(sq);
  if (std::isfinite(norm) && norm > max_norm) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& p : params)
      if (p.has_grad())
        for (T& g : p.grad_mut()) g *= factor;
  }
  return norm;
}

template <typename T>
StepResult train_step(BasicSpanModel<T>& model, const Batch& batch, Optimizer<T>& optimizer, Rng& dropout_rng) {
  if (batch.size == 0) throw ContractError("train_step on an empty batch");
  std::vector<SpanRange> gold;
  for (std::size_t b = 0; b < batch.size; ++b) {
    if (!batch.gold[b]) throw ContractError("training example '" + batch.items[b]->id + "' has no gold span");
    gold.push_back(*batch.gold[b]);
  }
  auto params = model.parameter_tensors();
  for (auto& p : params) p.zero_grad();

  Tape<T> tape;
  auto result = model.forward(tape, batch, &dropout_rng);
  auto loss = span_loss(tape, result.logits, gold);
  const double loss_value = static_cast<double>(loss.item());
  if (!std::isfinite(loss_value))
    throw DivergenceError("loss became " + std::to_string(loss_value) + " at optimizer step " +
                          std::to_string(optimizer.steps() + 1));
  backward(tape, loss);
  StepResult out;
  out.loss = loss_value;
  out.grad_norm = clip_grad_norm(std::span<BasicTensor<T>>(params), model.config().clip_norm);
  optimizer.step(params);
  return out;
}

template class BasicSpanModel<float>;
template class BasicSpanModel<double>;
template StepResult train_step(BasicSpanModel<float>&, const Batch&, Optimizer<float>&, Rng&);
template StepResult train_step(BasicSpanModel<double>&, const Batch&, Optimizer<double>&, Rng&);
template double clip_grad_norm(std::span<BasicTensor<float>>, double);
template double clip_grad_norm(std::span<BasicTensor<double>>, double);

}  // namespace sebert
