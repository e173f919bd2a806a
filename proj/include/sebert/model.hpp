#pragma once

// The three extraction models: encoder -> span head (BERT baseline), and
// encoder -> bidirectional recurrent layer -> span head (SEBERTNets, and
// HSEBERTNets which decodes the same network with multi-channel recall).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sebert/data.hpp"
#include "sebert/encoder.hpp"
#include "sebert/optim.hpp"
#include "sebert/params.hpp"
#include "sebert/recurrent.hpp"
#include "sebert/rng.hpp"
#include "sebert/span_head.hpp"
#include "sebert/tensor.hpp"

namespace sebert {

enum class ModelVariant { BertBaseline, SeBertNets, HSeBertNets };

std::string variant_name(ModelVariant variant);
ModelVariant parse_variant(const std::string& name);
/// True for the variants that run the recurrent layer.
bool uses_sequence_layer(ModelVariant variant);

struct ModelConfig {
  ModelVariant variant = ModelVariant::SeBertNets;
  EncoderConfig encoder;
  CellType cell = CellType::Gru;
  std::size_t hidden = 200;
  RecallConfig recall;
  double clip_norm = 5.0;

  void validate() const;
  /// Span-head input width: 2 * hidden with the recurrent layer, d_model without.
  std::size_t head_width() const;
};

template <typename T>
struct ForwardResult {
  std::vector<SpanLogits<T>> logits;
  /// Per example, when requested: attentions[layer][head].
  std::vector<std::vector<std::vector<BasicTensor<T>>>> attentions;
};

template <typename T>
class BasicSpanModel {
 public:
  /// Fresh parameters drawn from `seed`. The vocabulary fixes the embedding size.
  BasicSpanModel(ModelConfig config, Vocabulary vocab, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  ModelVariant variant() const noexcept { return config_.variant; }
  /// Switches between SEBERTNets and HSEBERTNets decoding. The network is
  /// shared, so only those two may be swapped.
  void set_variant(ModelVariant variant);

  Encoder<T>& encoder() noexcept { return encoder_; }
  const Encoder<T>& encoder() const noexcept { return encoder_; }
  const RecurrentParams<T>& forward_rnn() const noexcept { return fwd_; }
  const RecurrentParams<T>& backward_rnn() const noexcept { return bwd_; }
  const SpanHeadParams<T>& head() const noexcept { return head_; }

  /// All trainable tensors, named, in a fixed order.
  ParamList<T> parameters() const;
  std::vector<BasicTensor<T>> parameter_tensors() const;

  /// Span logits for one encoded input. Dropout is active iff dropout_rng is set.
  SpanLogits<T> forward_one(Tape<T>& tape, const TokenizedInput& item, Rng* dropout_rng = nullptr,
                            std::vector<std::vector<BasicTensor<T>>>* attentions = nullptr) const;

  /// Span logits per batch member. Each member is run at its own length: the
  /// masks make padding invisible, so trimming it only saves work.
  ForwardResult<T> forward(Tape<T>& tape, const Batch& batch, Rng* dropout_rng = nullptr,
                           bool with_attention = false) const;

  /// Ranked candidates for one input under this variant's decoder:
  /// SEBERTNets returns the single top-1 span, HSEBERTNets multi-channel
  /// recall, the baseline the joint top-k list.
  std::vector<SpanCandidate> predict(const TokenizedInput& item, std::size_t k) const;

  /// Throws CompatibilityError unless the batch was encoded with this vocabulary
  /// (every id in range) and fits the encoder's max_len.
  void check_compatible(const TokenizedInput& item) const;

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  Encoder<T> encoder_;
  RecurrentParams<T> fwd_;
  RecurrentParams<T> bwd_;
  SpanHeadParams<T> head_;
};

using SpanModel = BasicSpanModel<float>;

struct StepResult {
  double loss = 0.0;
  /// Global gradient norm before clipping.
  double grad_norm = 0.0;
};

/// Zero grads, forward in training mode, mean span loss, backward, clip to the
/// configured global norm, one optimizer step. Every batch member must carry
/// gold. Throws DivergenceError when the loss is not finite.
template <typename T>
StepResult train_step(BasicSpanModel<T>& model, const Batch& batch, Optimizer<T>& optimizer, Rng& dropout_rng);

/// Scales gradients so their global L2 norm is at most max_norm; returns the
/// norm before scaling.
template <typename T>
double clip_grad_norm(std::span<BasicTensor<T>> params, double max_norm);

struct TrainingState {
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
};

/// Model plus the state needed to resume training.
struct Checkpoint {
  SpanModel model;
  std::optional<Optimizer<float>> optimizer;
  TrainingState training;
};

/// Binary layout: "SEBN", u32 LE version, u32 LE metadata length, UTF-8 JSON
/// metadata, then fp32 LE row-major payloads in directory order. The metadata
/// carries CRC-32 checksums of the header and of the payload.
void save_checkpoint(const std::filesystem::path& path, const SpanModel& model,
                     const Optimizer<float>* optimizer = nullptr, const TrainingState& training = {});
void write_checkpoint(std::ostream& out, const SpanModel& model, const Optimizer<float>* optimizer = nullptr,
                      const TrainingState& training = {});

/// Throws FormatError (with byte offset) on any structural or checksum failure
/// and CompatibilityError on an unsupported version.
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint read_checkpoint(std::string_view bytes);

}  // namespace sebert
