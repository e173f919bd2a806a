#pragma once

// Start/end pointer head over the text region, its loss, and the decoders.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sebert/data.hpp"
#include "sebert/params.hpp"
#include "sebert/rng.hpp"
#include "sebert/tensor.hpp"

namespace sebert {

template <typename T>
struct SpanHeadParams {
  BasicTensor<T> w_start;  // [width x 1]
  BasicTensor<T> b_start;  // [1 x 1]
  BasicTensor<T> w_end;
  BasicTensor<T> b_end;

  static SpanHeadParams init(std::size_t width, Rng& rng);
  std::size_t width() const { return w_start.rows(); }
  void append_parameters(const std::string& prefix, ParamList<T>& out) const;
};

template <typename T>
struct SpanLogits {
  BasicTensor<T> start_logits;  // [1 x seq_len]
  BasicTensor<T> end_logits;    // [1 x seq_len]
  /// True exactly on the text region.
  std::vector<bool> valid;
};

/// Validity mask for a layout of `length` positions whose text occupies text_span.
std::vector<bool> text_region_mask(SpanRange text_span, std::size_t length);

/// Two independent affine maps width -> 1 applied to every row of hidden.
template <typename T>
SpanLogits<T> score(Tape<T>& tape, const BasicTensor<T>& hidden, const SpanHeadParams<T>& params,
                    SpanRange text_span);

/// -log p_start(gold.first) - log p_end(gold.last), both softmaxes restricted
/// to valid positions.
template <typename T>
BasicTensor<T> span_loss(Tape<T>& tape, const SpanLogits<T>& logits, SpanRange gold);

/// Mean of span_loss over examples.
template <typename T>
BasicTensor<T> span_loss(Tape<T>& tape, const std::vector<SpanLogits<T>>& logits,
                         const std::vector<SpanRange>& gold);

struct SpanCandidate {
  std::size_t start = 0;
  std::size_t end = 0;
  /// log p_start(start) + log p_end(end)
  double score = 0.0;
  std::string entity_text;
};

enum class RecallChannel { JointTopK, IndependentNBest };

std::string channel_name(RecallChannel channel);
RecallChannel parse_channel(const std::string& name);

struct RecallConfig {
  std::size_t k = 5;
  std::size_t max_span_len = 30;
  std::vector<RecallChannel> channels = {RecallChannel::JointTopK, RecallChannel::IndependentNBest};

  void validate() const;
};

/// Log-probabilities of start and end over the valid positions (-inf elsewhere).
struct SpanLogProbs {
  std::vector<double> start;
  std::vector<double> end;
  std::vector<bool> valid;
};

template <typename T>
SpanLogProbs span_log_probs(const SpanLogits<T>& logits);

/// Best (s, e) with s <= e, e - s < max_span_len, both valid, maximizing
/// log p_start(s) + log p_end(e); ties go to the smaller s, then smaller e.
/// `text` holds the characters of text_span in order.
SpanCandidate decode_top1(const SpanLogProbs& lp, std::u32string_view text, SpanRange text_span,
                          const RecallConfig& config);

template <typename T>
SpanCandidate decode_top1(const SpanLogits<T>& logits, std::u32string_view text, SpanRange text_span,
                          const RecallConfig& config) {
  return decode_top1(span_log_probs(logits), text, text_span, config);
}

/// Multi-channel recall. Each enabled channel yields a ranked stream of
/// spans; the decode_top1 span heads the merged stream, after which channel
/// entries are taken round-robin by rank. The first k distinct entity texts
/// are kept (a repeated text keeps its best-scoring span) and returned by
/// descending score, ties by (start, end).
std::vector<SpanCandidate> decode_multichannel(const SpanLogProbs& lp, std::u32string_view text,
                                               SpanRange text_span, const RecallConfig& config);

template <typename T>
std::vector<SpanCandidate> decode_multichannel(const SpanLogits<T>& logits, std::u32string_view text,
                                               SpanRange text_span, const RecallConfig& config) {
  return decode_multichannel(span_log_probs(logits), text, text_span, config);
}

}  // namespace sebert
