#include "sebert/span_head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <unordered_map>

#include "sebert/errors.hpp"
#include "sebert/ops.hpp"
#include "sebert/utf8.hpp"

namespace sebert {

template <typename T>
SpanHeadParams<T> SpanHeadParams<T>::init(std::size_t width, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  SpanHeadParams p;
  p.w_start = uniform_param<T>({width, 1}, bound, rng);
  p.b_start = constant_param<T>({1, 1}, T(0));
  p.w_end = uniform_param<T>({width, 1}, bound, rng);
  p.b_end = constant_param<T>({1, 1}, T(0));
  return p;
}

template <typename T>
void SpanHeadParams<T>::append_parameters(const std::string& prefix, ParamList<T>& out) const {
  out.push_back({prefix + "start.w", w_start});
  out.push_back({prefix + "start.b", b_start});
  out.push_back({prefix + "end.w", w_end});
  out.push_back({prefix + "end.b", b_end});
}

std::vector<bool> text_region_mask(SpanRange text_span, std::size_t length) {
  if (text_span.first > text_span.last || text_span.last >= length)
    throw IndexError("text span (" + std::to_string(text_span.first) + ", " + std::to_string(text_span.last) +
                     ") does not fit a sequence of " + std::to_string(length));
  std::vector<bool> valid(length, false);
  for (std::size_t i = text_span.first; i <= text_span.last; ++i) valid[i] = true;
  return valid;
}

template <typename T>
SpanLogits<T> score(Tape<T>& tape, const BasicTensor<T>& hidden, const SpanHeadParams<T>& params,
                    SpanRange text_span) {
  if (hidden.dim() != 2 || hidden.cols() != params.width())
    throw DimensionError("span head expects width " + std::to_string(params.width()) + ", got " +
                         shape_str(hidden.shape()));
  SpanLogits<T> out;
  out.start_logits = ops::transpose(tape, ops::linear(tape, hidden, params.w_start, params.b_start));
  out.end_logits = ops::transpose(tape, ops::linear(tape, hidden, params.w_end, params.b_end));
  out.valid = text_region_mask(text_span, hidden.rows());
  return out;
}

template <typename T>
BasicTensor<T> span_loss(Tape<T>& tape, const SpanLogits<T>& logits, SpanRange gold) {
  const auto& v = logits.valid;
  if (gold.first > gold.last || gold.last >= v.size() || !v[gold.first] || !v[gold.last])
    throw ContractError("gold span (" + std::to_string(gold.first) + ", " + std::to_string(gold.last) +
                        ") lies outside the valid region");
  auto start_lp = ops::masked_log_softmax(tape, logits.start_logits, v);
  auto end_lp = ops::masked_log_softmax(tape, logits.end_logits, v);
  return ops::add(tape, ops::cross_entropy(tape, start_lp, gold.first), ops::cross_entropy(tape, end_lp, gold.last));
}

template <typename T>
BasicTensor<T> span_loss(Tape<T>& tape, const std::vector<SpanLogits<T>>& logits,
                         const std::vector<SpanRange>& gold) {
  if (logits.empty() || logits.size() != gold.size())
    throw ContractError("span_loss needs one gold span per example");
  BasicTensor<T> total = span_loss(tape, logits[0], gold[0]);
  for (std::size_t i = 1; i < logits.size(); ++i) total = ops::add(tape, total, span_loss(tape, logits[i], gold[i]));
  return ops::scale(tape, total, T(1) / static_cast<T>(logits.size()));
}

std::string channel_name(RecallChannel channel) {
  return channel == RecallChannel::JointTopK ? "joint_topk" : "independent_nbest";
}

RecallChannel parse_channel(const std::string& name) {
  if (name == "joint_topk") return RecallChannel::JointTopK;
  if (name == "independent_nbest") return RecallChannel::IndependentNBest;
  throw ContractError("unknown recall channel '" + name + "'");
}

void RecallConfig::validate() const {
  if (k == 0) throw ContractError("recall k must be at least 1");
  if (max_span_len == 0) throw ContractError("max_span_len must be at least 1");
}

template <typename T>
SpanLogProbs span_log_probs(const SpanLogits<T>& logits) {
  const std::size_t n = logits.valid.size();
  if (logits.start_logits.numel() != n || logits.end_logits.numel() != n)
    throw DimensionError("span logits and validity mask differ in length");
  SpanLogProbs out;
  out.valid = logits.valid;
  auto lsm = [&](std::span<const T> x) {
    std::vector<double> lp(n, -std::numeric_limits<double>::infinity());
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      if (logits.valid[i]) {
        mx = std::max(mx, static_cast<double>(x[i]));
        any = true;
      }
    if (!any) throw DecodeError("no valid position to decode");
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (logits.valid[i]) z += std::exp(static_cast<double>(x[i]) - mx);
    const double lz = std::log(z);
    for (std::size_t i = 0; i < n; ++i)
      if (logits.valid[i]) lp[i] = static_cast<double>(x[i]) - mx - lz;
    return lp;
  };
  out.start = lsm(logits.start_logits.data());
  out.end = lsm(logits.end_logits.data());
  return out;
}

namespace {

struct Pair {
  std::size_t s;
  std::size_t e;
  double score;
};

// Ordering used everywhere: higher score first, then smaller (s, e).
bool better(const Pair& a, const Pair& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.s != b.s) return a.s < b.s;
  return a.e < b.e;
}

void check_inputs(const SpanLogProbs& lp, std::u32string_view text, SpanRange text_span, const RecallConfig& cfg) {
  cfg.validate();
  const std::size_t n = lp.valid.size();
  if (lp.start.size() != n || lp.end.size() != n) throw DimensionError("log-prob vectors differ in length");
  if (text_span.first > text_span.last || text.size() != text_span.last - text_span.first + 1)
    throw ContractError("text does not cover the text span");
  for (std::size_t i = 0; i < n; ++i)
    if (lp.valid[i] && (i < text_span.first || i > text_span.last))
      throw ContractError("valid position " + std::to_string(i) + " lies outside the text span");
}

std::vector<Pair> all_pairs(const SpanLogProbs& lp, std::size_t max_span_len) {
  std::vector<Pair> pairs;
  const std::size_t n = lp.valid.size();
  for (std::size_t s = 0; s < n; ++s) {
    if (!lp.valid[s]) continue;
    for (std::size_t e = s; e < n && e - s < max_span_len; ++e)
      if (lp.valid[e]) pairs.push_back({s, e, lp.start[s] + lp.end[e]});
  }
  return pairs;
}

std::vector<Pair> joint_topk(const SpanLogProbs& lp, const RecallConfig& cfg) {
  auto pairs = all_pairs(lp, cfg.max_span_len);
  const std::size_t k = std::min(cfg.k, pairs.size());
  std::partial_sort(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(k), pairs.end(), better);
  pairs.resize(k);
  return pairs;
}

std::vector<std::size_t> ranked_positions(const std::vector<double>& lp, const std::vector<bool>& valid) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < valid.size(); ++i)
    if (valid[i]) pos.push_back(i);
  std::stable_sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) { return lp[a] > lp[b]; });
  return pos;
}

std::vector<std::optional<Pair>> independent_nbest(const SpanLogProbs& lp, const RecallConfig& cfg) {
  const auto starts = ranked_positions(lp.start, lp.valid);
  const auto ends = ranked_positions(lp.end, lp.valid);
  std::vector<std::optional<Pair>> out;
  for (std::size_t i = 0; i < cfg.k && i < starts.size(); ++i) {
    std::size_t s = starts[i], e = ends[i];
    if (s > e) std::swap(s, e);
    if (e - s >= cfg.max_span_len) {
      out.emplace_back(std::nullopt);
      continue;
    }
    out.emplace_back(Pair{s, e, lp.start[s] + lp.end[e]});
  }
  return out;
}

SpanCandidate to_candidate(const Pair& p, std::u32string_view text, SpanRange text_span) {
  return SpanCandidate{p.s, p.e, p.score, utf8::encode(text.substr(p.s - text_span.first, p.e - p.s + 1))};
}

}  // namespace

SpanCandidate decode_top1(const SpanLogProbs& lp, std::u32string_view text, SpanRange text_span,
                          const RecallConfig& config) {
  check_inputs(lp, text, text_span, config);
  std::optional<Pair> best;
  const std::size_t n = lp.valid.size();
  for (std::size_t s = 0; s < n; ++s) {
    if (!lp.valid[s]) continue;
    for (std::size_t e = s; e < n && e - s < config.max_span_len; ++e) {
      if (!lp.valid[e]) continue;
      const Pair p{s, e, lp.start[s] + lp.end[e]};
      if (!best || better(p, *best)) best = p;
    }
  }
  if (!best) throw DecodeError("no admissible (start, end) pair");
  return to_candidate(*best, text, text_span);
}

std::vector<SpanCandidate> decode_multichannel(const SpanLogProbs& lp, std::u32string_view text,
                                               SpanRange text_span, const RecallConfig& config) {
  const SpanCandidate top = decode_top1(lp, text, text_span, config);

  std::vector<std::vector<std::optional<Pair>>> streams;
  for (auto ch : config.channels) {
    if (ch == RecallChannel::JointTopK) {
      std::vector<std::optional<Pair>> s;
      for (const auto& p : joint_topk(lp, config)) s.emplace_back(p);
      streams.push_back(std::move(s));
    } else {
      streams.push_back(independent_nbest(lp, config));
    }
  }

  std::vector<Pair> merged{Pair{top.start, top.end, top.score}};
  for (std::size_t rank = 0; rank < config.k; ++rank)
    for (const auto& s : streams)
      if (rank < s.size() && s[rank]) merged.push_back(*s[rank]);

  std::vector<Pair> kept;
  std::unordered_map<std::u32string, std::size_t> by_text;
  for (const auto& p : merged) {
    std::u32string key(text.substr(p.s - text_span.first, p.e - p.s + 1));
    const auto it = by_text.find(key);
    if (it == by_text.end()) {
      if (kept.size() == config.k) continue;
      by_text.emplace(std::move(key), kept.size());
      kept.push_back(p);
    } else if (better(p, kept[it->second])) {
      kept[it->second] = p;
    }
  }
  std::sort(kept.begin(), kept.end(), better);

  std::vector<SpanCandidate> out;
  out.reserve(kept.size());
  for (const auto& p : kept) out.push_back(to_candidate(p, text, text_span));
  return out;
}

#define SEBERT_INSTANTIATE_HEAD(T)                                                                           \
  template struct SpanHeadParams<T>;                                                                         \
  template SpanLogits<T> score(Tape<T>&, const BasicTensor<T>&, const SpanHeadParams<T>&, SpanRange);        \
  template BasicTensor<T> span_loss(Tape<T>&, const SpanLogits<T>&, SpanRange);                              \
  template BasicTensor<T> span_loss(Tape<T>&, const std::vector<SpanLogits<T>>&, const std::vector<SpanRange>&); \
  template SpanLogProbs span_log_probs(const SpanLogits<T>&);

SEBERT_INSTANTIATE_HEAD(float)
SEBERT_INSTANTIATE_HEAD(double)

#undef SEBERT_INSTANTIATE_HEAD

}  // namespace sebert
