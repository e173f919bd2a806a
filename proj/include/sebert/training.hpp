#pragma once

// Epoch loop, corpus-level prediction and evaluation on top of the model.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sebert/data.hpp"
#include "sebert/eval.hpp"
#include "sebert/model.hpp"
#include "sebert/optim.hpp"

namespace sebert {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  /// Largest k reported on the dev set.
  std::size_t eval_k = 5;
  MatchMode match = MatchMode::Any;
};

/// Inputs to score plus their gold entity lists.
struct EvalSet {
  /// Encoded without gold, so every example gets a prediction.
  std::vector<TokenizedInput> inputs;
  GoldSets gold;
};

/// Encodes a corpus for evaluation. Ids must be unique.
EvalSet make_eval_set(std::span<const RawExample> corpus, const Vocabulary& vocab, std::size_t max_len);

/// Training records: one per gold entity, examples whose gold was cut away by
/// truncation dropped and listed in `skipped`.
EncodedCorpus make_train_set(std::span<const RawExample> corpus, const Vocabulary& vocab, std::size_t max_len);

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::size_t steps = 0;
  std::string phase;
  std::optional<EvalReport> dev;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Runs config.epochs passes over `train` in shuffled mini-batches. After each
/// epoch the dev set (if any) is scored and `on_epoch` is called.
std::vector<EpochRecord> fit(SpanModel& model, Optimizer<float>& optimizer, std::span<const TokenizedInput> train,
                             const EvalSet* dev, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Ranked candidates per input id.
std::map<std::string, std::vector<SpanCandidate>> predict_candidates(const SpanModel& model,
                                                                     std::span<const TokenizedInput> inputs,
                                                                     std::size_t k);

/// Ranked entity strings per input id.
Predictions predict_entities(const SpanModel& model, std::span<const TokenizedInput> inputs, std::size_t k);

EvalReport evaluate_model(const SpanModel& model, const EvalSet& data, std::size_t max_k,
                          MatchMode mode = MatchMode::Any);

}  // namespace sebert
