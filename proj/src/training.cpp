#include "sebert/training.hpp"

#include <numeric>

#include "sebert/errors.hpp"
#include "sebert/rng.hpp"

namespace sebert {

EvalSet make_eval_set(std::span<const RawExample> corpus, const Vocabulary& vocab, std::size_t max_len) {
  EvalSet out;
  for (const auto& ex : corpus) {
    if (out.gold.count(ex.id)) throw DataError("duplicate example id '" + ex.id + "'");
    out.gold[ex.id] = ex.entities;
    RawExample query = ex;
    query.entities.clear();
    out.inputs.push_back(encode_example(query, vocab, max_len));
  }
  return out;
}

EncodedCorpus make_train_set(std::span<const RawExample> corpus, const Vocabulary& vocab, std::size_t max_len) {
  const auto flat = flatten_entities(corpus);
  return encode_corpus(flat, vocab, max_len);
}

std::vector<EpochRecord> fit(SpanModel& model, Optimizer<float>& optimizer, std::span<const TokenizedInput> train,
                             const EvalSet* dev, const TrainConfig& config, const EpochCallback& on_epoch) {
  if (config.batch_size == 0) throw ContractError("batch_size must be at least 1");
  if (train.empty()) throw DataError("no usable training examples");
  Rng order_rng(config.seed);
  Rng dropout_rng(config.seed + 1);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<EpochRecord> history;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::vector<const TokenizedInput*> members;
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
        members.push_back(&train[order[i]]);
      const Batch batch = make_batch(std::span<const TokenizedInput* const>(members));
      loss_sum += train_step(model, batch, optimizer, dropout_rng).loss;
      ++steps;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = loss_sum / static_cast<double>(steps);
    rec.steps = steps;
    rec.phase = optimizer.phase_name();
    if (dev) rec.dev = evaluate_model(model, *dev, config.eval_k, config.match);
    if (on_epoch) on_epoch(rec);
    history.push_back(std::move(rec));
  }
  return history;
}

std::map<std::string, std::vector<SpanCandidate>> predict_candidates(const SpanModel& model,
                                                                     std::span<const TokenizedInput> inputs,
                                                                     std::size_t k) {
  std::map<std::string, std::vector<SpanCandidate>> out;
  for (const auto& item : inputs) {
    if (out.count(item.id)) continue;
    out[item.id] = model.predict(item, k);
  }
  return out;
}

Predictions predict_entities(const SpanModel& model, std::span<const TokenizedInput> inputs, std::size_t k) {
  Predictions out;
  for (auto& [id, cands] : predict_candidates(model, inputs, k)) {
    auto& texts = out[id];
    for (const auto& c : cands) texts.push_back(c.entity_text);
  }
  return out;
}

EvalReport evaluate_model(const SpanModel& model, const EvalSet& data, std::size_t max_k, MatchMode mode) {
  return evaluate(predict_entities(model, data.inputs, max_k), data.gold, max_k, mode);
}

}  // namespace sebert
