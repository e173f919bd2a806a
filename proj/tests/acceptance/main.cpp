// Acceptance suite. `acceptance N` runs criterion N, no argument runs all.
// Each criterion prints one PASS/FAIL line with its measurements and runtime;
// a criterion that overruns its time budget fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "grad_cases.hpp"
#include "oracles.hpp"
#include "quadratic.hpp"
#include "random_tensors.hpp"
#include "sebert/encoder.hpp"
#include "sebert/errors.hpp"
#include "sebert/model.hpp"
#include "sebert/recurrent.hpp"
#include "sebert/span_head.hpp"
#include "sebert/training.hpp"
#include "tiny_model.hpp"

namespace sebert {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// ---------------------------------------------------------------- 1

Outcome gradient_suite() {
  constexpr int kTrials = 100;
  constexpr double kTol = 1e-5;
  Rng rng(1001);
  double worst = 0.0;
  std::string worst_case;
  std::size_t checked = 0, cases = 0;
  auto record = [&](const std::string& name, const testing::GradCheckResult& r) {
    checked += r.checked;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_case = name + " " + r.worst;
    }
  };
  for (const auto& c : testing::primitive_grad_cases()) {
    ++cases;
    for (int t = 0; t < kTrials; ++t) record(c.name, c.trial(rng));
  }
  ++cases;
  for (int t = 0; t < kTrials; ++t) record("composed", testing::composed_grad_trial(rng));
  Outcome o;
  o.pass = worst < kTol;
  o.detail = fmt("%zu cases x %d trials, %zu gradient entries, max rel err %.3e (tol %.0e)", cases, kTrials, checked,
                 worst, kTol);
  if (!o.pass) o.detail += "; worst: " + worst_case;
  return o;
}

// ---------------------------------------------------------------- 2

std::vector<double> values(const Tensor64& t) { return {t.data().begin(), t.data().end()}; }

Outcome cell_oracle() {
  Rng rng(2002);
  constexpr int kCases = 1000;
  int lstm_bad = 0, gru_bad = 0;
  for (int i = 0; i < kCases; ++i) {
    for (auto cell : {CellType::Lstm, CellType::Gru}) {
      const std::size_t in = 1 + rng.below(8), hid = 1 + rng.below(8);
      auto p = RecurrentParams<double>::init(cell, in, hid, rng);
      std::vector<testing::GateRef> refs;
      for (auto& g : p.gates) {
        for (auto* t : {&g.w, &g.u, &g.b})
          for (auto& v : t->data()) v = rng.uniform(-1.5, 1.5);
        refs.push_back({values(g.w), values(g.u), values(g.b)});
      }
      const auto x = testing::random_tensor({1, in}, rng, -2, 2, false);
      const auto h = testing::random_tensor({1, hid}, rng, -1, 1, false);
      Tape<double> tape(false);
      if (cell == CellType::Lstm) {
        const auto c = testing::random_tensor({1, hid}, rng, -2, 2, false);
        const auto next = lstm_step(tape, x, CellState<double>{h, c}, p);
        const auto ref = testing::lstm_reference(values(x), {values(h), values(c)}, refs, in, hid);
        lstm_bad += values(next.h) != ref.h || values(next.c) != ref.c;
      } else {
        gru_bad += values(gru_step(tape, x, h, p)) != testing::gru_reference(values(x), values(h), refs, in, hid);
      }
    }
  }
  return {lstm_bad == 0 && gru_bad == 0,
          fmt("%d LSTM + %d GRU cases, bit mismatches: lstm %d, gru %d", kCases, kCases, lstm_bad, gru_bad)};
}

// ---------------------------------------------------------------- 3

double max_real_diff(const Tensor& a, const Tensor& b, std::size_t rows) {
  double d = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < a.cols(); ++c)
      d = std::max(d, static_cast<double>(std::abs(a.at(r, c) - b.at(r, c))));
  return d;
}

Outcome mask_equivalence() {
  constexpr int kTrials = 200;
  constexpr double kTol = 1e-6;
  Rng rng(3003);
  EncoderConfig ec;
  ec.d_model = 16;
  ec.n_layers = 2;
  ec.n_heads = 4;
  ec.d_ff = 32;
  ec.max_len = 40;
  ec.vocab_size = 30;
  ec.dropout = 0.0;
  Encoder<float> encoder(ec, rng);
  double worst_rnn = 0.0, worst_enc = 0.0;
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t n = 1 + rng.below(20), pad = 1 + rng.below(20);
    std::vector<bool> mask(n, true), padded_mask(n + pad, false);
    std::fill(padded_mask.begin(), padded_mask.begin() + static_cast<std::ptrdiff_t>(n), true);
    Tape<float> tape(false);

    for (auto cell : {CellType::Lstm, CellType::Gru}) {
      const std::size_t in = 1 + rng.below(6), hid = 1 + rng.below(6);
      const auto fwd = RecurrentParams<float>::init(cell, in, hid, rng);
      const auto bwd = RecurrentParams<float>::init(cell, in, hid, rng);
      const auto padded = testing::random_tensor<float>({n + pad, in}, rng, -1, 1, false);
      const auto seq = Tensor({n, in}, std::vector<float>(padded.data().begin(), padded.data().begin() + n * in));
      const auto a = bidirectional_encode(tape, seq, mask, fwd, bwd);
      const auto b = bidirectional_encode(tape, padded, padded_mask, fwd, bwd);
      worst_rnn = std::max(worst_rnn, max_real_diff(a, b, n));
    }

    std::vector<int> ids(n + pad), segs(n + pad);
    for (std::size_t i = 0; i < n + pad; ++i) {
      ids[i] = static_cast<int>(rng.below(ec.vocab_size));
      segs[i] = i < n / 2 ? 0 : 1;
    }
    const auto a = encoder.encode(tape, std::span<const int>(ids).first(n), std::span<const int>(segs).first(n), mask);
    const auto b = encoder.encode(tape, ids, segs, padded_mask);
    worst_enc = std::max(worst_enc, max_real_diff(a.hidden, b.hidden, n));
  }
  return {worst_rnn <= kTol && worst_enc <= kTol,
          fmt("%d trials (lengths 1-20, padding 1-20, fp32): max |diff| recurrent %.3e, encoder %.3e (tol %.0e)",
              kTrials, worst_rnn, worst_enc, kTol)};
}

// ---------------------------------------------------------------- 4

Outcome decode_oracle() {
  constexpr int kSets = 500;
  Rng rng(4004);
  int top1_bad = 0, first_bad = 0, dedup_bad = 0, sorted_bad = 0, size_bad = 0, prefix_bad = 0;
  const std::vector<std::vector<RecallChannel>> channel_sets{
      {RecallChannel::JointTopK, RecallChannel::IndependentNBest},
      {RecallChannel::JointTopK},
      {RecallChannel::IndependentNBest}};
  for (int t = 0; t < kSets; ++t) {
    const std::size_t n = 3 + rng.below(18);  // seq_len <= 20
    const std::size_t first = 1 + rng.below(n - 2);
    const std::size_t last = first + rng.below(n - 1 - first);
    const SpanRange span{first, last};
    const std::size_t m = last - first + 1;

    SpanLogits<double> logits;
    logits.start_logits = testing::random_tensor({1, n}, rng, -4, 4, false);
    logits.end_logits = testing::random_tensor({1, n}, rng, -4, 4, false);
    logits.valid = text_region_mask(span, n);
    const auto lp = span_log_probs(logits);
    std::u32string text;
    for (std::size_t i = 0; i < m; ++i) text.push_back(static_cast<char32_t>(U'a' + rng.below(4)));

    RecallConfig cfg;
    cfg.max_span_len = 1 + rng.below(m + 2);
    cfg.channels = channel_sets[rng.below(channel_sets.size())];
    const auto top = decode_top1(lp, text, span, cfg);
    const auto ref = testing::brute_force_top1(lp.start, lp.end, lp.valid, cfg.max_span_len);
    top1_bad += !ref || ref->start != top.start || ref->end != top.end || ref->score != top.score;

    std::set<std::string> previous;
    for (std::size_t k = 1; k <= 8; ++k) {
      cfg.k = k;
      const auto out = decode_multichannel(lp, text, span, cfg);
      size_bad += out.empty() || out.size() > k;
      if (out.empty()) continue;
      first_bad += out[0].start != top.start || out[0].end != top.end;
      std::set<std::string> texts;
      for (std::size_t i = 0; i < out.size(); ++i) {
        texts.insert(out[i].entity_text);
        if (i > 0) sorted_bad += out[i - 1].score < out[i].score;
      }
      dedup_bad += texts.size() != out.size();
      prefix_bad += !std::includes(texts.begin(), texts.end(), previous.begin(), previous.end());
      previous = texts;
    }
  }
  const int bad = top1_bad + first_bad + dedup_bad + sorted_bad + size_bad + prefix_bad;
  return {bad == 0, fmt("%d logit sets; violations: top1 %d, first!=top1 %d, dup %d, unsorted %d, size %d, "
                        "prefix %d",
                        kSets, top1_bad, first_bad, dedup_bad, sorted_bad, size_bad, prefix_bad)};
}

// ---------------------------------------------------------------- 5

Outcome overfit() {
  constexpr std::size_t kMaxEpochs = 300;
  SynthConfig sc;
  sc.count = 64;
  const auto corpus = generate_synthetic(sc, 505);
  const auto vocab = build_vocab(corpus);
  ModelConfig mc = testing::tiny_model_config(ModelVariant::SeBertNets);
  mc.encoder.max_len = 140;
  SpanModel model(mc, vocab, 5);
  const auto train = make_train_set(corpus, vocab, mc.encoder.max_len);
  const auto eval_set = make_eval_set(corpus, vocab, mc.encoder.max_len);
  Optimizer<float> opt{OptimizerConfig{}};
  TrainConfig tc;
  tc.batch_size = 8;
  tc.seed = 5;
  tc.epochs = 1;
  double f1 = 0.0;
  std::size_t epoch = 0;
  while (epoch < kMaxEpochs && f1 < 1.0) {
    tc.seed = 5 + epoch;
    fit(model, opt, train.items, nullptr, tc);
    ++epoch;
    f1 = evaluate_model(model, eval_set, 1).at(1).f1;
  }
  return {f1 == 1.0, fmt("64 examples, SEBERTNets d32/1 layer/2 heads/hidden 16, swats optimizer: train F1@1 %.4f "
                         "after %zu epoch(s) (limit %zu)",
                         f1, epoch, kMaxEpochs)};
}

// ---------------------------------------------------------------- 6, 7

struct TrainedRun {
  EvalReport bert, seb, hseb;
};

SpanModel train_variant(ModelVariant variant, const std::vector<RawExample>& train_raw, const Vocabulary& vocab,
                        std::uint64_t seed, std::size_t epochs) {
  ModelConfig mc = testing::tiny_model_config(variant);
  mc.encoder.max_len = 140;
  SpanModel model(mc, vocab, seed);
  const auto train = make_train_set(train_raw, vocab, mc.encoder.max_len);
  Optimizer<float> opt{OptimizerConfig{}};
  TrainConfig tc;
  tc.batch_size = 8;
  tc.epochs = epochs;
  tc.seed = seed;
  fit(model, opt, train.items, nullptr, tc);
  return model;
}

std::string row(const EvalReport& r) {
  std::string s;
  for (const auto& k : r.top_k) s += fmt("%s%.3f", s.empty() ? "" : "/", k.f1);
  return s;
}

bool monotone(const EvalReport& r) {
  for (std::size_t k = 1; k < r.top_k.size(); ++k)
    if (r.top_k[k].f1 < r.top_k[k - 1].f1) return false;
  return true;
}

Outcome directional_ordering() {
  constexpr std::size_t kEpochs = 15;
  int ordered = 0;
  bool all_monotone = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SynthConfig sc;
    sc.count = 2000;
    const auto corpus = generate_synthetic(sc, 600 + seed);
    const std::vector<RawExample> train(corpus.begin(), corpus.begin() + 1500);
    const std::vector<RawExample> dev(corpus.begin() + 1500, corpus.end());
    const auto vocab = build_vocab(corpus);
    const auto dev_set = make_eval_set(dev, vocab, 140);

    const auto bert = evaluate_model(train_variant(ModelVariant::BertBaseline, train, vocab, seed, kEpochs), dev_set, 5);
    SpanModel seb_model = train_variant(ModelVariant::SeBertNets, train, vocab, seed, kEpochs);
    const auto seb = evaluate_model(seb_model, dev_set, 5);
    seb_model.set_variant(ModelVariant::HSeBertNets);
    const auto hseb = evaluate_model(seb_model, dev_set, 5);

    ordered += bert.at(1).f1 <= seb.at(1).f1;
    all_monotone = all_monotone && monotone(bert) && monotone(seb) && monotone(hseb);
    detail += fmt("; seed %d F1@1..5 bert %s seb %s hseb %s", static_cast<int>(seed), row(bert).c_str(),
                  row(seb).c_str(), row(hseb).c_str());
  }
  return {ordered >= 2 && all_monotone,
          fmt("2000 examples (500 held out), %zu epochs: bert<=seb on %d/3 seeds, monotone %s", kEpochs, ordered,
              all_monotone ? "yes" : "no") +
              detail};
}

Outcome multi_entity_recall() {
  constexpr std::size_t kEpochs = 12;
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SynthConfig sc;
    sc.count = 2000;
    sc.multi_fraction = 0.5;
    const auto corpus = generate_synthetic(sc, 700 + seed);
    const std::vector<RawExample> train(corpus.begin(), corpus.begin() + 1500);
    const std::vector<RawExample> dev(corpus.begin() + 1500, corpus.end());
    const auto vocab = build_vocab(corpus);
    const auto dev_set = make_eval_set(dev, vocab, 140);

    SpanModel model = train_variant(ModelVariant::SeBertNets, train, vocab, seed, kEpochs);
    const auto seb = evaluate_model(model, dev_set, 3);
    model.set_variant(ModelVariant::HSeBertNets);
    const auto hseb = evaluate_model(model, dev_set, 3);
    const auto hseb_all = evaluate_model(model, dev_set, 3, MatchMode::All);
    wins += hseb.at(3).f1 > seb.at(3).f1;
    detail += fmt("; seed %d F1@3 hseb %.4f vs repeated top-1 %.4f (all-match hseb %.4f)", static_cast<int>(seed),
                  hseb.at(3).f1, seb.at(3).f1, hseb_all.at(3).f1);
  }
  return {wins == 3, fmt("multi_fraction 0.5, 2000 examples (500 held out), %zu epochs: hseb > seb on %d/3 seeds",
                         kEpochs, wins) +
                         detail};
}

// ---------------------------------------------------------------- 8

Outcome swats_contract() {
  constexpr std::size_t kSteps = 5000;
  const auto a = testing::quadratic_curvatures(10);
  const auto theta0 = testing::quadratic_start(10);
  const double lr = 0.01, eps = 1e-6;
  const auto lib = testing::run_library_swats(a, theta0, lr, eps, kSteps);
  const std::size_t k = lib.final_state.switch_step;
  if (k == 0 || !lib.final_state.sgd_lr) return {false, "no switch within 5000 steps"};
  const double big_lambda = *lib.final_state.sgd_lr;

  const auto adam = testing::run_library_adam(a, theta0, lr, k);
  std::size_t adam_bad = 0;
  for (std::size_t s = 0; s < k; ++s) adam_bad += lib.thetas[s] != adam[s] || lib.sgd_phase[s];
  const auto sgd = testing::run_library_sgd(a, lib.thetas[k - 1], big_lambda, kSteps - k);
  std::size_t sgd_bad = 0, reverts = 0;
  for (std::size_t s = k; s < kSteps; ++s) {
    sgd_bad += lib.thetas[s] != sgd[s - k];
    reverts += !lib.sgd_phase[s];
  }
  const auto ref = testing::swats_reference(a, theta0, lr, eps, kSteps);
  const bool ref_agrees = ref.switch_step && *ref.switch_step == k && ref.sgd_lr == big_lambda;
  return {adam_bad == 0 && sgd_bad == 0 && reverts == 0 && ref_agrees,
          fmt("10-d quadratic, lr %.2g, switch eps %.0e: switch at step %zu, Lambda %.17g; pre-switch mismatches %zu, "
              "post-switch mismatches %zu, reverts %zu, independent reference %s",
              lr, eps, k, big_lambda, adam_bad, sgd_bad, reverts, ref_agrees ? "agrees" : "DISAGREES")};
}

// ---------------------------------------------------------------- 9

Outcome eval_oracle() {
  constexpr int kSets = 200;
  Rng rng(9009);
  const std::vector<std::string> pool{"甲公司", "乙公司", "丙", "丁集团", "戊", "己"};
  int bad = 0;
  for (int t = 0; t < kSets; ++t) {
    GoldSets gold;
    Predictions pred;
    const std::size_t n = 1 + rng.below(30);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "ex" + std::to_string(i);
      auto& g = gold[id];
      for (std::size_t j = rng.below(4); j > 0; --j) g.push_back(pool[rng.below(pool.size())]);
      if (rng.bernoulli(0.85)) {
        auto& p = pred[id];
        for (std::size_t j = rng.below(7); j > 0; --j) p.push_back(pool[rng.below(pool.size())]);
      }
    }
    const std::size_t max_k = 1 + rng.below(5);
    for (auto mode : {MatchMode::Any, MatchMode::All}) {
      const auto r = evaluate(pred, gold, max_k, mode);
      const auto ref = testing::brute_force_counts(pred, gold, max_k, mode == MatchMode::All);
      for (std::size_t k = 1; k <= max_k; ++k) {
        const auto& c = ref[k - 1];
        const double p = c.identified ? static_cast<double>(c.correct) / static_cast<double>(c.identified) : 0.0;
        const double rc = c.annotated ? static_cast<double>(c.correct) / static_cast<double>(c.annotated) : 0.0;
        const double f = p + rc == 0.0 ? 0.0 : 2.0 * p * rc / (p + rc);
        const auto& s = r.at(k);
        bad += s.correct != c.correct || s.identified != c.identified || s.annotated != c.annotated ||
               std::abs(s.f1 - f) > 1e-15;
      }
    }
  }
  const bool exact = f1(0.5, 1.0) == 2.0 / 3.0;
  return {bad == 0 && exact, fmt("%d random sets x {any, all}: %d mismatching rows; f1(0.5, 1) = %.17g (%s 2/3)",
                                 kSets, bad, f1(0.5, 1.0), exact ? "==" : "!=")};
}

// ---------------------------------------------------------------- 10

Outcome persistence() {
  SynthConfig sc;
  sc.count = 32;
  const auto corpus = generate_synthetic(sc, 1010);
  const auto vocab = build_vocab(corpus);
  ModelConfig mc = testing::tiny_model_config(ModelVariant::HSeBertNets, CellType::Lstm);
  mc.encoder.max_len = 140;
  SpanModel model(mc, vocab, 10);
  const auto train = make_train_set(corpus, vocab, 140);
  Optimizer<float> opt{OptimizerConfig{}};
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  fit(model, opt, train.items, nullptr, tc);

  const auto path = std::filesystem::temp_directory_path() / "sebert_acceptance_10.sebn";
  save_checkpoint(path, model, &opt, {4, 1});
  const Checkpoint ck = load_checkpoint(path);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes{std::istreambuf_iterator<char>(in), {}};
  std::filesystem::remove(path);

  std::size_t forward_bad = 0;
  for (const auto& item : train.items) {
    Tape<float> t1(false), t2(false);
    const auto a = model.forward_one(t1, item);
    const auto b = ck.model.forward_one(t2, item);
    forward_bad += !std::equal(a.start_logits.data().begin(), a.start_logits.data().end(),
                               b.start_logits.data().begin()) ||
                   !std::equal(a.end_logits.data().begin(), a.end_logits.data().end(), b.end_logits.data().begin());
  }

  std::uint32_t meta_len = 0;
  std::memcpy(&meta_len, bytes.data() + 8, 4);
  const std::size_t header = 12 + meta_len;
  std::size_t undetected = 0, tried = 0;
  for (std::size_t i = 0; i < header; ++i)
    for (unsigned char flip : {0x01, 0x80, 0xFF}) {
      std::string bad = bytes;
      bad[i] = static_cast<char>(bad[i] ^ flip);
      ++tried;
      try {
        read_checkpoint(bad);
        ++undetected;
      } catch (const FormatError&) {
      } catch (const CompatibilityError&) {
      }
    }
  std::size_t payload_undetected = 0;
  for (std::size_t i = header; i < bytes.size(); i += 97) {
    std::string bad = bytes;
    bad[i] = static_cast<char>(bad[i] ^ 0x01);
    try {
      read_checkpoint(bad);
      ++payload_undetected;
    } catch (const FormatError&) {
    }
  }
  return {forward_bad == 0 && undetected == 0 && payload_undetected == 0,
          fmt("%zu inputs, forward mismatches %zu; header %zu bytes, %zu corruptions, undetected %zu; sampled payload "
              "corruptions undetected %zu",
              train.items.size(), forward_bad, header, tried, undetected, payload_undetected)};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "gradient suite", 120, gradient_suite},
      {2, "LSTM/GRU equation oracle", 10, cell_oracle},
      {3, "mask equivalence", 30, mask_equivalence},
      {4, "decode oracle", 10, decode_oracle},
      {5, "overfit", 300, overfit},
      {6, "directional ordering", 1200, directional_ordering},
      {7, "multi-entity recall", 1200, multi_entity_recall},
      {8, "SWATS contract", 5, swats_contract},
      {9, "eval oracle", 5, eval_oracle},
      {10, "persistence", 10, persistence},
  };
  return all;
}

bool run(const Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < c.budget_seconds;
  const bool pass = o.pass && in_time;
  std::cout << "criterion " << c.id << " (" << c.name << "): " << (pass ? "PASS" : "FAIL") << " - " << o.detail
            << fmt(" [%.1fs, budget %.0fs%s]", secs, c.budget_seconds, in_time ? "" : ", OVER BUDGET") << std::endl;
  return pass;
}

}  // namespace
}  // namespace sebert

int main(int argc, char** argv) {
  using namespace sebert;
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > static_cast<int>(criteria().size())) {
      std::cerr << "usage: acceptance [criterion 1-" << criteria().size() << "]\n";
      return 2;
    }
  }
  bool ok = true;
  for (const auto& c : criteria())
    if (only == 0 || c.id == only) ok = run(c) && ok;
  return ok ? 0 : 1;
}
