#pragma once

// Precision / recall / F1 at each cut-off k of ranked entity predictions.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace sebert {

/// 2pr / (p + r), and 0 when p + r = 0.
double f1(double p, double r);

/// How an example with several gold entities counts as correct at k.
enum class MatchMode {
  Any,  // some gold entity is among the top-k predictions
  All,  // every gold entity is among the top-k predictions
};

std::string match_mode_name(MatchMode mode);
MatchMode parse_match_mode(const std::string& name);

struct TopKScore {
  std::size_t k = 0;
  std::size_t identified = 0;
  std::size_t annotated = 0;
  std::size_t correct = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::vector<TopKScore> top_k;

  /// Row for cut-off k (1-based).
  const TopKScore& at(std::size_t k) const;
  /// {"top_k": [{"k":1,"p":...,"r":...,"f1":..., counts...}, ...]}
  std::string to_json() const;
  /// Fixed-width text table, one row per k.
  std::string to_table() const;
};

/// id -> ranked entity strings.
using Predictions = std::map<std::string, std::vector<std::string>>;
/// id -> gold entity strings.
using GoldSets = std::map<std::string, std::vector<std::string>>;

/// Scores predictions against gold for k = 1..max_k. Strings are compared
/// exactly after the same normalization applied to input text. Every
/// prediction id must be present in `gold` (ContractError otherwise); gold ids
/// without predictions count as annotated but not identified.
EvalReport evaluate(const Predictions& predictions, const GoldSets& gold, std::size_t max_k,
                    MatchMode mode = MatchMode::Any);

}  // namespace sebert
