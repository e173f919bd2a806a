#include "sebert/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "json.hpp"
#include "sebert/data.hpp"
#include "sebert/errors.hpp"

namespace sebert {

double f1(double p, double r) {
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

std::string match_mode_name(MatchMode mode) { return mode == MatchMode::Any ? "any" : "all"; }

MatchMode parse_match_mode(const std::string& name) {
  if (name == "any") return MatchMode::Any;
  if (name == "all") return MatchMode::All;
  throw ContractError("unknown match mode '" + name + "' (expected any or all)");
}

const TopKScore& EvalReport::at(std::size_t k) const {
  if (k == 0 || k > top_k.size())
    throw IndexError("report has no row for k=" + std::to_string(k) + " (1.." + std::to_string(top_k.size()) + ")");
  return top_k[k - 1];
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& s : top_k)
    rows.push_back({{"k", s.k},
                    {"p", s.precision},
                    {"r", s.recall},
                    {"f1", s.f1},
                    {"identified", s.identified},
                    {"annotated", s.annotated},
                    {"correct", s.correct}});
  return nlohmann::ordered_json{{"top_k", rows}}.dump();
}

std::string EvalReport::to_table() const {
  std::string out = "  k  precision  recall      f1  correct  identified  annotated\n";
  char line[128];
  for (const auto& s : top_k) {
    std::snprintf(line, sizeof line, "%3zu  %9.4f  %6.4f  %6.4f  %7zu  %10zu  %9zu\n", s.k, s.precision, s.recall,
                  s.f1, s.correct, s.identified, s.annotated);
    out += line;
  }
  return out;
}

EvalReport evaluate(const Predictions& predictions, const GoldSets& gold, std::size_t max_k, MatchMode mode) {
  if (max_k == 0) throw ContractError("evaluate needs max_k >= 1");
  for (const auto& [id, _] : predictions)
    if (!gold.count(id)) throw ContractError("prediction for unknown example id '" + id + "'");

  EvalReport report;
  report.top_k.resize(max_k);
  for (std::size_t k = 1; k <= max_k; ++k) report.top_k[k - 1].k = k;

  for (const auto& [id, gold_list] : gold) {
    std::set<std::string> wanted;
    for (const auto& g : gold_list) {
      auto n = normalize_text(g);
      if (!n.empty()) wanted.insert(std::move(n));
    }
    const auto it = predictions.find(id);
    const bool identified = it != predictions.end() && !it->second.empty();
    // Rank at which the match condition first holds; 0 when it never does.
    std::size_t hit_rank = 0;
    if (identified && !wanted.empty()) {
      std::set<std::string> seen;
      for (std::size_t r = 0; r < it->second.size() && r < max_k && hit_rank == 0; ++r) {
        const auto text = normalize_text(it->second[r]);
        if (!wanted.count(text)) continue;
        seen.insert(text);
        if (mode == MatchMode::Any || seen.size() == wanted.size()) hit_rank = r + 1;
      }
    }
    for (auto& s : report.top_k) {
      if (identified) ++s.identified;
      if (!wanted.empty()) ++s.annotated;
      if (hit_rank != 0 && hit_rank <= s.k) ++s.correct;
    }
  }

  for (auto& s : report.top_k) {
    s.precision = s.identified ? static_cast<double>(s.correct) / static_cast<double>(s.identified) : 0.0;
    s.recall = s.annotated ? static_cast<double>(s.correct) / static_cast<double>(s.annotated) : 0.0;
    s.f1 = f1(s.precision, s.recall);
  }
  return report;
}

}  // namespace sebert
