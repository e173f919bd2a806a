#include "sebert/data.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "sebert/errors.hpp"
#include "sebert/rng.hpp"
#include "sebert/utf8.hpp"

namespace sebert {

namespace {

bool is_space(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

// Cc controls and the Cf format characters that show up in scraped news.
bool is_dropped(char32_t c) {
  if (c < 0x20 || (c >= 0x7F && c <= 0x9F)) return true;
  if (c == 0xAD || c == 0x61C || c == 0x180E || c == 0xFEFF) return true;
  if (c >= 0x200B && c <= 0x200F) return true;
  if (c >= 0x202A && c <= 0x202E) return true;
  if (c >= 0x2060 && c <= 0x206F) return true;
  if (c >= 0xFFF9 && c <= 0xFFFB) return true;
  return false;
}

std::u32string clean_codepoints(std::string_view raw) {
  const std::u32string in = utf8::decode(raw);
  std::u32string out;
  out.reserve(in.size());
  bool pending_space = false;
  for (char32_t c : in) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (is_dropped(c)) continue;
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string clean_text(std::string_view raw) {
  std::string out = normalize_text(raw);
  if (out.empty()) throw EmptyTextError();
  return out;
}

std::string normalize_text(std::string_view raw) { return utf8::encode(clean_codepoints(raw)); }

// ---------------------------------------------------------------- vocabulary

Vocabulary::Vocabulary(std::vector<char32_t> symbols) : symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const auto [it, inserted] = index_.emplace(symbols_[i], static_cast<int>(i) + kReserved);
    if (!inserted) throw DataError("duplicate vocabulary entry '" + utf8::encode(symbols_[i]) + "'");
  }
}

int Vocabulary::id(char32_t ch) const {
  const auto it = index_.find(ch);
  return it == index_.end() ? kUnk : it->second;
}

std::string Vocabulary::label(int id) const {
  switch (id) {
    case kPad: return "[PAD]";
    case kUnk: return "[UNK]";
    case kCls: return "[CLS]";
    case kSep: return "[SEP]";
    default: break;
  }
  if (id < kReserved || static_cast<std::size_t>(id) >= size())
    throw IndexError("vocabulary id " + std::to_string(id) + " out of range");
  return utf8::encode(symbols_[static_cast<std::size_t>(id - kReserved)]);
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  for (char32_t c : symbols_) out << utf8::encode(c) << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read vocabulary " + path.string());
  std::vector<char32_t> symbols;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::u32string cps = utf8::decode(line);
    if (cps.size() != 1) throw ParseError(lineno, "vocabulary line must hold exactly one character");
    symbols.push_back(cps[0]);
  }
  return Vocabulary(std::move(symbols));
}

Vocabulary build_vocab(std::span<const RawExample> corpus) {
  std::set<char32_t> chars;
  auto add = [&](const std::string& s) {
    for (char32_t c : clean_codepoints(s)) chars.insert(c);
  };
  for (const auto& ex : corpus) {
    add(ex.text);
    add(ex.event_type);
    for (const auto& e : ex.entities) add(e);
  }
  return Vocabulary(std::vector<char32_t>(chars.begin(), chars.end()));
}

// ---------------------------------------------------------------- encoding

std::string TokenizedInput::substring(std::size_t start, std::size_t end) const {
  if (start < text_span.first || end > text_span.last || start > end)
    throw IndexError("span (" + std::to_string(start) + ", " + std::to_string(end) + ") outside text region");
  return utf8::encode(std::u32string_view(text).substr(start - text_span.first, end - start + 1));
}

TokenizedInput encode_example(const RawExample& ex, const Vocabulary& vocab, std::size_t max_len) {
  const std::u32string text = clean_codepoints(ex.text);
  const std::u32string type = clean_codepoints(ex.event_type);
  if (text.empty() || type.empty()) throw EmptyTextError();
  if (max_len < type.size() + 4)
    throw ContractError("max_len " + std::to_string(max_len) + " leaves no room for text next to an event type of " +
                        std::to_string(type.size()) + " characters");

  const std::size_t keep = std::min(text.size(), max_len - type.size() - 3);
  TokenizedInput out;
  out.id = ex.id;
  out.text = text.substr(0, keep);
  out.text_span = {1, keep};

  out.token_ids.push_back(Vocabulary::kCls);
  for (char32_t c : out.text) out.token_ids.push_back(vocab.id(c));
  out.token_ids.push_back(Vocabulary::kSep);
  out.segment_ids.assign(out.token_ids.size(), 0);
  for (char32_t c : type) out.token_ids.push_back(vocab.id(c));
  out.token_ids.push_back(Vocabulary::kSep);
  out.segment_ids.resize(out.token_ids.size(), 1);
  out.attention_mask.assign(out.token_ids.size(), true);

  if (ex.has_gold()) {
    const std::u32string entity = clean_codepoints(ex.entities.front());
    const auto pos = entity.empty() ? std::u32string::npos : out.text.find(entity);
    if (pos == std::u32string::npos) throw GoldNotFoundError(ex.id);
    out.gold = SpanRange{pos + 1, pos + entity.size()};
  }
  return out;
}

EncodedCorpus encode_corpus(std::span<const RawExample> corpus, const Vocabulary& vocab, std::size_t max_len) {
  EncodedCorpus out;
  out.items.reserve(corpus.size());
  for (const auto& ex : corpus) {
    try {
      out.items.push_back(encode_example(ex, vocab, max_len));
    } catch (const GoldNotFoundError& e) {
      out.skipped.push_back(e.example_id());
    }
  }
  return out;
}

std::vector<RawExample> flatten_entities(std::span<const RawExample> corpus) {
  std::vector<RawExample> out;
  for (const auto& ex : corpus) {
    if (ex.entities.size() <= 1) {
      out.push_back(ex);
      continue;
    }
    for (const auto& e : ex.entities) {
      RawExample one = ex;
      one.entities = {e};
      out.push_back(std::move(one));
    }
  }
  return out;
}

// ---------------------------------------------------------------- batching

std::span<const int> Batch::ids_row(std::size_t b) const {
  return std::span<const int>(token_ids).subspan(b * length, length);
}

std::span<const int> Batch::segments_row(std::size_t b) const {
  return std::span<const int>(segment_ids).subspan(b * length, length);
}

std::vector<bool> Batch::mask_row(std::size_t b) const {
  return std::vector<bool>(mask.begin() + static_cast<std::ptrdiff_t>(b * length),
                           mask.begin() + static_cast<std::ptrdiff_t>((b + 1) * length));
}

Batch make_batch(std::span<const TokenizedInput* const> items) {
  if (items.empty()) throw ContractError("cannot batch zero items");
  Batch batch;
  batch.size = items.size();
  for (const auto* it : items) batch.length = std::max(batch.length, it->length());
  batch.token_ids.assign(batch.size * batch.length, Vocabulary::kPad);
  batch.segment_ids.assign(batch.size * batch.length, 0);
  batch.mask.assign(batch.size * batch.length, false);
  for (std::size_t b = 0; b < batch.size; ++b) {
    const auto& it = *items[b];
    std::copy(it.token_ids.begin(), it.token_ids.end(), batch.token_ids.begin() + b * batch.length);
    std::copy(it.segment_ids.begin(), it.segment_ids.end(), batch.segment_ids.begin() + b * batch.length);
    for (std::size_t t = 0; t < it.length(); ++t) batch.mask[b * batch.length + t] = it.attention_mask[t];
    batch.text_spans.push_back(it.text_span);
    batch.gold.push_back(it.gold);
    batch.items.push_back(&it);
  }
  return batch;
}

Batch make_batch(std::span<const TokenizedInput> items) {
  std::vector<const TokenizedInput*> ptrs;
  ptrs.reserve(items.size());
  for (const auto& it : items) ptrs.push_back(&it);
  return make_batch(std::span<const TokenizedInput* const>(ptrs));
}

// ---------------------------------------------------------------- JSONL

std::vector<RawExample> read_jsonl(std::istream& in) {
  std::vector<RawExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, e.what());
    }
    if (!j.is_object()) throw ParseError(lineno, "record is not a JSON object");
    RawExample ex;
    try {
      ex.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      ex.text = j.at("text").get<std::string>();
      ex.event_type = j.at("event_type").get<std::string>();
      if (j.contains("entities") && !j["entities"].is_null()) {
        ex.entities = j["entities"].get<std::vector<std::string>>();
      } else if (j.contains("entity") && !j["entity"].is_null()) {
        ex.entities = {j["entity"].get<std::string>()};
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    }
    try {
      if (normalize_text(ex.text).empty() || normalize_text(ex.event_type).empty())
        throw ParseError(lineno, "text or event_type is empty after cleaning");
    } catch (const ParseError&) {
      throw;
    } catch (const DataError& e) {
      throw ParseError(lineno, e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<RawExample> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_jsonl(in);
}

void write_jsonl(std::ostream& out, std::span<const RawExample> corpus) {
  for (const auto& ex : corpus) {
    nlohmann::ordered_json j;
    j["id"] = ex.id;
    j["text"] = ex.text;
    j["event_type"] = ex.event_type;
    if (ex.entities.size() == 1) j["entity"] = ex.entities.front();
    if (ex.entities.size() > 1) {
      j["entity"] = ex.entities.front();
      j["entities"] = ex.entities;
    }
    out << j.dump() << '\n';
  }
}

void save_jsonl(const std::filesystem::path& path, std::span<const RawExample> corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_jsonl(out, corpus);
}

// ---------------------------------------------------------------- synthetic corpus

namespace {

struct EventKind {
  std::u32string type;
  std::vector<std::u32string> phrases;
};

const std::vector<EventKind>& event_kinds() {
  static const std::vector<EventKind> kinds = {
      {U"破产清算", {U"宣布破产", U"申请破产清算", U"进入破产程序"}},
      {U"股权质押", {U"股权遭质押", U"质押全部股份"}},
      {U"高管减持", {U"高管减持股份", U"遭高管减持"}},
      {U"重组失败", {U"重组失败", U"终止资产重组"}},
      {U"涉嫌违法", {U"涉嫌违法", U"被立案调查"}},
      {U"业绩下滑", {U"业绩下滑", U"净利润大幅下降"}},
      {U"信批违规", {U"信息披露违规", U"未及时披露信息"}},
      {U"资金紧张", {U"资金链断裂", U"资金紧张"}},
  };
  return kinds;
}

const std::vector<std::u32string> kNeutral = {U"发布年度报告", U"召开股东大会", U"签署合作协议", U"股价小幅上涨",
                                              U"获得银行授信"};
const std::vector<std::u32string> kOpeners = {U"", U"据报道，", U"记者获悉，", U"今日消息，", U"公告显示，"};
const std::vector<std::u32string> kSuffixes = {U"公司", U"集团", U"股份", U"银行", U"科技", U"控股"};
const std::u32string kNameChars = U"华泰中信安达恒瑞金鑫海通广发国元长城兴业东方明阳天润新宏远博瑞康盛凯丰永鼎汇";

std::u32string random_core(Rng& rng, std::size_t len) {
  std::u32string s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(kNameChars[rng.below(kNameChars.size())]);
  return s;
}

std::u32string random_name(Rng& rng) {
  return random_core(rng, 2 + rng.below(2)) + kSuffixes[rng.below(kSuffixes.size())];
}

template <typename V>
const auto& pick(Rng& rng, const V& v) {
  return v[rng.below(v.size())];
}

bool overlaps_any(const std::u32string& name, const std::vector<std::u32string>& others) {
  for (const auto& o : others)
    if (o.find(name) != std::u32string::npos || name.find(o) != std::u32string::npos) return true;
  return false;
}

}  // namespace

std::vector<RawExample> generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  if (config.min_candidates < 2 || config.max_candidates < config.min_candidates)
    throw ContractError("synthetic corpus needs 2 <= min_candidates <= max_candidates");
  Rng rng(seed);
  const auto& kinds = event_kinds();
  std::vector<RawExample> out;
  out.reserve(config.count);
  while (out.size() < config.count) {
    const std::size_t kind = rng.below(kinds.size());
    const bool multi = rng.bernoulli(config.multi_fraction);
    const std::size_t n_gold = multi ? 2 + rng.below(2) : 1;
    std::size_t n_cand = config.min_candidates + rng.below(config.max_candidates - config.min_candidates + 1);
    n_cand = std::max(n_cand, n_gold + 1);

    std::vector<std::u32string> names;
    while (names.size() < n_cand) {
      std::u32string name = random_name(rng);
      if (!overlaps_any(name, names)) names.push_back(std::move(name));
    }

    struct Clause {
      std::u32string text;
      bool gold;
    };
    std::vector<Clause> clauses;
    for (std::size_t c = 0; c < n_cand; ++c) {
      const bool gold = c < n_gold;
      std::u32string phrase;
      if (gold) {
        phrase = pick(rng, kinds[kind].phrases);
      } else if (rng.bernoulli(0.6)) {
        std::size_t other = rng.below(kinds.size() - 1);
        if (other >= kind) ++other;
        phrase = pick(rng, kinds[other].phrases);
      } else {
        phrase = pick(rng, kNeutral);
      }
      std::u32string name = names[c];
      if (rng.bernoulli(config.ambiguous_rate)) name = random_core(rng, 1) + name;
      std::u32string text = rng.bernoulli(config.inverted_rate) ? phrase + U"的" + name : name + phrase;
      clauses.push_back({std::move(text), gold});
    }
    rng.shuffle(clauses);

    std::u32string text = pick(rng, kOpeners);
    for (std::size_t c = 0; c < clauses.size(); ++c) {
      if (c) text += U"，";
      text += clauses[c].text;
    }
    text += U"。";

    // Gold names must be located at their own clause by first occurrence.
    std::vector<std::string> entities;
    bool ok = true;
    for (std::size_t c = 0; c < n_gold && ok; ++c) {
      const auto first = text.find(names[c]);
      ok = first != std::u32string::npos && text.find(names[c], first + 1) == std::u32string::npos;
      entities.push_back(utf8::encode(names[c]));
    }
    if (!ok) continue;

    RawExample ex;
    ex.id = "syn-" + std::to_string(seed) + "-" + std::to_string(out.size());
    ex.text = utf8::encode(text);
    ex.event_type = utf8::encode(kinds[kind].type);
    ex.entities = std::move(entities);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace sebert
