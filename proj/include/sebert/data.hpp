#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sebert {

/// One (text, event type, entity) record as read from disk.
struct RawExample {
  std::string id;
  std::string text;
  std::string event_type;
  /// Gold entities; empty for prediction-only data. Training uses the first.
  std::vector<std::string> entities;

  bool has_gold() const noexcept { return !entities.empty(); }
};

/// Removes control and zero-width/format characters, collapses whitespace
/// runs to one space and trims. Throws EmptyTextError if nothing is left.
std::string clean_text(std::string_view raw);
/// Same normalization, but an empty result is returned instead of thrown.
std::string normalize_text(std::string_view raw);

/// Character vocabulary. Ids 0..3 are PAD, UNK, CLS, SEP.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kReserved = 4;

  Vocabulary() = default;
  explicit Vocabulary(std::vector<char32_t> symbols);

  /// Id of a character; UNK when absent.
  int id(char32_t ch) const;
  bool contains(char32_t ch) const { return index_.count(ch) != 0; }
  std::size_t size() const noexcept { return kReserved + symbols_.size(); }
  /// Non-reserved characters in id order (symbol i has id i + kReserved).
  const std::vector<char32_t>& symbols() const noexcept { return symbols_; }
  /// Label for an id ("[PAD]", "[CLS]", ... or the character).
  std::string label(int id) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<char32_t> symbols_;
  std::unordered_map<char32_t, int> index_;
};

/// Every character of cleaned text, event type and entities, in code point order.
Vocabulary build_vocab(std::span<const RawExample> corpus);

/// Inclusive position range.
struct SpanRange {
  std::size_t first = 0;
  std::size_t last = 0;
  bool operator==(const SpanRange&) const = default;
};

/// CLS x1..xn' SEP t1..tm SEP, without padding.
struct TokenizedInput {
  std::string id;
  std::vector<int> token_ids;
  std::vector<int> segment_ids;
  std::vector<bool> attention_mask;
  SpanRange text_span;
  std::optional<SpanRange> gold;
  /// Cleaned, truncated text region; text[i] sits at position text_span.first + i.
  std::u32string text;

  std::size_t length() const noexcept { return token_ids.size(); }
  /// Substring of the text region between two layout positions (inclusive).
  std::string substring(std::size_t start, std::size_t end) const;
};

/// Lays out one example. Text is cut from the right so the total stays within
/// max_len; the event type is never cut. The gold span is the first
/// occurrence of the first entity inside the kept text.
TokenizedInput encode_example(const RawExample& ex, const Vocabulary& vocab, std::size_t max_len);

struct EncodedCorpus {
  std::vector<TokenizedInput> items;
  /// Ids of examples dropped because their gold did not survive truncation.
  std::vector<std::string> skipped;
};

/// Encodes a corpus, skipping (and listing) examples whose gold vanished.
EncodedCorpus encode_corpus(std::span<const RawExample> corpus, const Vocabulary& vocab, std::size_t max_len);

/// One record per gold entity; records without gold are kept as they are.
std::vector<RawExample> flatten_entities(std::span<const RawExample> corpus);

/// Items padded to the longest member. Arrays are row-major [size x length].
struct Batch {
  std::size_t size = 0;
  std::size_t length = 0;
  std::vector<int> token_ids;
  std::vector<int> segment_ids;
  std::vector<bool> mask;
  std::vector<SpanRange> text_spans;
  std::vector<std::optional<SpanRange>> gold;
  std::vector<const TokenizedInput*> items;

  std::span<const int> ids_row(std::size_t b) const;
  std::span<const int> segments_row(std::size_t b) const;
  std::vector<bool> mask_row(std::size_t b) const;
};

Batch make_batch(std::span<const TokenizedInput> items);
Batch make_batch(std::span<const TokenizedInput* const> items);

/// JSON Lines records {"id", "text", "event_type", "entity"?, "entities"?}.
std::vector<RawExample> read_jsonl(std::istream& in);
std::vector<RawExample> load_jsonl(const std::filesystem::path& path);
void write_jsonl(std::ostream& out, std::span<const RawExample> corpus);
void save_jsonl(const std::filesystem::path& path, std::span<const RawExample> corpus);

struct SynthConfig {
  std::size_t count = 1000;
  /// Share of examples whose gold list has 2-3 entities.
  double multi_fraction = 0.0;
  std::size_t min_candidates = 2;
  std::size_t max_candidates = 4;
  /// Probability that a clause puts the event phrase before the company name.
  double inverted_rate = 0.3;
  /// Probability that a name is glued to a leading modifier drawn from the
  /// same character pool, leaving its left boundary ambiguous.
  double ambiguous_rate = 0.0;
};

/// Finance-news-like corpus: several company names per text, each attached to
/// an event phrase; the gold entity is the name attached to the queried event
/// type. Deterministic in (config, seed).
std::vector<RawExample> generate_synthetic(const SynthConfig& config, std::uint64_t seed);

}  // namespace sebert
