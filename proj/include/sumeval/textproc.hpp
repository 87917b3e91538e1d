#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

// Deterministic text primitives shared by every metric.
//
// Tokens are maximal runs of ASCII letters/digits and non-ASCII (UTF-8) bytes;
// everything else separates tokens, so "RIBS-based" gives [ribs, based].
// ASCII letters are lowercased, nothing is stemmed.
namespace sumeval::textproc {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the last byte
  bool operator==(const Span&) const = default;
};

struct TokenSeq {
  std::vector<std::string> tokens;
  std::vector<Span> spans;  // byte ranges into the source text

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  /// Tokens joined with single spaces.
  std::string joined() const;
};

/// Builds a TokenSeq from already-normalized tokens (spans laid out as in joined()).
TokenSeq make_token_seq(std::vector<std::string> tokens);

TokenSeq tokenize(std::string_view text);

struct Sentence {
  std::string text;
  TokenSeq tokens;  // spans relative to the whole input, not to `text`
};

struct SentenceSeq {
  std::vector<Sentence> sentences;

  std::size_t size() const noexcept { return sentences.size(); }
  bool empty() const noexcept { return sentences.empty(); }
  std::size_t token_count() const;
};

/// Splits after '.', '!' or '?' when followed by whitespace or end of text.
/// Abbreviations are not recognised ("e.g. this" splits after "e.g.").
/// Text without a terminator is one sentence; segments without tokens are dropped.
SentenceSeq split_sentences(std::string_view text);

/// Vowel groups (a, e, i, o, u, y) with a silent trailing 'e' removed unless the
/// word ends in consonant + "le". Never less than 1.
int count_syllables(std::string_view word);

using NgramCounts = std::unordered_map<std::string, std::size_t>;

/// Contiguous n-token windows with multiplicity; keys join tokens with '\x1f'.
/// Throws InvalidArgument when n == 0.
NgramCounts ngrams(const std::vector<std::string>& tokens, std::size_t n);
inline NgramCounts ngrams(const TokenSeq& seq, std::size_t n) { return ngrams(seq.tokens, n); }

/// Familiar-word list for the difficult-word proportion. Any token not in the
/// list counts as difficult. Entries are normalized with tokenize(), so
/// "don't" contributes "don" and "t".
class FamiliarWords {
 public:
  FamiliarWords() = default;
  explicit FamiliarWords(const std::vector<std::string>& words);

  /// The bundled Dale-Chall style list (about 2,900 entries).
  static const FamiliarWords& bundled();
  /// One word per line.
  static FamiliarWords from_file(const std::filesystem::path& path);
  static FamiliarWords from_text(std::string_view text);

  bool contains(std::string_view token) const;
  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

struct ReadabilityStats {
  double asl = 0.0;  // words per sentence
  double asw = 0.0;  // syllables per word
  double pdw = 0.0;  // difficult words / words, in [0, 1]
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t syllables = 0;
  std::size_t difficult_words = 0;
};

/// Throws EmptyText when the text has no tokens.
ReadabilityStats readability_stats(std::string_view text, const FamiliarWords& familiar);

}  // namespace sumeval::textproc
