#include "sumeval/textproc.hpp"

#include <fstream>
#include <sstream>

#include "sumeval/assets.hpp"
#include "sumeval/errors.hpp"

namespace sumeval::textproc {

namespace {

constexpr char kNgramSep = '\x1f';

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

void tokenize_into(std::string_view text, std::size_t offset, TokenSeq& out) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::string token;
    while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) {
      token.push_back(lower(text[i]));
      ++i;
    }
    out.tokens.push_back(std::move(token));
    out.spans.push_back({offset + start, offset + i});
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string TokenSeq::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

TokenSeq make_token_seq(std::vector<std::string> tokens) {
  TokenSeq seq;
  std::size_t pos = 0;
  seq.spans.reserve(tokens.size());
  for (const auto& t : tokens) {
    seq.spans.push_back({pos, pos + t.size()});
    pos += t.size() + 1;
  }
  seq.tokens = std::move(tokens);
  return seq;
}

TokenSeq tokenize(std::string_view text) {
  TokenSeq seq;
  tokenize_into(text, 0, seq);
  return seq;
}

std::size_t SentenceSeq::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

SentenceSeq split_sentences(std::string_view text) {
  SentenceSeq out;
  auto emit = [&](std::size_t begin, std::size_t end) {
    Sentence sentence;
    tokenize_into(text.substr(begin, end - begin), begin, sentence.tokens);
    if (sentence.tokens.empty()) return;
    sentence.text = std::string(trim(text.substr(begin, end - begin)));
    out.sentences.push_back(std::move(sentence));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 == text.size() || is_space(static_cast<unsigned char>(text[i + 1]))) {
      emit(start, i + 1);
      start = i + 1;
    }
  }
  if (start < text.size()) emit(start, text.size());
  return out;
}

int count_syllables(std::string_view word) {
  std::string w;
  w.reserve(word.size());
  for (char c : word) w.push_back(lower(c));

  int groups = 0;
  bool prev_vowel = false;
  for (char c : w) {
    const bool v = is_vowel(c);
    if (v && !prev_vowel) ++groups;
    prev_vowel = v;
  }
  const std::size_t n = w.size();
  if (n >= 2 && w[n - 1] == 'e' && !is_vowel(w[n - 2])) {
    const bool consonant_le = n >= 3 && w[n - 2] == 'l' && !is_vowel(w[n - 3]);
    if (!consonant_le) --groups;
  }
  return groups < 1 ? 1 : groups;
}

NgramCounts ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "n-gram order must be >= 1");
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  std::string key;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    key.clear();
    for (std::size_t k = 0; k < n; ++k) {
      if (k) key.push_back(kNgramSep);
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

FamiliarWords::FamiliarWords(const std::vector<std::string>& words) {
  for (const auto& w : words)
    for (auto& t : tokenize(w).tokens) words_.insert(std::move(t));
}

FamiliarWords FamiliarWords::from_text(std::string_view text) {
  FamiliarWords out;
  for (auto& t : tokenize(text).tokens) out.words_.insert(std::move(t));
  return out;
}

const FamiliarWords& FamiliarWords::bundled() {
  static const FamiliarWords words = from_text(assets::familiar_words());
  return words;
}

FamiliarWords FamiliarWords::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open familiar-word list " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

bool FamiliarWords::contains(std::string_view token) const {
  return words_.find(std::string(token)) != words_.end();
}

ReadabilityStats readability_stats(std::string_view text, const FamiliarWords& familiar) {
  const SentenceSeq sentences = split_sentences(text);
  ReadabilityStats stats;
  stats.sentences = sentences.size();
  for (const auto& s : sentences.sentences) {
    for (const auto& tok : s.tokens.tokens) {
      ++stats.words;
      stats.syllables += static_cast<std::size_t>(count_syllables(tok));
      if (!familiar.contains(tok)) ++stats.difficult_words;
    }
  }
  if (stats.words == 0) throw Error(ErrorCode::EmptyText, "text has no words");
  stats.asl = static_cast<double>(stats.words) / static_cast<double>(stats.sentences);
  stats.asw = static_cast<double>(stats.syllables) / static_cast<double>(stats.words);
  stats.pdw = static_cast<double>(stats.difficult_words) / static_cast<double>(stats.words);
  return stats;
}

}  // namespace sumeval::textproc
