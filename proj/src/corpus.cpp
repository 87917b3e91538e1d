#include "sumeval/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <optional>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "sumeval/errors.hpp"
#include "sumeval/hashing.hpp"
#include "sumeval/textproc.hpp"

namespace sumeval::corpus {

using nlohmann::json;

std::size_t whitespace_word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

std::string Document::source_text(std::string_view joiner) const {
  std::string out;
  out.reserve(abstract.size() + joiner.size() + claims.size());
  out.append(abstract).append(joiner).append(claims);
  return out;
}

std::size_t Document::word_count() const {
  return whitespace_word_count(abstract) + whitespace_word_count(claims);
}

namespace {

void validate_text(const Document& doc, std::optional<std::size_t> line) {
  if (textproc::tokenize(doc.abstract).empty())
    throw Error(ErrorCode::EmptyText, "document '" + doc.id + "' has an empty abstract", line);
  if (textproc::tokenize(doc.claims).empty())
    throw Error(ErrorCode::EmptyText, "document '" + doc.id + "' has empty claims", line);
}

}  // namespace

Corpus::Corpus(std::vector<Document> documents, std::string source_uri)
    : documents_(std::move(documents)), source_uri_(std::move(source_uri)) {
  std::unordered_set<std::string> seen;
  for (const auto& doc : documents_) {
    if (!seen.insert(doc.id).second) throw Error(ErrorCode::DuplicateId, doc.id);
    validate_text(doc, std::nullopt);
  }
}

const Document* Corpus::find(std::string_view id) const {
  auto it = std::find_if(documents_.begin(), documents_.end(),
                         [&](const Document& d) { return d.id == id; });
  return it == documents_.end() ? nullptr : &*it;
}

std::string Corpus::content_hash() const { return sha256_hex(serialize_corpus(*this)); }

Corpus parse_corpus(std::string_view content, std::string source_uri) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (nl == content.size()) break;
      continue;
    }

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::MalformedRecord, e.what(), line_no);
    }
    if (!record.is_object()) throw Error(ErrorCode::MalformedRecord, "record is not an object", line_no);

    Document doc;
    for (auto [name, field] : {std::pair{"id", &doc.id}, std::pair{"title", &doc.title},
                               std::pair{"abstract", &doc.abstract}, std::pair{"claims", &doc.claims}}) {
      auto it = record.find(name);
      if (it == record.end())
        throw Error(ErrorCode::MalformedRecord, std::string("missing field '") + name + "'", line_no,
                    ErrorCode::MissingField);
      if (!it->is_string())
        throw Error(ErrorCode::MalformedRecord, std::string("field '") + name + "' is not a string",
                    line_no);
      *field = it->get<std::string>();
    }
    if (doc.id.empty()) throw Error(ErrorCode::MalformedRecord, "empty id", line_no);
    if (!seen.insert(doc.id).second) throw Error(ErrorCode::DuplicateId, doc.id, line_no);
    validate_text(doc, line_no);
    docs.push_back(std::move(doc));
    if (nl == content.size()) break;
  }
  return Corpus(std::move(docs), std::move(source_uri));
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open corpus file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), path.string());
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus) {
    json record = {{"id", doc.id}, {"title", doc.title}, {"abstract", doc.abstract}, {"claims", doc.claims}};
    out += record.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write corpus file " + path.string());
  out << serialize_corpus(corpus);
}

namespace {

// Uniform integer in [0, bound) from raw mt19937_64 output. The standard
// distributions are implementation-defined, so they are avoided here.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

}  // namespace

Corpus sample(const Corpus& corpus, const SampleSpec& spec) {
  if (spec.size == 0) throw Error(ErrorCode::InvalidArgument, "sample size must be positive");
  if (spec.size > corpus.size())
    throw Error(ErrorCode::SampleTooLarge, "requested " + std::to_string(spec.size) + " of " +
                                               std::to_string(corpus.size()) + " documents");
  std::vector<std::size_t> idx(corpus.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = 0; i < spec.size; ++i) {
    const std::size_t j = i + bounded(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(spec.size);
  std::sort(idx.begin(), idx.end());

  std::vector<Document> docs;
  docs.reserve(idx.size());
  for (std::size_t i : idx) docs.push_back(corpus.documents()[i]);
  return Corpus(std::move(docs), corpus.source_uri());
}

std::vector<std::pair<std::size_t, std::size_t>> length_histogram(const Corpus& corpus,
                                                                   std::size_t bin_width) {
  if (bin_width == 0) throw Error(ErrorCode::InvalidArgument, "bin_width must be positive");
  std::size_t max_words = 0;
  std::vector<std::size_t> counts;
  counts.reserve(corpus.size());
  for (const auto& doc : corpus) {
    counts.push_back(doc.word_count());
    max_words = std::max(max_words, counts.back());
  }
  std::vector<std::pair<std::size_t, std::size_t>> bins;
  if (corpus.empty()) return bins;
  const std::size_t n_bins = max_words / bin_width + 1;
  bins.reserve(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) bins.emplace_back(b * bin_width, 0);
  for (std::size_t c : counts) ++bins[c / bin_width].second;
  return bins;
}

}  // namespace sumeval::corpus
