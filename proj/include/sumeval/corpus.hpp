#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sumeval::corpus {

/// Default separator placed between abstract and claims when a document is
/// flattened into model input.
inline constexpr std::string_view kDefaultJoiner = "\n\n";

struct Document {
  std::string id;
  std::string title;
  std::string abstract;
  std::string claims;

  /// Abstract and claims joined by `joiner`.
  std::string source_text(std::string_view joiner = kDefaultJoiner) const;
  /// Whitespace-split token count over abstract + claims.
  std::size_t word_count() const;

  bool operator==(const Document&) const = default;
};

class Corpus {
 public:
  Corpus() = default;
  /// Validates ids and texts; throws DuplicateId / EmptyText.
  Corpus(std::vector<Document> documents, std::string source_uri);

  const std::vector<Document>& documents() const noexcept { return documents_; }
  const std::string& source_uri() const noexcept { return source_uri_; }
  std::size_t size() const noexcept { return documents_.size(); }
  bool empty() const noexcept { return documents_.empty(); }

  /// nullptr when absent.
  const Document* find(std::string_view id) const;

  /// SHA-256 over the canonical serialization; independent of source_uri.
  std::string content_hash() const;

  auto begin() const { return documents_.begin(); }
  auto end() const { return documents_.end(); }

 private:
  std::vector<Document> documents_;
  std::string source_uri_;
};

struct SampleSpec {
  std::size_t size = 30;
  std::uint64_t seed = 0;
};

/// Line-delimited JSON objects with string fields id, title, abstract, claims.
/// All-or-nothing: the first bad line aborts the load (line numbers are 1-based).
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::string_view content, std::string source_uri = {});

std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Draws spec.size documents without replacement using a seeded partial
/// Fisher-Yates shuffle over mt19937_64 (bounded draws by rejection, so the
/// result is identical on every platform). Returned documents keep corpus order.
Corpus sample(const Corpus& corpus, const SampleSpec& spec);

/// Contiguous bins of `bin_width` words from 0 up to the bin holding the
/// longest document. Throws InvalidArgument for bin_width == 0.
std::vector<std::pair<std::size_t, std::size_t>> length_histogram(const Corpus& corpus,
                                                                   std::size_t bin_width);

std::size_t whitespace_word_count(std::string_view text);

}  // namespace sumeval::corpus
