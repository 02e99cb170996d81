#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace slantkit {

enum class Party { kDemocratic, kRepublican };

std::string_view to_string(Party party);
// Accepts "Democratic"/"Republican" (any case) and the one-letter forms D/R.
std::optional<Party> parse_party(std::string_view text);

struct Document {
  std::string id;
  std::string text;
  std::string source;
  std::optional<Party> party;
  std::optional<int> year;

  friend bool operator==(const Document&, const Document&) = default;
};

// Ordered pair of adjacent tokens. (gun, violence) and (violence, gun) differ.
struct Bigram {
  std::string first;
  std::string second;

  // "first second", the form used in every file format.
  std::string str() const { return first + ' ' + second; }
  static Bigram parse(std::string_view text);

  friend auto operator<=>(const Bigram&, const Bigram&) = default;
  friend bool operator==(const Bigram&, const Bigram&) = default;
};

struct BigramHash {
  std::size_t operator()(const Bigram& b) const noexcept;
};

using Sentence = std::vector<std::string>;

// Tokens are maximal runs of Unicode alphanumerics, lowercased. Sentences end
// at '.', '!', '?' and newline. Bytes that are not valid UTF-8 act as separators.
std::vector<Sentence> tokenize(std::string_view text);

// Words removed before bigrams are formed: stop words plus domain-overused terms.
class StopWords {
 public:
  StopWords() = default;
  StopWords(std::initializer_list<std::string> words) : words_(words) {}

  // One token per line; '#' starts a comment; blank lines ignored. Entries
  // are lowercased on load. Multiple files may be merged.
  static StopWords load(std::span<const std::filesystem::path> paths);
  static StopWords load(const std::filesystem::path& path);

  void insert(std::string word) { words_.insert(std::move(word)); }
  bool contains(std::string_view word) const;
  std::size_t size() const noexcept { return words_.size(); }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::unordered_set<std::string, Hash, std::equal_to<>> words_;
};

std::vector<Bigram> extract_bigrams(std::span<const Sentence> sentences, const StopWords& stopwords);

// Bigram -> occurrence count. Zero counts are never stored and total() always
// equals the sum of all counts.
class BigramCountTable {
 public:
  using Map = std::unordered_map<Bigram, std::uint64_t, BigramHash>;

  void add(const Bigram& bigram, std::uint64_t n = 1);
  void add(Bigram&& bigram, std::uint64_t n = 1);
  void merge(const BigramCountTable& other);

  std::uint64_t count(const Bigram& bigram) const;
  std::uint64_t total() const noexcept { return total_; }
  std::size_t size() const noexcept { return counts_.size(); }
  bool empty() const noexcept { return counts_.empty(); }

  const Map& counts() const noexcept { return counts_; }
  // Entries sorted by bigram; the canonical order for output and comparison.
  std::vector<std::pair<Bigram, std::uint64_t>> sorted() const;

  friend bool operator==(const BigramCountTable& a, const BigramCountTable& b) {
    return a.total_ == b.total_ && a.counts_ == b.counts_;
  }

 private:
  Map counts_;
  std::uint64_t total_ = 0;
};

BigramCountTable merge_counts(const BigramCountTable& a, const BigramCountTable& b);

// Adds the bigrams of one document to `table`.
void count_document(const Document& doc, const StopWords& stopwords, BigramCountTable& table);

BigramCountTable count_bigrams(std::span<const Document> docs, const StopWords& stopwords);

// Splits `docs` into `shards` contiguous slices counted on separate threads,
// then merges. The result equals count_bigrams(docs, stopwords).
BigramCountTable count_bigrams_sharded(std::span<const Document> docs, const StopWords& stopwords,
                                       std::size_t shards);

class DocumentReader;

// Streams a JSON Lines corpus into `table` without holding all documents.
// Malformed records raise ParseError naming the line.
BigramCountTable count_bigrams(DocumentReader& reader, const StopWords& stopwords);

// Reads a corpus file in JSON Lines form, one document per line:
//   {"id": "...", "text": "...", "source": "...", "party": "Democratic", "year": 2014}
// party and year are optional. Blank lines are skipped.
class DocumentReader {
 public:
  explicit DocumentReader(const std::filesystem::path& path);

  // Returns false at end of file.
  bool next(Document& doc);
  std::size_t line() const noexcept { return line_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::string buffer_;
  std::size_t line_ = 0;
  std::unordered_set<std::string> seen_ids_;
};

// Reads every document of a file. Enforces id uniqueness within the file.
std::vector<Document> ingest_jsonl(const std::filesystem::path& path);

Document parse_document_line(std::string_view line, const std::string& source_name, std::size_t line_no);
std::string document_to_json(const Document& doc);
void write_jsonl(const std::filesystem::path& path, std::span<const Document> docs);

}  // namespace slantkit
