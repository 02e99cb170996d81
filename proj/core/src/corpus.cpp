#include "slantkit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <locale.h>
#include <thread>
#include <wctype.h>

#include <json.hpp>

#include "slantkit/error.hpp"
#include "slantkit/text_io.hpp"

namespace slantkit {

namespace {

using json = nlohmann::json;

// glibc's C.UTF-8 locale carries full Unicode ctype tables. If it is missing
// we fall back to ASCII classification.
locale_t unicode_ctype() {
  static const locale_t loc = [] {
    locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
    if (l == static_cast<locale_t>(nullptr)) {
      l = newlocale(LC_CTYPE_MASK, "C.utf8", static_cast<locale_t>(nullptr));
    }
    return l;
  }();
  return loc;
}

bool is_alnum(char32_t cp) {
  if (cp < 0x80) return std::isalnum(static_cast<unsigned char>(cp)) != 0;
  const locale_t loc = unicode_ctype();
  if (loc == static_cast<locale_t>(nullptr)) return false;
  return iswalnum_l(static_cast<wint_t>(cp), loc) != 0;
}

char32_t to_lower(char32_t cp) {
  if (cp < 0x80) return static_cast<char32_t>(std::tolower(static_cast<unsigned char>(cp)));
  const locale_t loc = unicode_ctype();
  if (loc == static_cast<locale_t>(nullptr)) return cp;
  return static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc));
}

// Decodes one code point at `i`, advancing it. Returns U+FFFD (not alnum) for
// malformed sequences and consumes a single byte.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++i;
    return 0xFFFD;
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_sentence_end(char32_t cp) { return cp == '.' || cp == '!' || cp == '?' || cp == '\n'; }

std::string lowercase_ascii(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::string_view to_string(Party party) {
  return party == Party::kDemocratic ? "Democratic" : "Republican";
}

std::optional<Party> parse_party(std::string_view text) {
  const std::string s = lowercase_ascii(std::string(text));
  if (s == "democratic" || s == "democrat" || s == "d") return Party::kDemocratic;
  if (s == "republican" || s == "r") return Party::kRepublican;
  return std::nullopt;
}

Bigram Bigram::parse(std::string_view text) {
  const auto space = text.find(' ');
  if (space == std::string_view::npos || space == 0 || space + 1 >= text.size() ||
      text.find(' ', space + 1) != std::string_view::npos) {
    throw Error(ErrorKind::kParse, "malformed bigram '" + std::string(text) + "'");
  }
  return Bigram{std::string(text.substr(0, space)), std::string(text.substr(space + 1))};
}

std::size_t BigramHash::operator()(const Bigram& b) const noexcept {
  const std::size_t h1 = std::hash<std::string>{}(b.first);
  const std::size_t h2 = std::hash<std::string>{}(b.second);
  return h1 ^ (h2 + 0x9e3779b97f4a7c15ULL + (h1 << 6) + (h1 >> 2));
}

std::vector<Sentence> tokenize(std::string_view text) {
  std::vector<Sentence> sentences;
  Sentence current;
  std::string token;
  auto flush_token = [&] {
    if (!token.empty()) {
      current.push_back(std::move(token));
      token.clear();
    }
  };
  auto flush_sentence = [&] {
    flush_token();
    if (!current.empty()) {
      sentences.push_back(std::move(current));
      current.clear();
    }
  };

  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = decode_utf8(text, i);
    if (is_alnum(cp)) {
      append_utf8(token, to_lower(cp));
    } else if (is_sentence_end(cp)) {
      flush_sentence();
    } else {
      flush_token();
    }
  }
  flush_sentence();
  return sentences;
}

StopWords StopWords::load(std::span<const std::filesystem::path> paths) {
  StopWords out;
  for (const auto& path : paths) {
    for (auto& line : read_data_lines(path)) {
      // Entries go through the tokenizer so they match what tokenize() emits.
      for (auto& sentence : tokenize(line)) {
        for (auto& tok : sentence) out.words_.insert(std::move(tok));
      }
    }
  }
  return out;
}

StopWords StopWords::load(const std::filesystem::path& path) {
  return load(std::span<const std::filesystem::path>(&path, 1));
}

bool StopWords::contains(std::string_view word) const { return words_.find(word) != words_.end(); }

std::vector<Bigram> extract_bigrams(std::span<const Sentence> sentences, const StopWords& stopwords) {
  std::vector<Bigram> out;
  for (const auto& sentence : sentences) {
    const std::string* prev = nullptr;
    for (const auto& tok : sentence) {
      if (stopwords.contains(tok)) continue;
      if (prev != nullptr) out.push_back(Bigram{*prev, tok});
      prev = &tok;
    }
  }
  return out;
}

void BigramCountTable::add(const Bigram& bigram, std::uint64_t n) {
  if (n == 0) return;
  counts_[bigram] += n;
  total_ += n;
}

void BigramCountTable::add(Bigram&& bigram, std::uint64_t n) {
  if (n == 0) return;
  counts_[std::move(bigram)] += n;
  total_ += n;
}

void BigramCountTable::merge(const BigramCountTable& other) {
  for (const auto& [bigram, n] : other.counts_) counts_[bigram] += n;
  total_ += other.total_;
}

std::uint64_t BigramCountTable::count(const Bigram& bigram) const {
  const auto it = counts_.find(bigram);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<std::pair<Bigram, std::uint64_t>> BigramCountTable::sorted() const {
  std::vector<std::pair<Bigram, std::uint64_t>> out(counts_.begin(), counts_.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

BigramCountTable merge_counts(const BigramCountTable& a, const BigramCountTable& b) {
  BigramCountTable out = a;
  out.merge(b);
  return out;
}

void count_document(const Document& doc, const StopWords& stopwords, BigramCountTable& table) {
  const auto sentences = tokenize(doc.text);
  for (auto& bigram : extract_bigrams(sentences, stopwords)) table.add(std::move(bigram));
}

BigramCountTable count_bigrams(std::span<const Document> docs, const StopWords& stopwords) {
  BigramCountTable table;
  for (const auto& doc : docs) count_document(doc, stopwords, table);
  return table;
}

BigramCountTable count_bigrams_sharded(std::span<const Document> docs, const StopWords& stopwords,
                                       std::size_t shards) {
  shards = std::max<std::size_t>(1, std::min(shards, docs.size()));
  if (shards <= 1) return count_bigrams(docs, stopwords);

  std::vector<BigramCountTable> partial(shards);
  {
    std::vector<std::jthread> workers;
    workers.reserve(shards);
    const std::size_t base = docs.size() / shards;
    const std::size_t extra = docs.size() % shards;
    std::size_t begin = 0;
    for (std::size_t s = 0; s < shards; ++s) {
      const std::size_t len = base + (s < extra ? 1 : 0);
      workers.emplace_back([&, s, slice = docs.subspan(begin, len)] {
        partial[s] = count_bigrams(slice, stopwords);
      });
      begin += len;
    }
  }
  BigramCountTable out = std::move(partial.front());
  for (std::size_t s = 1; s < shards; ++s) out.merge(partial[s]);
  return out;
}

BigramCountTable count_bigrams(DocumentReader& reader, const StopWords& stopwords) {
  BigramCountTable table;
  Document doc;
  while (reader.next(doc)) count_document(doc, stopwords, table);
  return table;
}

Document parse_document_line(std::string_view line, const std::string& source_name,
                             std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(source_name, line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(source_name, line_no, "record is not a JSON object");

  auto required_string = [&](const char* key) -> std::string {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
      throw ParseError(source_name, line_no, std::string("missing required field \"") + key + "\"");
    }
    if (!it->is_string()) {
      throw ParseError(source_name, line_no, std::string("field \"") + key + "\" must be a string");
    }
    return it->get<std::string>();
  };

  Document doc;
  doc.id = required_string("id");
  if (doc.id.empty()) throw ParseError(source_name, line_no, "field \"id\" is empty");
  doc.text = required_string("text");
  doc.source = required_string("source");
  if (const auto it = j.find("party"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError(source_name, line_no, "field \"party\" must be a string");
    doc.party = parse_party(it->get<std::string>());
    if (!doc.party) {
      throw ParseError(source_name, line_no, "unknown party '" + it->get<std::string>() + "'");
    }
  }
  if (const auto it = j.find("year"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ParseError(source_name, line_no, "field \"year\" must be an integer");
    doc.year = it->get<int>();
  }
  return doc;
}

std::string document_to_json(const Document& doc) {
  json j = {{"id", doc.id}, {"text", doc.text}, {"source", doc.source}};
  if (doc.party) j["party"] = std::string(to_string(*doc.party));
  if (doc.year) j["year"] = *doc.year;
  return j.dump();
}

DocumentReader::DocumentReader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) throw Error(ErrorKind::kIo, "cannot open corpus file " + path.string());
}

bool DocumentReader::next(Document& doc) {
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
    if (buffer_.find_first_not_of(" \t") == std::string::npos) continue;
    doc = parse_document_line(buffer_, path_.string(), line_);
    if (!seen_ids_.insert(doc.id).second) {
      throw ParseError(path_.string(), line_, "duplicate document id '" + doc.id + "'");
    }
    return true;
  }
  return false;
}

std::vector<Document> ingest_jsonl(const std::filesystem::path& path) {
  DocumentReader reader(path);
  std::vector<Document> docs;
  Document doc;
  while (reader.next(doc)) docs.push_back(std::move(doc));
  return docs;
}

void write_jsonl(const std::filesystem::path& path, std::span<const Document> docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  for (const auto& doc : docs) out << document_to_json(doc) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace slantkit
