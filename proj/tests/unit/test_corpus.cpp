#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "oracles/oracles.hpp"
#include "slantkit/corpus.hpp"
#include "slantkit/error.hpp"
#include "slantkit/random.hpp"

using namespace slantkit;

namespace {

std::vector<std::string> words(const Sentence& s) { return s; }

std::vector<Document> random_docs(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> vocab = {"tax",   "relief", "the",    "care",   "health", "border",
                                                 "wall",  "of",     "clean",  "energy", "and",    "jobs",
                                                 "rights", "vote",  "budget", "a",      "market", "free"};
  Rng rng(seed);
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    const auto len = 5 + rng.uniform_index(30);
    for (std::size_t k = 0; k < len; ++k) {
      text += vocab[rng.uniform_index(vocab.size())];
      const auto p = rng.uniform_index(10);
      text += p == 0 ? ". " : (p == 1 ? ", " : " ");
    }
    docs.push_back({"d" + std::to_string(i), text, "s", std::nullopt, std::nullopt});
  }
  return docs;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("tokenize lowercases and splits sentences") {
    const auto s = tokenize("Hello, World! Tax relief now.  ");
    REQUIRE(s.size() == 2);
    CHECK(words(s[0]) == std::vector<std::string>{"hello", "world"});
    CHECK(words(s[1]) == std::vector<std::string>{"tax", "relief", "now"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("... !!").empty());
  }

  TEST_CASE("tokenize handles unicode letters") {
    const auto s = tokenize("Ünïcode CAFÉ déjà-vu");
    REQUIRE(s.size() == 1);
    CHECK(words(s[0]) == std::vector<std::string>{"ünïcode", "café", "déjà", "vu"});
  }

  TEST_CASE("invalid utf-8 bytes separate tokens") {
    const std::string text = std::string("ab") + char(0xff) + "cd";
    const auto s = tokenize(text);
    REQUIRE(s.size() == 1);
    CHECK(words(s[0]) == std::vector<std::string>{"ab", "cd"});
  }

  TEST_CASE("stop words are removed before pairing") {
    StopWords stop{"the", "of"};
    const auto bigrams = extract_bigrams(tokenize("the cost of health care."), stop);
    REQUIRE(bigrams.size() == 2);
    CHECK(bigrams[0].str() == "cost health");
    CHECK(bigrams[1].str() == "health care");
  }

  TEST_CASE("bigrams never span sentences") {
    StopWords stop;
    const auto bigrams = extract_bigrams(tokenize("tax cuts. border wall"), stop);
    REQUIRE(bigrams.size() == 2);
    CHECK(bigrams[0].str() == "tax cuts");
    CHECK(bigrams[1].str() == "border wall");
    CHECK(extract_bigrams(tokenize("single"), stop).empty());
  }

  TEST_CASE("bigram parse and str") {
    CHECK(Bigram::parse("tax relief") == Bigram{"tax", "relief"});
    CHECK_THROWS_AS(Bigram::parse("tax"), Error);
    CHECK_THROWS_AS(Bigram::parse("a b c"), Error);
    CHECK_THROWS_AS(Bigram::parse(" a"), Error);
  }

  TEST_CASE("party parsing") {
    CHECK(parse_party("Democratic") == Party::kDemocratic);
    CHECK(parse_party("R") == Party::kRepublican);
    CHECK_FALSE(parse_party("Green").has_value());
  }

  TEST_CASE("count table totals and merge") {
    BigramCountTable a, b;
    a.add({"x", "y"}, 2);
    b.add({"x", "y"});
    b.add({"y", "z"}, 3);
    const auto m = merge_counts(a, b);
    CHECK(m.count({"x", "y"}) == 3);
    CHECK(m.count({"y", "z"}) == 3);
    CHECK(m.count({"q", "q"}) == 0);
    CHECK(m.total() == 6);
    CHECK(m.size() == 2);
    CHECK(merge_counts(a, b) == merge_counts(b, a));
  }

  TEST_CASE("counting matches a naive oracle") {
    const auto docs = random_docs(500, 3);
    const std::set<std::string> stop_set = {"the", "of", "and", "a"};
    StopWords stop;
    for (const auto& w : stop_set) stop.insert(w);
    std::vector<std::string> texts;
    for (const auto& d : docs) texts.push_back(d.text);
    const auto expected = oracle::count_bigrams(texts, stop_set);
    const auto table = count_bigrams(docs, stop);
    CHECK(table.size() == expected.size());
    std::uint64_t total = 0;
    for (const auto& [k, n] : expected) {
      CHECK(table.count({k.first, k.second}) == n);
      total += n;
    }
    CHECK(table.total() == total);
  }

  TEST_CASE("property: merge is associative and commutative over shards") {
    const auto docs = random_docs(300, 9);
    StopWords stop{"the"};
    const auto whole = count_bigrams(docs, stop);
    for (std::size_t shards : {1u, 2u, 3u, 7u, 16u, 500u}) {
      CHECK(count_bigrams_sharded(docs, stop, shards) == whole);
    }
    // Arbitrary three-way split merged in two different orders.
    std::span<const Document> all(docs);
    const auto a = count_bigrams(all.subspan(0, 50), stop);
    const auto b = count_bigrams(all.subspan(50, 120), stop);
    const auto c = count_bigrams(all.subspan(170), stop);
    CHECK(merge_counts(merge_counts(a, b), c) == merge_counts(a, merge_counts(b, c)));
    CHECK(merge_counts(merge_counts(a, b), c) == whole);
  }

  TEST_CASE("sorted order is canonical") {
    BigramCountTable t;
    t.add({"b", "a"});
    t.add({"a", "z"});
    t.add({"a", "b"});
    const auto s = t.sorted();
    REQUIRE(s.size() == 3);
    CHECK(s[0].first.str() == "a b");
    CHECK(s[1].first.str() == "a z");
    CHECK(s[2].first.str() == "b a");
  }

  TEST_CASE("stop word files pass through the tokenizer") {
    testutil::TempDir dir;
    const auto p = dir.write("s.txt", "# comment\nThe\nOF\n\n");
    const auto stop = StopWords::load(p);
    CHECK(stop.contains("the"));
    CHECK(stop.contains("of"));
    CHECK(stop.size() == 2);
  }

  TEST_CASE("bundled stop-word list") {
    const auto stop = StopWords::load(testutil::data_dir() / "stopwords.txt");
    CHECK(stop.size() == 409);
    CHECK(stop.contains("and"));
    CHECK_FALSE(stop.contains("tax"));
  }

  TEST_CASE("jsonl ingest round trip and streaming reader") {
    testutil::TempDir dir;
    std::vector<Document> docs = {
        {"a", "Tax relief.", "cr", Party::kRepublican, 2012},
        {"b", "Voting rights \"now\"", "cr", Party::kDemocratic, std::nullopt},
        {"c", "neutral", "news", std::nullopt, 2020},
    };
    write_jsonl(dir / "c.jsonl", docs);
    CHECK(ingest_jsonl(dir / "c.jsonl") == docs);

    DocumentReader reader(dir / "c.jsonl");
    Document d;
    std::size_t n = 0;
    while (reader.next(d)) CHECK(d == docs[n++]);
    CHECK(n == 3);
  }

  TEST_CASE("jsonl errors name the line") {
    testutil::TempDir dir;
    const auto p = dir.write("bad.jsonl", "{\"id\":\"a\",\"text\":\"x\",\"source\":\"s\"}\n\n{\"id\":\"b\",\"source\":\"s\"}\n");
    try {
      ingest_jsonl(p);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    const auto dup = dir.write("dup.jsonl", "{\"id\":\"a\",\"text\":\"x\",\"source\":\"s\"}\n{\"id\":\"a\",\"text\":\"y\",\"source\":\"s\"}\n");
    CHECK_THROWS_AS(ingest_jsonl(dup), ParseError);
    const auto garbage = dir.write("g.jsonl", "not json\n");
    CHECK_THROWS_AS(ingest_jsonl(garbage), ParseError);
    CHECK_THROWS_AS(ingest_jsonl(dir / "missing.jsonl"), Error);
  }
}
