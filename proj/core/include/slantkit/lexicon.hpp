#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "slantkit/corpus.hpp"

namespace slantkit {

// Contingency counts for one bigram across the two party corpora.
struct PartyTermCounts {
  std::uint64_t rep = 0;        // uses of the bigram by Republicans
  std::uint64_t dem = 0;        // uses of the bigram by Democrats
  std::uint64_t rep_other = 0;  // all other Republican bigram tokens
  std::uint64_t dem_other = 0;  // all other Democratic bigram tokens
};

// Partisanship contrast of one bigram:
//
//   (rep * dem_other - dem * rep_other)^2
//   -----------------------------------------------------------------------
//   (rep + dem)(rep + rep_other)(dem + dem_other)(rep_other + dem_other)
//
// This is the Pearson 2x2 chi-square divided by the table total N, so it
// induces the same ranking. Throws kDegenerate if any factor is zero.
double chi_square_bigram(const PartyTermCounts& c);

// Bigrams of a reference corpus ranked by frequency (descending, ties broken
// lexicographically). Ranks are 1-based.
class ReferenceRanking {
 public:
  ReferenceRanking() = default;

  static ReferenceRanking from_counts(const BigramCountTable& counts);
  // CSV with columns bigram,count. Row order in the file is irrelevant.
  static ReferenceRanking read_csv(const std::filesystem::path& path);
  std::string to_csv() const;

  std::optional<std::size_t> rank_of(const Bigram& bigram) const;
  std::size_t size() const noexcept { return ranked_.size(); }
  bool empty() const noexcept { return ranked_.empty(); }
  const std::vector<std::pair<Bigram, std::uint64_t>>& ranked() const noexcept { return ranked_; }

 private:
  explicit ReferenceRanking(std::vector<std::pair<Bigram, std::uint64_t>> entries);

  std::vector<std::pair<Bigram, std::uint64_t>> ranked_;
  std::unordered_map<Bigram, std::size_t, BigramHash> rank_;
};

struct LexiconParams {
  std::size_t terms_per_party = 1000;
  // Keep only bigrams ranked within the reference top-N...
  std::size_t reference_keep_top = 200000;
  // ...and outside the reference top-M (generic high-frequency phrases).
  std::size_t reference_drop_top = 100;
};

struct LexiconTerm {
  Bigram bigram;
  double chi2 = 0.0;
};

class PartisanLexicon {
 public:
  PartisanLexicon() = default;
  PartisanLexicon(std::vector<LexiconTerm> dem_terms, std::vector<LexiconTerm> rep_terms,
                  LexiconParams params = {});

  const std::vector<LexiconTerm>& dem_terms() const noexcept { return dem_; }
  const std::vector<LexiconTerm>& rep_terms() const noexcept { return rep_; }
  const LexiconParams& params() const noexcept { return params_; }

  std::optional<Party> party_of(const Bigram& bigram) const;
  bool contains(const Bigram& bigram) const { return index_.contains(bigram); }
  std::size_t size() const noexcept { return dem_.size() + rep_.size(); }

  // Democratic terms followed by Republican terms, each in rank order. This
  // is the common support every term distribution is indexed by.
  std::vector<Bigram> terms() const;
  std::optional<std::size_t> index_of(const Bigram& bigram) const;

  // CSV columns: bigram,party,chi2,rank (rank is 1-based within the party).
  std::string to_csv() const;
  static PartisanLexicon read_csv(const std::filesystem::path& path);

 private:
  std::vector<LexiconTerm> dem_;
  std::vector<LexiconTerm> rep_;
  LexiconParams params_;
  std::unordered_map<Bigram, std::size_t, BigramHash> index_;
};

// Builds the two partisan term sets:
//  1. score every bigram appearing in either party table (missing side = 0);
//  2. drop bigrams outside the reference keep window;
//  3. assign each survivor to the party with the higher relative frequency;
//  4. keep the top terms_per_party per party by score.
// Lists are sorted by score descending, ties by bigram. Zero-score bigrams
// favor neither party and are never included.
PartisanLexicon build_partisan_lexicon(const BigramCountTable& dem, const BigramCountTable& rep,
                                       const ReferenceRanking& reference,
                                       const LexiconParams& params = {});

struct PartyTables {
  BigramCountTable dem;
  BigramCountTable rep;
};

// Pools bigram counts per party. Every document must carry a party label.
PartyTables count_by_party(DocumentReader& reader, const StopWords& stopwords);
PartyTables count_by_party(std::span<const Document> docs, const StopWords& stopwords);

}  // namespace slantkit
