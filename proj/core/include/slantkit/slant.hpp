#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slantkit/corpus.hpp"
#include "slantkit/lexicon.hpp"

namespace slantkit {

inline constexpr std::uint64_t kDefaultMinEvidence = 50;

// Distribution of partisan-term usage over a lexicon's terms, indexed the
// same way as PartisanLexicon::terms(). Probabilities sum to 1.
struct TermDistribution {
  std::vector<double> probabilities;
  std::vector<std::uint64_t> counts;
  std::uint64_t support_count = 0;  // lexicon-term occurrences behind the distribution

  std::size_t size() const noexcept { return probabilities.size(); }
};

// Renormalizes raw per-term counts. Throws kInsufficientEvidence when fewer
// than `min_evidence` occurrences are present (and always when there are none).
TermDistribution distribution_from_counts(std::vector<std::uint64_t> counts, std::uint64_t min_evidence);

// Restricts `counts` to the lexicon terms and renormalizes.
TermDistribution project_distribution(const BigramCountTable& counts, const PartisanLexicon& lexicon,
                                      std::uint64_t min_evidence = kDefaultMinEvidence);

// Jensen-Shannon divergence in nats, 0.5 KL(P||M) + 0.5 KL(Q||M) with
// M = (P + Q) / 2. Zero-probability terms contribute nothing. The result is
// clamped to [0, ln 2] to absorb rounding.
double jensen_shannon(std::span<const double> p, std::span<const double> q);
double jensen_shannon(const TermDistribution& p, const TermDistribution& q);

struct SlantScore {
  double jsd_dem = 0.0;
  double jsd_rep = 0.0;
  double delta = 0.0;  // jsd_dem - jsd_rep; negative reads as Democrat-like usage
};

SlantScore slant_delta(const TermDistribution& text, const TermDistribution& dem, const TermDistribution& rep);

struct UnitCorpus {
  std::string name;
  BigramCountTable counts;
};

struct UnitScore {
  std::string name;
  SlantScore score;
  TermDistribution distribution;
};

struct SkippedUnit {
  std::string name;
  std::string reason;
};

struct UnitScoreTable {
  std::vector<UnitScore> scored;    // sorted by unit name
  std::vector<SkippedUnit> skipped; // sorted by unit name
};

// Scores each unit against the party references. Units that fail (empty,
// too little evidence) are collected in `skipped` rather than thrown.
UnitScoreTable score_corpus_units(std::span<const UnitCorpus> units, const PartisanLexicon& lexicon,
                                  const TermDistribution& dem, const TermDistribution& rep,
                                  std::uint64_t min_evidence = kDefaultMinEvidence);

// unit,jsd_dem,jsd_rep,delta,support_count
std::string slant_scores_csv(const UnitScoreTable& table);
// unit,bigram,party,count,frequency for every lexicon term with a nonzero count.
std::string term_frequencies_csv(const UnitScoreTable& table, const PartisanLexicon& lexicon);

}  // namespace slantkit
