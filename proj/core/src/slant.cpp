#include "slantkit/slant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "slantkit/error.hpp"
#include "slantkit/text_io.hpp"

namespace slantkit {

TermDistribution distribution_from_counts(std::vector<std::uint64_t> counts, std::uint64_t min_evidence) {
  TermDistribution out;
  for (auto n : counts) out.support_count += n;
  if (out.support_count == 0 || out.support_count < min_evidence) {
    throw Error(ErrorKind::kInsufficientEvidence,
                "only " + std::to_string(out.support_count) + " lexicon-term occurrences (need " +
                    std::to_string(std::max<std::uint64_t>(min_evidence, 1)) + ")");
  }
  const double total = static_cast<double>(out.support_count);
  out.probabilities.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out.probabilities[i] = static_cast<double>(counts[i]) / total;
  }
  out.counts = std::move(counts);
  return out;
}

TermDistribution project_distribution(const BigramCountTable& counts, const PartisanLexicon& lexicon,
                                      std::uint64_t min_evidence) {
  std::vector<std::uint64_t> hits(lexicon.size(), 0);
  const auto terms = lexicon.terms();
  // Iterate whichever side is smaller.
  if (terms.size() <= counts.size()) {
    for (std::size_t i = 0; i < terms.size(); ++i) hits[i] = counts.count(terms[i]);
  } else {
    for (const auto& [b, n] : counts.counts()) {
      if (const auto idx = lexicon.index_of(b)) hits[*idx] = n;
    }
  }
  return distribution_from_counts(std::move(hits), min_evidence);
}

double jensen_shannon(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorKind::kPrecondition, "distributions have different supports (" +
                                              std::to_string(p.size()) + " vs " +
                                              std::to_string(q.size()) + ")");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    const double a = p[i] > 0.0 ? p[i] * std::log(p[i] / m) : 0.0;
    const double b = q[i] > 0.0 ? q[i] * std::log(q[i] / m) : 0.0;
    sum += a + b;  // one addition per index keeps the result bitwise symmetric
  }
  return std::clamp(0.5 * sum, 0.0, std::numbers::ln2);
}

double jensen_shannon(const TermDistribution& p, const TermDistribution& q) {
  return jensen_shannon(p.probabilities, q.probabilities);
}

SlantScore slant_delta(const TermDistribution& text, const TermDistribution& dem, const TermDistribution& rep) {
  SlantScore s;
  s.jsd_dem = jensen_shannon(text, dem);
  s.jsd_rep = jensen_shannon(text, rep);
  s.delta = s.jsd_dem - s.jsd_rep;
  return s;
}

UnitScoreTable score_corpus_units(std::span<const UnitCorpus> units, const PartisanLexicon& lexicon,
                                  const TermDistribution& dem, const TermDistribution& rep,
                                  std::uint64_t min_evidence) {
  UnitScoreTable out;
  for (const auto& unit : units) {
    if (unit.counts.empty()) {
      out.skipped.push_back({unit.name, "empty unit"});
      continue;
    }
    try {
      UnitScore s;
      s.name = unit.name;
      s.distribution = project_distribution(unit.counts, lexicon, min_evidence);
      s.score = slant_delta(s.distribution, dem, rep);
      out.scored.push_back(std::move(s));
    } catch (const Error& e) {
      out.skipped.push_back({unit.name, e.what()});
    }
  }
  std::sort(out.scored.begin(), out.scored.end(),
            [](const UnitScore& a, const UnitScore& b) { return a.name < b.name; });
  std::sort(out.skipped.begin(), out.skipped.end(),
            [](const SkippedUnit& a, const SkippedUnit& b) { return a.name < b.name; });
  return out;
}

std::string slant_scores_csv(const UnitScoreTable& table) {
  CsvWriter w{"unit", "jsd_dem", "jsd_rep", "delta", "support_count"};
  for (const auto& u : table.scored) {
    w.cell(u.name).cell(u.score.jsd_dem).cell(u.score.jsd_rep).cell(u.score.delta);
    w.cell(static_cast<unsigned long long>(u.distribution.support_count));
    w.end_row();
  }
  return w.str();
}

std::string term_frequencies_csv(const UnitScoreTable& table, const PartisanLexicon& lexicon) {
  CsvWriter w{"unit", "bigram", "party", "count", "frequency"};
  const auto terms = lexicon.terms();
  const std::size_t n_dem = lexicon.dem_terms().size();
  for (const auto& u : table.scored) {
    for (std::size_t i = 0; i < terms.size() && i < u.distribution.size(); ++i) {
      if (u.distribution.counts[i] == 0) continue;
      w.cell(u.name).cell(terms[i].str());
      w.cell(to_string(i < n_dem ? Party::kDemocratic : Party::kRepublican));
      w.cell(static_cast<unsigned long long>(u.distribution.counts[i]));
      w.cell(u.distribution.probabilities[i]);
      w.end_row();
    }
  }
  return w.str();
}

}  // namespace slantkit
