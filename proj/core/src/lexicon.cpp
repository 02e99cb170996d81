#include "slantkit/lexicon.hpp"

#include <algorithm>
#include <charconv>

#include "slantkit/error.hpp"
#include "slantkit/text_io.hpp"

namespace slantkit {

namespace {
__extension__ typedef unsigned __int128 u128;
}  // namespace

double chi_square_bigram(const PartyTermCounts& c) {
  const double rep = static_cast<double>(c.rep);
  const double dem = static_cast<double>(c.dem);
  const double rep_other = static_cast<double>(c.rep_other);
  const double dem_other = static_cast<double>(c.dem_other);

  const double d1 = rep + dem;
  const double d2 = rep + rep_other;
  const double d3 = dem + dem_other;
  const double d4 = rep_other + dem_other;
  if (d1 == 0.0 || d2 == 0.0 || d3 == 0.0 || d4 == 0.0) {
    throw Error(ErrorKind::kDegenerate, "chi-square denominator has a zero factor");
  }
  // Products of counts up to ~1e12 stay exact in 128-bit integers; doubles
  // would lose low-order bits of the numerator difference.
  const u128 lhs = static_cast<u128>(c.rep) * c.dem_other;
  const u128 rhs = static_cast<u128>(c.dem) * c.rep_other;
  const double diff = static_cast<double>(lhs > rhs ? lhs - rhs : rhs - lhs);
  // Divide step by step to keep intermediates in range.
  return diff / d1 * diff / d2 / d3 / d4;
}

ReferenceRanking::ReferenceRanking(std::vector<std::pair<Bigram, std::uint64_t>> entries)
    : ranked_(std::move(entries)) {
  std::sort(ranked_.begin(), ranked_.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  rank_.reserve(ranked_.size());
  for (std::size_t i = 0; i < ranked_.size(); ++i) rank_.emplace(ranked_[i].first, i + 1);
}

ReferenceRanking ReferenceRanking::from_counts(const BigramCountTable& counts) {
  return ReferenceRanking(
      std::vector<std::pair<Bigram, std::uint64_t>>(counts.counts().begin(), counts.counts().end()));
}

ReferenceRanking ReferenceRanking::read_csv(const std::filesystem::path& path) {
  const CsvTable table = slantkit::read_csv(path);
  const std::size_t bigram_col = table.column("bigram");
  const std::size_t count_col = table.column("count");
  std::vector<std::pair<Bigram, std::uint64_t>> entries;
  entries.reserve(table.rows.size());
  std::unordered_map<Bigram, std::size_t, BigramHash> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    Bigram b;
    try {
      b = Bigram::parse(row[bigram_col]);
    } catch (const Error& e) {
      throw ParseError(path.string(), r + 2, e.what());
    }
    std::uint64_t n = 0;
    const auto& s = row[count_col];
    const auto res = std::from_chars(s.data(), s.data() + s.size(), n);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || n == 0) {
      throw ParseError(path.string(), r + 2, "count must be a positive integer, got '" + s + "'");
    }
    if (!seen.emplace(b, r).second) {
      throw ParseError(path.string(), r + 2, "duplicate bigram '" + b.str() + "'");
    }
    entries.emplace_back(std::move(b), n);
  }
  return ReferenceRanking(std::move(entries));
}

std::string ReferenceRanking::to_csv() const {
  CsvWriter w{"bigram", "count"};
  for (const auto& [b, n] : ranked_) {
    w.cell(b.str()).cell(static_cast<unsigned long long>(n));
    w.end_row();
  }
  return w.str();
}

std::optional<std::size_t> ReferenceRanking::rank_of(const Bigram& bigram) const {
  const auto it = rank_.find(bigram);
  if (it == rank_.end()) return std::nullopt;
  return it->second;
}

PartisanLexicon::PartisanLexicon(std::vector<LexiconTerm> dem_terms, std::vector<LexiconTerm> rep_terms,
                                 LexiconParams params)
    : dem_(std::move(dem_terms)), rep_(std::move(rep_terms)), params_(params) {
  std::size_t i = 0;
  for (const auto& t : dem_) {
    if (!index_.emplace(t.bigram, i++).second) {
      throw Error(ErrorKind::kPrecondition, "duplicate lexicon term '" + t.bigram.str() + "'");
    }
  }
  for (const auto& t : rep_) {
    if (!index_.emplace(t.bigram, i++).second) {
      throw Error(ErrorKind::kPrecondition,
                  "lexicon term '" + t.bigram.str() + "' assigned to both parties");
    }
  }
}

std::optional<Party> PartisanLexicon::party_of(const Bigram& bigram) const {
  const auto it = index_.find(bigram);
  if (it == index_.end()) return std::nullopt;
  return it->second < dem_.size() ? Party::kDemocratic : Party::kRepublican;
}

std::vector<Bigram> PartisanLexicon::terms() const {
  std::vector<Bigram> out;
  out.reserve(size());
  for (const auto& t : dem_) out.push_back(t.bigram);
  for (const auto& t : rep_) out.push_back(t.bigram);
  return out;
}

std::optional<std::size_t> PartisanLexicon::index_of(const Bigram& bigram) const {
  const auto it = index_.find(bigram);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string PartisanLexicon::to_csv() const {
  CsvWriter w{"bigram", "party", "chi2", "rank"};
  auto emit = [&](const std::vector<LexiconTerm>& terms, Party party) {
    std::size_t rank = 1;
    for (const auto& t : terms) {
      w.cell(t.bigram.str()).cell(to_string(party)).cell(t.chi2).cell(rank++);
      w.end_row();
    }
  };
  emit(dem_, Party::kDemocratic);
  emit(rep_, Party::kRepublican);
  return w.str();
}

PartisanLexicon PartisanLexicon::read_csv(const std::filesystem::path& path) {
  const CsvTable table = slantkit::read_csv(path);
  const std::size_t bigram_col = table.column("bigram");
  const std::size_t party_col = table.column("party");
  const std::size_t chi2_col = table.column("chi2");
  const std::size_t rank_col = table.column("rank");

  struct Row {
    std::size_t rank;
    LexiconTerm term;
  };
  std::vector<Row> dem, rep;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = r + 2;
    Row out;
    try {
      out.term.bigram = Bigram::parse(row[bigram_col]);
    } catch (const Error& e) {
      throw ParseError(path.string(), line, e.what());
    }
    const auto party = parse_party(row[party_col]);
    if (!party) throw ParseError(path.string(), line, "unknown party '" + row[party_col] + "'");
    const auto& chi = row[chi2_col];
    if (std::from_chars(chi.data(), chi.data() + chi.size(), out.term.chi2).ec != std::errc()) {
      throw ParseError(path.string(), line, "bad chi2 value '" + chi + "'");
    }
    const auto& rk = row[rank_col];
    if (std::from_chars(rk.data(), rk.data() + rk.size(), out.rank).ec != std::errc()) {
      throw ParseError(path.string(), line, "bad rank value '" + rk + "'");
    }
    (*party == Party::kDemocratic ? dem : rep).push_back(std::move(out));
  }
  auto finish = [](std::vector<Row>& rows) {
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });
    std::vector<LexiconTerm> terms;
    terms.reserve(rows.size());
    for (auto& r : rows) terms.push_back(std::move(r.term));
    return terms;
  };
  LexiconParams params;
  params.terms_per_party = std::max(dem.size(), rep.size());
  return PartisanLexicon(finish(dem), finish(rep), params);
}

PartisanLexicon build_partisan_lexicon(const BigramCountTable& dem, const BigramCountTable& rep,
                                       const ReferenceRanking& reference, const LexiconParams& params) {
  if (dem.empty() || rep.empty()) {
    throw Error(ErrorKind::kEmpty, "both party bigram tables must be non-empty");
  }
  if (reference.empty()) throw Error(ErrorKind::kEmpty, "reference ranking is empty");

  const std::uint64_t dem_total = dem.total();
  const std::uint64_t rep_total = rep.total();

  std::vector<LexiconTerm> dem_terms;
  std::vector<LexiconTerm> rep_terms;

  auto consider = [&](const Bigram& b) {
    const auto rank = reference.rank_of(b);
    if (!rank || *rank > params.reference_keep_top || *rank <= params.reference_drop_top) return;

    const std::uint64_t f_dem = dem.count(b);
    const std::uint64_t f_rep = rep.count(b);
    const PartyTermCounts c{f_rep, f_dem, rep_total - f_rep, dem_total - f_dem};
    double chi2 = 0.0;
    try {
      chi2 = chi_square_bigram(c);
    } catch (const Error&) {
      return;  // the only bigram of both corpora; no contrast is defined
    }
    if (chi2 <= 0.0) return;
    // Relative frequency comparison, f_dem/dem_total vs f_rep/rep_total, in
    // exact integer arithmetic.
      const u128 dem_side = static_cast<u128>(f_dem) * rep_total;
    const u128 rep_side = static_cast<u128>(f_rep) * dem_total;
    if (dem_side > rep_side) {
      dem_terms.push_back({b, chi2});
    } else if (rep_side > dem_side) {
      rep_terms.push_back({b, chi2});
    }
  };

  for (const auto& [b, n] : dem.counts()) consider(b);
  for (const auto& [b, n] : rep.counts()) {
    if (dem.count(b) == 0) consider(b);
  }

  auto finish = [&](std::vector<LexiconTerm>& terms) {
    std::sort(terms.begin(), terms.end(), [](const LexiconTerm& a, const LexiconTerm& b) {
      if (a.chi2 != b.chi2) return a.chi2 > b.chi2;
      return a.bigram < b.bigram;
    });
    if (terms.size() > params.terms_per_party) terms.resize(params.terms_per_party);
  };
  finish(dem_terms);
  finish(rep_terms);

  if (dem_terms.empty() && rep_terms.empty()) {
    throw Error(ErrorKind::kEmpty, "reference filtering removed every candidate bigram");
  }
  return PartisanLexicon(std::move(dem_terms), std::move(rep_terms), params);
}

PartyTables count_by_party(DocumentReader& reader, const StopWords& stopwords) {
  PartyTables out;
  Document doc;
  while (reader.next(doc)) {
    if (!doc.party) {
      throw Error(ErrorKind::kParse, "document '" + doc.id + "' (line " +
                                         std::to_string(reader.line()) + ") has no party label");
    }
    count_document(doc, stopwords, *doc.party == Party::kDemocratic ? out.dem : out.rep);
  }
  return out;
}

PartyTables count_by_party(std::span<const Document> docs, const StopWords& stopwords) {
  PartyTables out;
  for (const auto& doc : docs) {
    if (!doc.party) throw Error(ErrorKind::kParse, "document '" + doc.id + "' has no party label");
    count_document(doc, stopwords, *doc.party == Party::kDemocratic ? out.dem : out.rep);
  }
  return out;
}

}  // namespace slantkit
