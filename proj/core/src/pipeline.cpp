#include "slantkit/pipeline.hpp"

#include <charconv>
#include <iostream>
#include <map>
#include <set>

#include <json.hpp>

#include "slantkit/annotate.hpp"
#include "slantkit/corpus.hpp"
#include "slantkit/error.hpp"
#include "slantkit/harvest.hpp"
#include "slantkit/mock_server.hpp"
#include "slantkit/politests.hpp"
#include "slantkit/random.hpp"
#include "slantkit/slant.hpp"
#include "slantkit/text_io.hpp"

namespace slantkit {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kLexicon: return "lexicon";
    case Stage::kSlant: return "slant";
    case Stage::kHarvest: return "harvest";
    case Stage::kAnnotate: return "annotate";
    case Stage::kTests: return "tests";
    case Stage::kAggregate: return "aggregate";
    case Stage::kValidate: return "validate";
    case Stage::kMockServe: return "mock-serve";
  }
  return "lexicon";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (Stage s : {Stage::kLexicon, Stage::kSlant, Stage::kHarvest, Stage::kAnnotate, Stage::kTests,
                  Stage::kAggregate, Stage::kValidate, Stage::kMockServe}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

namespace {

// Output file names shared between stages.
constexpr const char* kLexiconFile = "lexicon.csv";
constexpr const char* kPartyCountsFile = "party_term_counts.csv";
constexpr const char* kPolicyPlanFile = "plan_policy.jsonl";
constexpr const char* kFigurePlanFile = "plan_figures.jsonl";
constexpr const char* kRecordsFile = "records.jsonl";
constexpr const char* kSlantFile = "slant.csv";
constexpr const char* kSlantTermsFile = "slant_terms.csv";
constexpr const char* kAnnotationsFile = "annotations.jsonl";
constexpr const char* kViewpointsFile = "viewpoints.csv";
constexpr const char* kSentimentFile = "sentiment.csv";
constexpr const char* kTestRunsFile = "tests_runs.csv";
constexpr const char* kTestItemsFile = "tests_items.jsonl";
constexpr const char* kTestSummaryFile = "tests_summary.csv";
constexpr const char* kValidationFile = "validation.csv";
constexpr const char* kReportDir = "report";
constexpr const char* kCacheFile = "responses.jsonl";

// Typed field readers that collect problems instead of stopping at the first.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string prefix, std::vector<std::string>& problems)
      : obj_(obj), prefix_(std::move(prefix)), problems_(problems) {}

  bool has(const char* key) const { return obj_.is_object() && obj_.contains(key) && !obj_.at(key).is_null(); }

  template <typename T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      problems_.push_back(prefix_ + key + ": wrong type");
    }
  }

  void path(const char* key, fs::path& out) {
    std::string s;
    get(key, s);
    if (!s.empty()) out = s;
  }

  void paths(const char* key, std::vector<fs::path>& out) {
    std::vector<std::string> v;
    get(key, v);
    for (auto& s : v) out.emplace_back(s);
  }

  FieldReader child(const char* key) {
    static const json kEmpty = json::object();
    if (has(key) && !obj_.at(key).is_object()) problems_.push_back(prefix_ + key + ": expected an object");
    return FieldReader(has(key) && obj_.at(key).is_object() ? obj_.at(key) : kEmpty, prefix_ + key + ".",
                       problems_);
  }

  const json& raw(const char* key) const { return obj_.at(key); }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& problems_;
};

void need_file(const RunConfig& c, const fs::path& p, const std::string& what, std::vector<std::string>& out) {
  if (p.empty()) {
    out.push_back(what + " is not set");
  } else if (!fs::is_regular_file(c.resolve(p))) {
    out.push_back(what + " not found: " + c.resolve(p).string());
  }
}

void need_output(const fs::path& p, const std::string& stage, std::vector<std::string>& out) {
  if (!fs::is_regular_file(p)) out.push_back(p.string() + " missing; run `" + stage + "` first");
}

void need_endpoint(const RunConfig& c, const std::string& name, const std::string& what,
                   std::vector<std::string>& out) {
  for (const auto& e : c.endpoints) {
    if (e.name == name) return;
  }
  out.push_back(what + " '" + name + "' is not a declared endpoint");
}

double parse_double(const std::string& s, const std::string& source, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(source, line, "expected a number, got '" + s + "'");
  }
  return v;
}

std::uint64_t parse_count(const std::string& s, const std::string& source, std::size_t line) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(source, line, "expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

struct Context {
  RunConfig config;
  RunOptions options;
  std::function<void(std::string_view)> log;

  fs::path out(const char* name) const { return config.out() / name; }
};

// Party reference counts over the lexicon, persisted next to the lexicon so
// later stages need not re-read the congressional corpus.
std::string party_counts_csv(const PartisanLexicon& lexicon, const PartyTables& tables) {
  CsvWriter w{"bigram", "party", "dem_count", "rep_count"};
  for (const auto& b : lexicon.terms()) {
    w.cell(b.str()).cell(to_string(*lexicon.party_of(b)));
    w.cell(static_cast<unsigned long long>(tables.dem.count(b)));
    w.cell(static_cast<unsigned long long>(tables.rep.count(b)));
    w.end_row();
  }
  return w.str();
}

struct PartyReferences {
  PartisanLexicon lexicon;
  TermDistribution dem;
  TermDistribution rep;
};

PartyReferences load_references(const Context& ctx) {
  PartyReferences refs{PartisanLexicon::read_csv(ctx.out(kLexiconFile)), {}, {}};
  const fs::path path = ctx.out(kPartyCountsFile);
  const CsvTable table = read_csv(path);
  const auto bcol = table.column("bigram");
  const auto dcol = table.column("dem_count");
  const auto rcol = table.column("rep_count");
  std::vector<std::uint64_t> dem(refs.lexicon.size(), 0), rep(refs.lexicon.size(), 0);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto idx = refs.lexicon.index_of(Bigram::parse(row[bcol]));
    if (!idx) throw ParseError(path.string(), r + 2, "bigram '" + row[bcol] + "' is not in the lexicon");
    dem[*idx] = parse_count(row[dcol], path.string(), r + 2);
    rep[*idx] = parse_count(row[rcol], path.string(), r + 2);
  }
  refs.dem = distribution_from_counts(std::move(dem), 1);
  refs.rep = distribution_from_counts(std::move(rep), 1);
  return refs;
}

StopWords load_stopwords(const Context& ctx) {
  std::vector<fs::path> paths;
  for (const auto& p : ctx.config.corpus.stopwords) paths.push_back(ctx.config.resolve(p));
  return StopWords::load(paths);
}

// Endpoints, transport and cache for the network stages. With an embedded
// mock the endpoints are pointed at an in-process server for the lifetime of
// the session.
class NetworkSession {
 public:
  explicit NetworkSession(const Context& ctx) {
    endpoints_ = ctx.config.endpoints;
    if (ctx.config.mock.embedded) {
      server_ = std::make_unique<MockServer>(MockFixture::load(ctx.config.resolve(ctx.config.mock.fixture)));
      server_->start(ctx.config.mock.host, 0);
      for (auto& e : endpoints_) e.url = server_->base_url();
      ctx.log("embedded mock server at " + server_->base_url());
    }
    transport_ = ctx.options.transport ? ctx.options.transport : std::make_shared<HttpTransport>();
    cache_ = std::make_unique<ResponseCache>(ctx.config.cache() / kCacheFile);

    EngineOptions eo;
    eo.max_in_flight = ctx.options.concurrency.value_or(ctx.config.harvest.concurrency);
    eo.max_retries = ctx.config.harvest.max_retries;
    eo.initial_backoff = std::chrono::milliseconds(ctx.config.harvest.initial_backoff_ms);
    eo.log = ctx.log;
    engine_ = std::make_unique<ExecutionEngine>(endpoints_, *transport_, *cache_, eo);
  }

  ~NetworkSession() {
    engine_.reset();
    if (server_) server_->stop();
  }

  ExecutionEngine& engine() { return *engine_; }

 private:
  std::vector<Endpoint> endpoints_;
  std::unique_ptr<MockServer> server_;
  std::shared_ptr<ChatTransport> transport_;
  std::unique_ptr<ResponseCache> cache_;
  std::unique_ptr<ExecutionEngine> engine_;
};

void log_engine_stats(const Context& ctx, const ExecutionEngine& engine) {
  const auto s = engine.stats();
  ctx.log("requests " + std::to_string(s.requests) + ", retries " + std::to_string(s.retries) + ", cache hits " +
          std::to_string(s.cache_hits));
}

// ---- lexicon ----

void stage_lexicon(const Context& ctx) {
  const auto& c = ctx.config;
  const StopWords stop = load_stopwords(ctx);
  DocumentReader congress(c.resolve(c.corpus.congress));
  const PartyTables tables = count_by_party(congress, stop);
  ctx.log("congress bigrams: dem " + std::to_string(tables.dem.total()) + ", rep " +
          std::to_string(tables.rep.total()));

  ReferenceRanking ranking = [&] {
    if (!c.corpus.reference_csv.empty()) return ReferenceRanking::read_csv(c.resolve(c.corpus.reference_csv));
    DocumentReader ref(c.resolve(c.corpus.reference));
    return ReferenceRanking::from_counts(count_bigrams(ref, stop));
  }();

  const PartisanLexicon lexicon = build_partisan_lexicon(tables.dem, tables.rep, ranking, c.lexicon);
  if (lexicon.dem_terms().size() < c.lexicon.terms_per_party || lexicon.rep_terms().size() < c.lexicon.terms_per_party) {
    ctx.log("warning: lexicon has " + std::to_string(lexicon.dem_terms().size()) + " Democratic and " +
            std::to_string(lexicon.rep_terms().size()) + " Republican terms, fewer than " +
            std::to_string(c.lexicon.terms_per_party) + " per party");
  }
  write_file(ctx.out(kLexiconFile), lexicon.to_csv());
  write_file(ctx.out(kPartyCountsFile), party_counts_csv(lexicon, tables));
  ctx.log("wrote " + ctx.out(kLexiconFile).string());
}

// ---- harvest ----

struct HarvestInputs {
  std::vector<PromptTemplate> policy;
  std::vector<PromptTemplate> figure;
  std::vector<std::string> topics;
  std::vector<PublicFigure> figures;
};

std::vector<PromptTemplate> load_kind(const fs::path& path, TemplateKind kind) {
  auto ts = load_templates(path);
  for (const auto& t : ts) {
    if (t.kind != kind) {
      throw Error(ErrorKind::kConfig, path.string() + ": template '" + t.id + "' has kind " +
                                          std::string(to_string(t.kind)) + ", expected " +
                                          std::string(to_string(kind)));
    }
  }
  return ts;
}

HarvestInputs load_harvest_inputs(const RunConfig& c) {
  HarvestInputs in;
  in.policy = load_kind(c.resolve(c.harvest.policy_templates), TemplateKind::kPolicy);
  in.figure = load_kind(c.resolve(c.harvest.figure_templates), TemplateKind::kFigure);
  in.topics = read_data_lines(c.resolve(c.harvest.topics));
  in.figures = load_figures(c.resolve(c.harvest.figures));
  return in;
}

void stage_harvest(const Context& ctx) {
  const auto& c = ctx.config;
  const HarvestInputs in = load_harvest_inputs(c);
  std::vector<std::string> figure_names;
  for (const auto& f : in.figures) figure_names.push_back(f.name);

  const auto policy_plan = plan_tasks(c.models, in.policy, in.topics, c.harvest.policy_replicates,
                                      c.stage_seed("harvest/policy"));
  const auto figure_plan = plan_tasks(c.models, in.figure, figure_names, c.harvest.figure_replicates,
                                      c.stage_seed("harvest/figures"));
  write_plan(ctx.out(kPolicyPlanFile), policy_plan);
  write_plan(ctx.out(kFigurePlanFile), figure_plan);
  ctx.log("planned " + std::to_string(policy_plan.size()) + " policy and " + std::to_string(figure_plan.size()) +
          " figure generations");
  if (ctx.options.dry_run) return;

  NetworkSession net(ctx);
  auto records = execute(policy_plan, in.policy, net.engine());
  auto figure_records = execute(figure_plan, in.figure, net.engine());
  records.insert(records.end(), std::make_move_iterator(figure_records.begin()),
                 std::make_move_iterator(figure_records.end()));
  std::size_t refused = 0, failed = 0;
  for (const auto& r : records) {
    if (r.status == RecordStatus::kRefused) ++refused;
    if (r.status == RecordStatus::kTransportError) ++failed;
  }
  write_records(ctx.out(kRecordsFile), records);
  log_engine_stats(ctx, net.engine());
  ctx.log("records: " + std::to_string(records.size()) + " (" + std::to_string(refused) + " refused, " +
          std::to_string(failed) + " transport errors; rerun to retry those)");
}

// ---- slant ----

std::vector<UnitCorpus> model_units(const std::vector<GenerationRecord>& records, const StopWords& stop) {
  std::map<std::string, BigramCountTable> per_model;
  for (const auto& r : records) {
    auto& table = per_model[r.task.model_id];
    if (r.status != RecordStatus::kOk) continue;
    Document doc;
    doc.id = r.id();
    doc.text = r.response_text;
    count_document(doc, stop, table);
  }
  std::vector<UnitCorpus> units;
  for (auto& [name, counts] : per_model) units.push_back({name, std::move(counts)});
  return units;
}

void stage_slant(const Context& ctx) {
  const auto refs = load_references(ctx);
  const StopWords stop = load_stopwords(ctx);
  const auto records = read_records(ctx.out(kRecordsFile));
  const auto units = model_units(records, stop);
  const auto table = score_corpus_units(units, refs.lexicon, refs.dem, refs.rep, ctx.config.min_evidence);
  for (const auto& s : table.skipped) ctx.log("warning: unit '" + s.name + "' skipped: " + s.reason);
  write_file(ctx.out(kSlantFile), slant_scores_csv(table));
  write_file(ctx.out(kSlantTermsFile), term_frequencies_csv(table, refs.lexicon));
  ctx.log("scored " + std::to_string(table.scored.size()) + " units");
}

// ---- annotate ----

std::vector<ViewpointRow> viewpoint_rows(const std::vector<Annotation>& annotations, const Context& ctx) {
  std::map<std::string, std::vector<LabeledItem>> by_model;
  std::map<std::string, std::vector<LabeledItem>> by_topic;
  for (const auto& a : annotations) {
    if (a.family != LabelFamily::kViewpoint) continue;
    std::optional<int> v;
    if (a.outcome.label) v = a.outcome.label->value;
    by_model[a.model_id].push_back({a.model_id, LabelFamily::kViewpoint, v});
    by_topic[a.model_id].push_back({a.slot_value, LabelFamily::kViewpoint, v});
  }
  std::vector<ViewpointRow> rows;
  for (const auto& [model, items] : by_model) {
    try {
      rows.push_back({model, "", aggregate_labels(items).front()});
    } catch (const Error& e) {
      ctx.log("warning: no viewpoint aggregate for " + model + ": " + e.what());
      continue;
    }
    // Per-topic rows; a topic with only failed labels is reported and skipped.
    std::map<std::string, std::vector<LabeledItem>> topics;
    for (const auto& it : by_topic[model]) topics[it.group].push_back(it);
    for (const auto& [topic, titems] : topics) {
      try {
        rows.push_back({model, topic, aggregate_labels(titems).front()});
      } catch (const Error& e) {
        ctx.log("warning: " + model + " / " + topic + ": " + e.what());
      }
    }
  }
  return rows;
}

std::vector<SentimentAsymmetry> sentiment_rows(const std::vector<Annotation>& annotations,
                                               const std::vector<PublicFigure>& figures, const Context& ctx) {
  std::map<std::string, Alignment> alignment;
  for (const auto& f : figures) alignment.emplace(f.name, f.alignment);
  std::map<std::string, std::vector<SentimentObservation>> by_model;
  for (const auto& a : annotations) {
    if (a.family != LabelFamily::kSentiment || !a.outcome.label) continue;
    const auto it = alignment.find(a.slot_value);
    if (it == alignment.end()) {
      ctx.log("warning: figure '" + a.slot_value + "' is not in the figures list; ignored");
      continue;
    }
    by_model[a.model_id].push_back({a.model_id, it->second, a.outcome.label->value});
  }
  std::vector<SentimentAsymmetry> rows;
  for (const auto& [model, obs] : by_model) {
    try {
      auto r = sentiment_asymmetry(obs);
      rows.insert(rows.end(), r.begin(), r.end());
    } catch (const Error& e) {
      ctx.log("warning: no sentiment asymmetry for " + model + ": " + e.what());
    }
  }
  return rows;
}

void stage_annotate(const Context& ctx) {
  const auto& c = ctx.config;
  const HarvestInputs in = load_harvest_inputs(c);
  std::set<std::string> policy_ids, figure_ids;
  for (const auto& t : in.policy) policy_ids.insert(t.id);
  for (const auto& t : in.figure) figure_ids.insert(t.id);

  const auto records = read_records(ctx.out(kRecordsFile));
  std::vector<const GenerationRecord*> policy, figure;
  std::size_t unusable = 0;
  for (const auto& r : records) {
    if (r.status != RecordStatus::kOk) {
      ++unusable;
      continue;
    }
    if (policy_ids.contains(r.task.template_id)) {
      policy.push_back(&r);
    } else if (figure_ids.contains(r.task.template_id)) {
      figure.push_back(&r);
    } else {
      throw Error(ErrorKind::kConfig, "record '" + r.id() + "' uses unknown template '" + r.task.template_id + "'");
    }
  }
  if (unusable) ctx.log("skipping " + std::to_string(unusable) + " refused or failed records");

  NetworkSession net(ctx);
  Judge judge(net.engine(), c.judge.endpoint, JudgeRubrics::load(c.resolve(c.judge.rubrics)), c.judge.temperature);

  std::vector<std::string> texts;
  for (const auto* r : policy) texts.push_back(r->response_text);
  std::vector<SentimentInput> sinputs;
  for (const auto* r : figure) sinputs.push_back({r->response_text, r->task.slot_value});
  const auto vlabels = judge.classify_viewpoints(texts);
  const auto slabels = judge.classify_sentiments(sinputs);

  std::vector<Annotation> annotations;
  for (std::size_t i = 0; i < policy.size(); ++i) {
    annotations.push_back({policy[i]->id(), policy[i]->task.model_id, policy[i]->task.slot_value,
                           LabelFamily::kViewpoint, vlabels[i]});
  }
  for (std::size_t i = 0; i < figure.size(); ++i) {
    annotations.push_back({figure[i]->id(), figure[i]->task.model_id, figure[i]->task.slot_value,
                           LabelFamily::kSentiment, slabels[i]});
  }
  write_annotations(ctx.out(kAnnotationsFile), annotations);
  write_file(ctx.out(kViewpointsFile), viewpoints_csv(viewpoint_rows(annotations, ctx)));
  write_file(ctx.out(kSentimentFile), sentiment_csv(sentiment_rows(annotations, in.figures, ctx)));
  log_engine_stats(ctx, net.engine());
  ctx.log("annotated " + std::to_string(annotations.size()) + " records");
}

// ---- tests ----

std::vector<TestDefinition> load_banks(const RunConfig& c) {
  std::vector<TestDefinition> banks;
  std::set<std::string> ids;
  for (const auto& p : c.tests.banks) {
    banks.push_back(load_test(c.resolve(p)));
    if (!ids.insert(banks.back().id).second) {
      throw Error(ErrorKind::kConfig, "duplicate test id '" + banks.back().id + "'");
    }
  }
  return banks;
}

std::string items_jsonl(const std::vector<AdministrationResult>& results) {
  std::string out;
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.prompts.size(); ++i) {
      json j = {{"model", r.model_id},
                {"test", r.test_id},
                {"run", r.run_index},
                {"item", i},
                {"prompt", r.prompts[i]},
                {"response", r.responses[i]},
                {"stance", r.stances[i].chosen ? json(*r.stances[i].chosen) : json(nullptr)},
                {"judge_output", r.stances[i].judge_output}};
      out += j.dump() + "\n";
    }
  }
  return out;
}

std::vector<ModelOrientation> orientations(const std::vector<TestDefinition>& banks,
                                           const std::vector<AdministrationResult>& results, const Context& ctx) {
  std::map<std::string, std::vector<AdministrationResult>> by_model;
  for (const auto& r : results) by_model[r.model_id].push_back(r);
  std::vector<ModelOrientation> out;
  for (const auto& [model, rs] : by_model) {
    try {
      out.push_back({model, rescale_and_average(banks, rs)});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEmpty) throw;
      ctx.log("warning: no test orientation for " + model + ": " + e.what());
    }
  }
  return out;
}

void stage_tests(const Context& ctx) {
  const auto& c = ctx.config;
  const auto banks = load_banks(c);
  const auto prefixes = read_data_lines(c.resolve(c.tests.prefixes));
  const auto suffixes = read_data_lines(c.resolve(c.tests.suffixes));
  std::optional<std::string> preamble;
  if (!c.tests.base_models.empty()) preamble = load_fewshot_preamble(c.resolve(c.tests.fewshot_preamble));
  const std::set<std::string> base(c.tests.base_models.begin(), c.tests.base_models.end());

  NetworkSession net(ctx);
  Judge judge(net.engine(), c.judge.endpoint, JudgeRubrics::load(c.resolve(c.judge.rubrics)), c.judge.temperature);
  std::vector<AdministrationResult> results;
  for (const auto& model : c.models) {
    for (const auto& bank : banks) {
      AdministerOptions ao;
      ao.runs = c.tests.runs;
      ao.seed = c.stage_seed("tests");
      ao.temperature = c.tests.temperature;
      if (base.contains(model)) ao.fewshot_preamble = preamble;
      auto r = administer(bank, model, prefixes, suffixes, ao, net.engine(), judge);
      results.insert(results.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
  }
  write_file(ctx.out(kTestRunsFile), administration_csv(results));
  write_file(ctx.out(kTestItemsFile), items_jsonl(results));
  write_file(ctx.out(kTestSummaryFile), tests_csv(orientations(banks, results, ctx)));
  log_engine_stats(ctx, net.engine());
}

std::vector<AdministrationResult> read_test_runs(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto mc = t.column("model"), tc = t.column("test"), rc = t.column("run"), ec = t.column("econ_raw"),
             sc = t.column("social_raw"), ic = t.column("invalid_count");
  std::vector<AdministrationResult> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    AdministrationResult r;
    r.model_id = row[mc];
    r.test_id = row[tc];
    r.run_index = static_cast<std::uint32_t>(parse_count(row[rc], path.string(), i + 2));
    r.econ_raw = parse_double(row[ec], path.string(), i + 2);
    r.social_raw = parse_double(row[sc], path.string(), i + 2);
    r.invalid_count = parse_count(row[ic], path.string(), i + 2);
    out.push_back(std::move(r));
  }
  return out;
}

// ---- validate ----

ValidationReport compute_validation(const Context& ctx) {
  const auto& c = ctx.config;
  const auto refs = load_references(ctx);
  const StopWords stop = load_stopwords(ctx);

  // Units are outlet-years when years are present, outlets otherwise.
  std::map<std::string, BigramCountTable> per_unit;
  std::map<std::string, std::string> unit_source;
  DocumentReader news(c.resolve(c.corpus.news));
  Document doc;
  while (news.next(doc)) {
    const std::string unit = doc.year ? doc.source + ":" + std::to_string(*doc.year) : doc.source;
    count_document(doc, stop, per_unit[unit]);
    unit_source.emplace(unit, doc.source);
  }
  std::vector<UnitCorpus> units;
  for (auto& [name, counts] : per_unit) units.push_back({name, std::move(counts)});
  const auto scored = score_corpus_units(units, refs.lexicon, refs.dem, refs.rep, c.min_evidence);
  for (const auto& s : scored.skipped) ctx.log("warning: unit '" + s.name + "' skipped: " + s.reason);

  const fs::path rpath = c.resolve(c.corpus.ratings);
  const CsvTable ratings = read_csv(rpath);
  const auto oc = ratings.column("outlet"), rc = ratings.column("rating");
  std::map<std::string, std::string> rating_of;
  for (std::size_t i = 0; i < ratings.rows.size(); ++i) {
    if (!rating_of.emplace(ratings.rows[i][oc], ratings.rows[i][rc]).second) {
      throw ParseError(rpath.string(), i + 2, "duplicate outlet '" + ratings.rows[i][oc] + "'");
    }
  }
  std::vector<RatedUnit> rated;
  for (const auto& u : scored.scored) {
    const auto it = rating_of.find(unit_source.at(u.name));
    if (it == rating_of.end()) {
      ctx.log("warning: no rating for outlet '" + unit_source.at(u.name) + "'; unit skipped");
      continue;
    }
    rated.push_back({u.name, it->second, u.score.delta});
  }
  return validate_against_ratings(rated);
}

void stage_validate(const Context& ctx) {
  const auto report = compute_validation(ctx);
  write_file(ctx.out(kValidationFile), validation_csv(report));
  ctx.log("pearson r = " + format_number(report.r) + " over " + std::to_string(report.scatter.size()) + " units");
}

ValidationReport read_validation(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto uc = t.column("unit"), rc = t.column("rating"), dc = t.column("delta");
  std::vector<RatedUnit> units;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    units.push_back({t.rows[i][uc], t.rows[i][rc], parse_double(t.rows[i][dc], path.string(), i + 2)});
  }
  return validate_against_ratings(units);
}

// ---- aggregate ----

UnitScoreTable read_slant(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto uc = t.column("unit"), dc = t.column("jsd_dem"), rc = t.column("jsd_rep"), xc = t.column("delta"),
             sc = t.column("support_count");
  UnitScoreTable out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    UnitScore u;
    u.name = row[uc];
    u.score.jsd_dem = parse_double(row[dc], path.string(), i + 2);
    u.score.jsd_rep = parse_double(row[rc], path.string(), i + 2);
    u.score.delta = parse_double(row[xc], path.string(), i + 2);
    u.distribution.support_count = parse_count(row[sc], path.string(), i + 2);
    out.scored.push_back(std::move(u));
  }
  return out;
}

void stage_aggregate(const Context& ctx) {
  const auto& c = ctx.config;
  ReportInputs in;
  auto missing = [&](const char* file, const char* stage) {
    ctx.log("warning: " + ctx.out(file).string() + " missing (run `" + stage + "`); method omitted");
  };

  if (fs::is_regular_file(ctx.out(kSlantFile))) {
    in.slant = read_slant(ctx.out(kSlantFile));
    for (const auto& u : in.slant->scored) in.raw_scores.push_back({u.name, Method::kSlant, u.score.delta});
  } else {
    missing(kSlantFile, "slant");
  }

  if (fs::is_regular_file(ctx.out(kAnnotationsFile))) {
    const auto annotations = read_annotations(ctx.out(kAnnotationsFile));
    in.viewpoints = viewpoint_rows(annotations, ctx);
    for (const auto& v : in.viewpoints) {
      if (v.topic.empty()) in.raw_scores.push_back({v.model_id, Method::kViewpoint, v.aggregate.mean});
    }
    in.sentiment = sentiment_rows(annotations, load_figures(c.resolve(c.harvest.figures)), ctx);
    for (const auto& s : in.sentiment) {
      in.raw_scores.push_back({s.model_id, Method::kSentiment, sentiment_method_value(s)});
    }
  } else {
    missing(kAnnotationsFile, "annotate");
  }

  if (fs::is_regular_file(ctx.out(kTestRunsFile))) {
    in.tests = orientations(load_banks(c), read_test_runs(ctx.out(kTestRunsFile)), ctx);
    for (const auto& m : in.tests) in.raw_scores.push_back({m.model_id, Method::kTests, tests_method_value(m.summary)});
  } else {
    missing(kTestRunsFile, "tests");
  }

  if (fs::is_regular_file(ctx.out(kValidationFile))) in.validation = read_validation(ctx.out(kValidationFile));

  in.ranking = combine(in.raw_scores);
  for (const auto& e : in.ranking.excluded) {
    ctx.log("warning: model '" + e.model_id + "' excluded from ranking: " + e.reason);
  }
  for (Method m : in.ranking.zero_variance) {
    ctx.log("warning: method '" + std::string(to_string(m)) + "' is constant across models; its z-scores are 0");
  }
  const auto written = emit_report(in, ctx.out(kReportDir));
  ctx.log("report: " + std::to_string(written.size()) + " files in " + ctx.out(kReportDir).string());
}

// ---- mock-serve ----

void stage_mock_serve(const Context& ctx) {
  const auto& c = ctx.config;
  MockServer server(MockFixture::load(c.resolve(c.mock.fixture)));
  ctx.log("mock server listening on " + c.mock.host + ":" + std::to_string(c.mock.port));
  server.serve(c.mock.host, c.mock.port);
}

}  // namespace

RunConfig RunConfig::load(const fs::path& path) {
  const fs::path abs = fs::absolute(path);
  return parse(read_file(abs), abs.parent_path(), abs.string());
}

RunConfig RunConfig::parse(std::string_view json_text, const fs::path& base_dir, const std::string& source_name) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfig, source_name + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::kConfig, source_name + ": top level must be an object");

  RunConfig c;
  c.base_dir = base_dir;
  std::vector<std::string> problems;
  FieldReader root(j, "", problems);

  if (root.has("seed")) {
    std::uint64_t seed = 0;
    root.get("seed", seed);
    c.seed = seed;
  }
  root.path("out", c.out_dir);
  root.path("cache", c.cache_dir);

  auto corpus = root.child("corpus");
  corpus.path("congress", c.corpus.congress);
  corpus.path("reference", c.corpus.reference);
  corpus.path("reference_csv", c.corpus.reference_csv);
  corpus.paths("stopwords", c.corpus.stopwords);
  corpus.path("news", c.corpus.news);
  corpus.path("ratings", c.corpus.ratings);

  auto lex = root.child("lexicon");
  lex.get("terms_per_party", c.lexicon.terms_per_party);
  lex.get("reference_keep_top", c.lexicon.reference_keep_top);
  lex.get("reference_drop_top", c.lexicon.reference_drop_top);
  root.get("min_evidence", c.min_evidence);

  if (root.has("endpoints")) {
    try {
      c.endpoints = parse_endpoints(root.raw("endpoints").dump(), source_name);
    } catch (const Error& e) {
      problems.push_back(std::string("endpoints: ") + e.what());
    }
  } else if (root.has("endpoints_file")) {
    fs::path p;
    root.path("endpoints_file", p);
    try {
      c.endpoints = load_endpoints(c.resolve(p));
    } catch (const Error& e) {
      problems.push_back(std::string("endpoints_file: ") + e.what());
    }
  }
  root.get("models", c.models);

  auto h = root.child("harvest");
  h.path("policy_templates", c.harvest.policy_templates);
  h.path("figure_templates", c.harvest.figure_templates);
  h.path("topics", c.harvest.topics);
  h.path("figures", c.harvest.figures);
  h.get("policy_replicates", c.harvest.policy_replicates);
  h.get("figure_replicates", c.harvest.figure_replicates);
  h.get("concurrency", c.harvest.concurrency);
  h.get("max_retries", c.harvest.max_retries);
  h.get("initial_backoff_ms", c.harvest.initial_backoff_ms);

  auto judge = root.child("judge");
  judge.get("endpoint", c.judge.endpoint);
  judge.path("rubrics", c.judge.rubrics);
  judge.get("temperature", c.judge.temperature);

  auto tests = root.child("tests");
  tests.paths("banks", c.tests.banks);
  tests.path("prefixes", c.tests.prefixes);
  tests.path("suffixes", c.tests.suffixes);
  tests.path("fewshot_preamble", c.tests.fewshot_preamble);
  tests.get("base_models", c.tests.base_models);
  tests.get("runs", c.tests.runs);
  tests.get("temperature", c.tests.temperature);

  auto mock = root.child("mock");
  mock.path("fixture", c.mock.fixture);
  mock.get("host", c.mock.host);
  mock.get("port", c.mock.port);
  mock.get("embedded", c.mock.embedded);

  if (!problems.empty()) {
    std::string msg = source_name + ": " + std::to_string(problems.size()) + " problem(s)";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(ErrorKind::kConfig, msg);
  }
  return c;
}

fs::path RunConfig::resolve(const fs::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return (base_dir / p).lexically_normal();
}

std::uint64_t RunConfig::stage_seed(std::string_view stage) const {
  if (!seed) throw Error(ErrorKind::kConfig, "no seed configured");
  return derive_seed(*seed, stage);
}

std::vector<std::string> RunConfig::problems(Stage stage) const {
  std::vector<std::string> out;
  const fs::path o = this->out();
  auto stopwords = [&] {
    for (const auto& p : corpus.stopwords) need_file(*this, p, "corpus.stopwords entry", out);
  };
  auto endpoints_and_models = [&] {
    std::set<std::string> names;
    for (const auto& e : endpoints) {
      if (!names.insert(e.name).second) out.push_back("duplicate endpoint '" + e.name + "'");
    }
    if (models.empty()) out.push_back("models is empty");
    for (const auto& m : models) need_endpoint(*this, m, "model", out);
    if (harvest.concurrency == 0) out.push_back("harvest.concurrency must be positive");
    if (mock.embedded) need_file(*this, mock.fixture, "mock.fixture", out);
  };
  auto judge_cfg = [&] {
    if (judge.endpoint.empty()) {
      out.push_back("judge.endpoint is not set");
    } else {
      need_endpoint(*this, judge.endpoint, "judge.endpoint", out);
    }
    for (const char* f : {"viewpoint.txt", "sentiment.txt", "stance.txt"}) {
      if (judge.rubrics.empty() || !fs::is_regular_file(resolve(judge.rubrics) / f)) {
        out.push_back(std::string("judge rubric ") + f + " not found under " +
                      (judge.rubrics.empty() ? std::string("(judge.rubrics not set)") : resolve(judge.rubrics).string()));
      }
    }
  };
  auto tests_cfg = [&] {
    if (tests.banks.empty()) out.push_back("tests.banks is empty");
    for (const auto& b : tests.banks) need_file(*this, b, "tests.banks entry", out);
    need_file(*this, tests.prefixes, "tests.prefixes", out);
    need_file(*this, tests.suffixes, "tests.suffixes", out);
    if (!tests.base_models.empty()) need_file(*this, tests.fewshot_preamble, "tests.fewshot_preamble", out);
    if (tests.runs == 0) out.push_back("tests.runs must be positive");
  };
  auto seed_cfg = [&] {
    if (!seed) out.push_back("seed is not set (give it in the config or with --seed)");
  };

  switch (stage) {
    case Stage::kLexicon:
      need_file(*this, corpus.congress, "corpus.congress", out);
      if (corpus.reference.empty() && corpus.reference_csv.empty()) {
        out.push_back("one of corpus.reference or corpus.reference_csv must be set");
      } else if (!corpus.reference_csv.empty()) {
        need_file(*this, corpus.reference_csv, "corpus.reference_csv", out);
      } else {
        need_file(*this, corpus.reference, "corpus.reference", out);
      }
      stopwords();
      if (lexicon.terms_per_party == 0) out.push_back("lexicon.terms_per_party must be positive");
      if (lexicon.reference_drop_top >= lexicon.reference_keep_top) {
        out.push_back("lexicon.reference_drop_top must be below lexicon.reference_keep_top");
      }
      break;
    case Stage::kSlant:
      stopwords();
      need_output(o / kLexiconFile, "lexicon", out);
      need_output(o / kPartyCountsFile, "lexicon", out);
      need_output(o / kRecordsFile, "harvest", out);
      if (min_evidence == 0) out.push_back("min_evidence must be positive");
      break;
    case Stage::kHarvest:
      seed_cfg();
      endpoints_and_models();
      need_file(*this, harvest.policy_templates, "harvest.policy_templates", out);
      need_file(*this, harvest.figure_templates, "harvest.figure_templates", out);
      need_file(*this, harvest.topics, "harvest.topics", out);
      need_file(*this, harvest.figures, "harvest.figures", out);
      if (harvest.policy_replicates == 0 && harvest.figure_replicates == 0) {
        out.push_back("harvest replicates are both zero");
      }
      break;
    case Stage::kAnnotate:
      endpoints_and_models();
      judge_cfg();
      need_file(*this, harvest.policy_templates, "harvest.policy_templates", out);
      need_file(*this, harvest.figure_templates, "harvest.figure_templates", out);
      need_file(*this, harvest.topics, "harvest.topics", out);
      need_file(*this, harvest.figures, "harvest.figures", out);
      need_output(o / kRecordsFile, "harvest", out);
      break;
    case Stage::kTests:
      seed_cfg();
      endpoints_and_models();
      judge_cfg();
      tests_cfg();
      break;
    case Stage::kAggregate:
      need_file(*this, harvest.figures, "harvest.figures", out);
      tests_cfg();
      break;
    case Stage::kValidate:
      stopwords();
      need_file(*this, corpus.news, "corpus.news", out);
      need_file(*this, corpus.ratings, "corpus.ratings", out);
      need_output(o / kLexiconFile, "lexicon", out);
      need_output(o / kPartyCountsFile, "lexicon", out);
      break;
    case Stage::kMockServe:
      need_file(*this, mock.fixture, "mock.fixture", out);
      if (mock.port < 0 || mock.port > 65535) out.push_back("mock.port out of range");
      break;
  }
  for (const auto& e : endpoints) {
    try {
      validate_endpoint(e);
    } catch (const Error& err) {
      out.push_back("endpoint '" + e.name + "': " + err.what());
    }
  }
  return out;
}

void run_stage(Stage stage, RunConfig config, const RunOptions& options) {
  if (options.seed) config.seed = options.seed;
  if (options.out) config.out_dir = *options.out;
  if (options.cache) config.cache_dir = *options.cache;
  if (options.concurrency) {
    if (*options.concurrency == 0) throw Error(ErrorKind::kConfig, "--concurrency must be positive");
    config.harvest.concurrency = *options.concurrency;
  }

  const auto problems = config.problems(stage);
  if (!problems.empty()) {
    std::string msg = std::string(to_string(stage)) + ": " + std::to_string(problems.size()) + " problem(s)";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(ErrorKind::kConfig, msg);
  }

  Context ctx{std::move(config), options, options.log};
  if (!ctx.log) ctx.log = [](std::string_view m) { std::cerr << m << '\n'; };
  if (stage != Stage::kMockServe) fs::create_directories(ctx.config.out());

  switch (stage) {
    case Stage::kLexicon: stage_lexicon(ctx); break;
    case Stage::kSlant: stage_slant(ctx); break;
    case Stage::kHarvest: stage_harvest(ctx); break;
    case Stage::kAnnotate: stage_annotate(ctx); break;
    case Stage::kTests: stage_tests(ctx); break;
    case Stage::kAggregate: stage_aggregate(ctx); break;
    case Stage::kValidate: stage_validate(ctx); break;
    case Stage::kMockServe: stage_mock_serve(ctx); break;
  }
}

}  // namespace slantkit
