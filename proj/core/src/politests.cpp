#include "slantkit/politests.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

#include "slantkit/error.hpp"
#include "slantkit/random.hpp"
#include "slantkit/text_io.hpp"

namespace slantkit {

namespace {

using json = nlohmann::json;

AxisRange parse_range(const json& j, const char* key, const std::string& source) {
  const auto& r = j.at(key);
  if (!r.is_array() || r.size() != 2) throw ParseError(source, 0, std::string(key) + " must be [min, max]");
  return {r[0].get<double>(), r[1].get<double>()};
}

// A little slack so weights like 0.1 summed many times do not trip the check.
constexpr double kRangeSlack = 1e-9;

}  // namespace

void validate_test(const TestDefinition& test) {
  auto fail = [&](const std::string& what) { throw Error(ErrorKind::kConfig, "test '" + test.id + "': " + what); };
  if (test.id.empty()) throw Error(ErrorKind::kConfig, "test without an id");
  if (!(test.econ_range.min < test.econ_range.max)) fail("degenerate econ range");
  if (!(test.social_range.min < test.social_range.max)) fail("degenerate social range");
  if (test.items.empty()) fail("no items");

  double econ_lo = 0.0, econ_hi = 0.0, social_lo = 0.0, social_hi = 0.0;
  for (std::size_t i = 0; i < test.items.size(); ++i) {
    const auto& item = test.items[i];
    const std::string where = "item " + std::to_string(i + 1);
    if (item.allowed_answers.size() < 2) fail(where + " needs at least two answers");
    if (item.weights.size() != item.allowed_answers.size()) fail(where + " has mismatched answers and weights");
    bool touches = false;
    double e_lo = 0.0, e_hi = 0.0, s_lo = 0.0, s_hi = 0.0;
    for (const auto& w : item.weights) {
      touches = touches || w.econ != 0.0 || w.social != 0.0;
      e_lo = std::min(e_lo, w.econ);
      e_hi = std::max(e_hi, w.econ);
      s_lo = std::min(s_lo, w.social);
      s_hi = std::max(s_hi, w.social);
    }
    if (!touches) fail(where + " contributes to neither axis");
    econ_lo += e_lo;
    econ_hi += e_hi;
    social_lo += s_lo;
    social_hi += s_hi;
  }
  if (econ_lo < test.econ_range.min - kRangeSlack || econ_hi > test.econ_range.max + kRangeSlack) {
    fail("achievable econ scores [" + format_number(econ_lo) + ", " + format_number(econ_hi) +
         "] exceed the declared range");
  }
  if (social_lo < test.social_range.min - kRangeSlack || social_hi > test.social_range.max + kRangeSlack) {
    fail("achievable social scores [" + format_number(social_lo) + ", " + format_number(social_hi) +
         "] exceed the declared range");
  }
}

TestDefinition parse_test(std::string_view json_text, const std::string& source_name) {
  TestDefinition t;
  try {
    const json j = json::parse(json_text);
    t.id = j.at("id").get<std::string>();
    t.econ_range = parse_range(j, "econ_range", source_name);
    t.social_range = parse_range(j, "social_range", source_name);
    for (const auto& ji : j.at("items")) {
      TestItem item;
      item.statement = ji.at("statement").get<std::string>();
      item.allowed_answers = ji.at("answers").get<std::vector<std::string>>();
      for (const auto& w : ji.at("weights")) {
        if (!w.is_array() || w.size() != 2) throw ParseError(source_name, 0, "weights must be [econ, social] pairs");
        item.weights.push_back({w[0].get<double>(), w[1].get<double>()});
      }
      t.items.push_back(std::move(item));
    }
  } catch (const json::exception& e) {
    throw ParseError(source_name, 0, e.what());
  }
  validate_test(t);
  return t;
}

TestDefinition load_test(const std::filesystem::path& path) { return parse_test(read_file(path), path.string()); }

std::string item_prompt(const TestItem& item, std::string_view prefix, std::string_view suffix) {
  std::string out;
  if (!prefix.empty()) {
    out.append(prefix);
    out.push_back(' ');
  }
  out += item.statement;
  out += "\nAllowed answers: ";
  for (std::size_t i = 0; i < item.allowed_answers.size(); ++i) {
    if (i > 0) out += ", ";
    out += item.allowed_answers[i];
  }
  if (!suffix.empty()) {
    out.push_back('\n');
    out.append(suffix);
  }
  return out;
}

std::string load_fewshot_preamble(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::kConfig, "few-shot preamble missing: " + path.string());
  std::string text = read_file(path);
  if (trim(text).empty()) throw Error(ErrorKind::kConfig, "few-shot preamble is empty: " + path.string());
  return text;
}

std::string fewshot_wrap(std::string_view preamble, std::string_view prompt) {
  std::string head = trim(preamble);
  if (head.empty()) throw Error(ErrorKind::kConfig, "few-shot preamble is empty");
  head += "\n\n";
  head.append(prompt);
  return head;
}

TestScore score(const TestDefinition& test, std::span<const StanceResult> stances) {
  if (stances.size() != test.items.size()) {
    throw Error(ErrorKind::kPrecondition, "score: " + std::to_string(stances.size()) + " stances for " +
                                              std::to_string(test.items.size()) + " items");
  }
  TestScore s;
  for (std::size_t i = 0; i < stances.size(); ++i) {
    if (!stances[i].chosen) {
      ++s.invalid_count;
      continue;
    }
    const auto& item = test.items[i];
    const auto it = std::find(item.allowed_answers.begin(), item.allowed_answers.end(), *stances[i].chosen);
    if (it == item.allowed_answers.end()) {
      throw Error(ErrorKind::kPrecondition, "score: answer '" + *stances[i].chosen + "' is not allowed for item " +
                                                std::to_string(i + 1) + " of test '" + test.id + "'");
    }
    const auto& w = item.weights[static_cast<std::size_t>(it - item.allowed_answers.begin())];
    s.econ_raw += w.econ;
    s.social_raw += w.social;
  }
  return s;
}

std::vector<AdministrationResult> administer(const TestDefinition& test, const std::string& model_id,
                                             std::span<const std::string> prefixes,
                                             std::span<const std::string> suffixes, const AdministerOptions& options,
                                             ExecutionEngine& engine, Judge& judge) {
  if (options.runs < 1) throw Error(ErrorKind::kPrecondition, "administer: runs must be >= 1");
  if (prefixes.empty() || suffixes.empty()) {
    throw Error(ErrorKind::kPrecondition, "administer: prefix and suffix pools must be non-empty");
  }

  std::vector<AdministrationResult> results(options.runs);
  std::vector<ChatJob> jobs;
  Rng rng(derive_seed(options.seed, "tests/" + test.id + "/" + model_id));
  for (std::uint32_t run = 0; run < options.runs; ++run) {
    auto& r = results[run];
    r.test_id = test.id;
    r.model_id = model_id;
    r.run_index = run;
    for (std::size_t i = 0; i < test.items.size(); ++i) {
      const auto& prefix = prefixes[rng.uniform_index(prefixes.size())];
      const auto& suffix = suffixes[rng.uniform_index(suffixes.size())];
      std::string prompt = item_prompt(test.items[i], prefix, suffix);
      if (options.fewshot_preamble) prompt = fewshot_wrap(*options.fewshot_preamble, prompt);
      ChatJob job;
      job.cache_key = json::array({"test", model_id, test.id, run, i, fnv1a64(prompt)}).dump();
      job.endpoint = model_id;
      job.prompt = prompt;
      job.temperature = options.temperature;
      job.seed = rng.next_u64();
      jobs.push_back(std::move(job));
      r.prompts.push_back(std::move(prompt));
    }
  }

  const auto replies = engine.run(jobs);
  std::vector<StanceInput> stance_inputs;
  stance_inputs.reserve(replies.size());
  std::size_t k = 0;
  for (auto& r : results) {
    for (std::size_t i = 0; i < test.items.size(); ++i, ++k) {
      const bool ok = replies[k].status == RecordStatus::kOk;
      r.responses.push_back(ok ? replies[k].text : std::string());
      stance_inputs.push_back({r.responses.back(), test.items[i].statement, test.items[i].allowed_answers});
    }
  }
  const auto stances = judge.detect_stances(stance_inputs);
  k = 0;
  for (auto& r : results) {
    r.stances.assign(stances.begin() + static_cast<std::ptrdiff_t>(k),
                     stances.begin() + static_cast<std::ptrdiff_t>(k + test.items.size()));
    k += test.items.size();
    const TestScore s = score(test, r.stances);
    r.econ_raw = s.econ_raw;
    r.social_raw = s.social_raw;
    r.invalid_count = s.invalid_count;
  }
  return results;
}

double rescale(double raw, const AxisRange& range) {
  if (!(range.min < range.max)) throw Error(ErrorKind::kConfig, "rescale: degenerate range");
  const double v = 2.0 * (raw - range.min) / (range.max - range.min) - 1.0;
  return std::clamp(v, -1.0, 1.0);
}

OrientationSummary rescale_and_average(std::span<const TestDefinition> tests,
                                       std::span<const AdministrationResult> results) {
  std::map<std::string, const TestDefinition*> defs;
  for (const auto& t : tests) defs.emplace(t.id, &t);

  struct Acc {
    double econ = 0.0;
    double social = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0;
  };
  std::map<std::string, Acc> per_test;
  for (const auto& r : results) {
    const auto it = defs.find(r.test_id);
    if (it == defs.end()) throw Error(ErrorKind::kConfig, "no declared ranges for test '" + r.test_id + "'");
    const TestDefinition& def = *it->second;
    auto& acc = per_test[r.test_id];
    if (r.invalid_count * 2 > def.items.size()) {
      ++acc.excluded;
      continue;
    }
    acc.econ += rescale(r.econ_raw, def.econ_range);
    acc.social += rescale(r.social_raw, def.social_range);
    ++acc.used;
  }
  if (per_test.empty()) throw Error(ErrorKind::kEmpty, "rescale_and_average: no administration results");

  OrientationSummary out;
  for (const auto& [id, acc] : per_test) {
    if (acc.used == 0) {
      throw Error(ErrorKind::kEmpty, "test '" + id + "' has no usable runs (" + std::to_string(acc.excluded) +
                                         " excluded for invalid answers)");
    }
    TestAxisSummary s;
    s.test_id = id;
    s.econ = acc.econ / static_cast<double>(acc.used);
    s.social = acc.social / static_cast<double>(acc.used);
    s.runs_used = acc.used;
    s.runs_excluded = acc.excluded;
    out.econ += s.econ;
    out.social += s.social;
    out.tests.push_back(std::move(s));
  }
  out.econ /= static_cast<double>(out.tests.size());
  out.social /= static_cast<double>(out.tests.size());
  return out;
}

std::string administration_csv(std::span<const AdministrationResult> results) {
  CsvWriter w{"model", "test", "run", "econ_raw", "social_raw", "invalid_count"};
  for (const auto& r : results) {
    w.cell(r.model_id).cell(r.test_id).cell(static_cast<unsigned long long>(r.run_index));
    w.cell(r.econ_raw).cell(r.social_raw).cell(r.invalid_count);
    w.end_row();
  }
  return w.str();
}

}  // namespace slantkit
