#include "slantkit/harvest.hpp"

#include <algorithm>
#include <ctime>
#include <exception>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "slantkit/error.hpp"
#include "slantkit/random.hpp"
#include "slantkit/text_io.hpp"

namespace slantkit {

namespace {

using json = nlohmann::json;

std::size_t count_markers(std::string_view text) {
  std::size_t n = 0;
  for (auto pos = text.find(kSlotMarker); pos != std::string_view::npos;
       pos = text.find(kSlotMarker, pos + kSlotMarker.size())) {
    ++n;
  }
  return n;
}

template <typename F>
auto with_line(const std::string& source, std::size_t line, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(source, line, e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------- templates

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kPolicy: return "policy";
    case TemplateKind::kFigure: return "figure";
    case TemplateKind::kTest: return "test";
  }
  return "policy";
}

std::optional<TemplateKind> parse_template_kind(std::string_view text) {
  if (text == "policy") return TemplateKind::kPolicy;
  if (text == "figure") return TemplateKind::kFigure;
  if (text == "test") return TemplateKind::kTest;
  return std::nullopt;
}

void validate_template(const PromptTemplate& t) {
  const std::size_t n = count_markers(t.text);
  if (t.kind == TemplateKind::kTest ? n > 1 : n != 1) {
    throw Error(ErrorKind::kPrecondition, "template '" + t.id + "' has " + std::to_string(n) +
                                              " slot markers; expected " +
                                              (t.kind == TemplateKind::kTest ? "at most one" : "exactly one"));
  }
}

std::string render_prompt(const PromptTemplate& t, std::optional<std::string_view> slot_value) {
  const auto pos = t.text.find(kSlotMarker);
  if (pos == std::string::npos) {
    if (slot_value) {
      throw Error(ErrorKind::kPrecondition, "template '" + t.id + "' has no slot for value '" +
                                                std::string(*slot_value) + "'");
    }
    return t.text;
  }
  if (!slot_value) throw Error(ErrorKind::kPrecondition, "template '" + t.id + "' needs a slot value");
  std::string out;
  out.reserve(t.text.size() + slot_value->size());
  out.append(t.text, 0, pos);
  out.append(*slot_value);
  out.append(t.text, pos + kSlotMarker.size());
  return out;
}

std::vector<PromptTemplate> load_templates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open template file " + path.string());
  std::vector<PromptTemplate> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  std::streamoff good_end = 0;
  bool torn = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      good_end = in.tellg();
      continue;
    }
    PromptTemplate t = with_line(path.string(), line_no, [&] {
      const json j = json::parse(line);
      PromptTemplate t;
      t.id = j.at("id").get<std::string>();
      t.text = j.at("text").get<std::string>();
      const auto kind = parse_template_kind(j.value("kind", std::string("policy")));
      if (!kind) throw ParseError(path.string(), line_no, "unknown template kind");
      t.kind = *kind;
      return t;
    });
    try {
      validate_template(t);
    } catch (const Error& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
    if (!ids.insert(t.id).second) throw ParseError(path.string(), line_no, "duplicate template id '" + t.id + "'");
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------- figures

std::string_view to_string(FigureCategory c) {
  switch (c) {
    case FigureCategory::kPresident: return "president";
    case FigureCategory::kSenator: return "senator";
    case FigureCategory::kGovernor: return "governor";
    case FigureCategory::kJustice: return "justice";
    case FigureCategory::kJournalist: return "journalist";
    case FigureCategory::kWesternLeader: return "western_leader";
  }
  return "president";
}

std::string_view to_string(Alignment a) {
  switch (a) {
    case Alignment::kLeft: return "left";
    case Alignment::kCenter: return "center";
    case Alignment::kRight: return "right";
  }
  return "center";
}

std::optional<Alignment> parse_alignment(std::string_view text) {
  const auto s = to_lower_ascii(text);
  if (s == "left") return Alignment::kLeft;
  if (s == "center" || s == "centre") return Alignment::kCenter;
  if (s == "right") return Alignment::kRight;
  return std::nullopt;
}

std::vector<PublicFigure> load_figures(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const auto name_col = table.column("name");
  const auto cat_col = table.column("category");
  const auto align_col = table.column("alignment");
  static const std::map<std::string, FigureCategory, std::less<>> kCategories = {
      {"president", FigureCategory::kPresident},   {"senator", FigureCategory::kSenator},
      {"governor", FigureCategory::kGovernor},     {"justice", FigureCategory::kJustice},
      {"journalist", FigureCategory::kJournalist}, {"western_leader", FigureCategory::kWesternLeader},
  };
  std::vector<PublicFigure> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    PublicFigure f;
    f.name = trim(row[name_col]);
    if (f.name.empty()) throw ParseError(path.string(), r + 2, "empty figure name");
    const auto cat = kCategories.find(to_lower_ascii(trim(row[cat_col])));
    if (cat == kCategories.end()) throw ParseError(path.string(), r + 2, "unknown category '" + row[cat_col] + "'");
    f.category = cat->second;
    const auto align = parse_alignment(trim(row[align_col]));
    if (!align) throw ParseError(path.string(), r + 2, "missing or unknown alignment '" + row[align_col] + "'");
    f.alignment = *align;
    out.push_back(std::move(f));
  }
  return out;
}

// ---------------------------------------------------------------- tasks

std::string GenerationTask::record_id() const {
  return model_id + '/' + template_id + '/' + slot_value + '/' + std::to_string(replicate);
}

std::string GenerationTask::cache_key() const {
  return json::array({"generate", model_id, template_id, slot_value, replicate, task_seed}).dump();
}

std::vector<GenerationTask> plan_tasks(std::span<const std::string> models,
                                       std::span<const PromptTemplate> templates,
                                       std::span<const std::string> slot_values, std::uint32_t replicates,
                                       std::uint64_t seed) {
  if (templates.empty()) throw Error(ErrorKind::kEmpty, "plan_tasks: empty template set");
  if (replicates < 1) throw Error(ErrorKind::kPrecondition, "plan_tasks: replicates must be >= 1");

  Rng rng(seed);
  std::vector<GenerationTask> out;
  out.reserve(models.size() * slot_values.size() * replicates);
  for (const auto& model : models) {
    for (const auto& slot : slot_values) {
      for (std::uint32_t r = 0; r < replicates; ++r) {
        GenerationTask t;
        t.index = out.size();
        t.model_id = model;
        t.slot_value = slot;
        t.replicate = r;
        t.template_id = templates[rng.uniform_index(templates.size())].id;
        t.temperature = rng.uniform01_closed();
        t.task_seed = rng.next_u64();
        out.push_back(std::move(t));
      }
    }
  }
  return out;
}

std::string task_to_json(const GenerationTask& task) {
  return json{{"index", task.index},
              {"model_id", task.model_id},
              {"template_id", task.template_id},
              {"slot_value", task.slot_value},
              {"replicate", task.replicate},
              {"temperature", task.temperature},
              {"task_seed", task.task_seed}}
      .dump();
}

namespace {

GenerationTask task_from_object(const json& j) {
  GenerationTask t;
  t.index = j.at("index").get<std::size_t>();
  t.model_id = j.at("model_id").get<std::string>();
  t.template_id = j.at("template_id").get<std::string>();
  t.slot_value = j.at("slot_value").get<std::string>();
  t.replicate = j.at("replicate").get<std::uint32_t>();
  t.temperature = j.at("temperature").get<double>();
  t.task_seed = j.at("task_seed").get<std::uint64_t>();
  return t;
}

template <typename T, typename Parse>
std::vector<T> read_jsonl(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  std::streamoff good_end = 0;
  bool torn = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      good_end = in.tellg();
      continue;
    }
    out.push_back(parse(line, path.string(), line_no));
  }
  return out;
}

}  // namespace

GenerationTask task_from_json(std::string_view line, const std::string& source_name, std::size_t line_no) {
  return with_line(source_name, line_no, [&] {
    GenerationTask t = task_from_object(json::parse(line));
    if (!(t.temperature >= 0.0 && t.temperature <= 1.0)) {
      throw ParseError(source_name, line_no, "temperature outside [0, 1]");
    }
    return t;
  });
}

void write_plan(const std::filesystem::path& path, std::span<const GenerationTask> tasks) {
  std::string out;
  for (const auto& t : tasks) out += task_to_json(t) + '\n';
  write_file(path, out);
}

std::vector<GenerationTask> read_plan(const std::filesystem::path& path) {
  return read_jsonl<GenerationTask>(path, task_from_json);
}

// ---------------------------------------------------------------- records

std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::kOk: return "ok";
    case RecordStatus::kRefused: return "refused";
    case RecordStatus::kTransportError: return "transport_error";
  }
  return "transport_error";
}

std::optional<RecordStatus> parse_record_status(std::string_view text) {
  if (text == "ok") return RecordStatus::kOk;
  if (text == "refused") return RecordStatus::kRefused;
  if (text == "transport_error") return RecordStatus::kTransportError;
  return std::nullopt;
}

std::string record_to_json(const GenerationRecord& r) {
  json j = json::parse(task_to_json(r.task));
  j["id"] = r.id();
  j["prompt"] = r.prompt;
  j["response_text"] = r.response_text;
  j["endpoint"] = r.endpoint;
  j["timestamp"] = r.timestamp;
  j["status"] = std::string(to_string(r.status));
  j["attempts"] = r.attempts;
  return j.dump();
}

GenerationRecord record_from_json(std::string_view line, const std::string& source_name, std::size_t line_no) {
  return with_line(source_name, line_no, [&] {
    const json j = json::parse(line);
    GenerationRecord r;
    r.task = task_from_object(j);
    r.prompt = j.value("prompt", std::string());
    r.response_text = j.at("response_text").get<std::string>();
    r.endpoint = j.value("endpoint", std::string());
    r.timestamp = j.value("timestamp", std::string());
    r.attempts = j.value("attempts", 0U);
    const auto status = parse_record_status(j.at("status").get<std::string>());
    if (!status) throw ParseError(source_name, line_no, "unknown record status");
    r.status = *status;
    if (r.status == RecordStatus::kOk && r.response_text.empty()) {
      throw ParseError(source_name, line_no, "ok record with empty response_text");
    }
    return r;
  });
}

void write_records(const std::filesystem::path& path, std::span<const GenerationRecord> records) {
  std::string out;
  for (const auto& r : records) out += record_to_json(r) + '\n';
  write_file(path, out);
}

std::vector<GenerationRecord> read_records(const std::filesystem::path& path) {
  return read_jsonl<GenerationRecord>(path, record_from_json);
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------- cache

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(*file_)) {
    if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
    return;
  }
  std::ifstream in(*file_);
  if (!in) throw Error(ErrorKind::kIo, "cannot open cache " + file_->string());
  std::string line;
  std::size_t line_no = 0;
  std::streamoff good_end = 0;
  bool torn = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      good_end = in.tellg();
      continue;
    }
    try {
      const json j = json::parse(line);
      Entry e;
      const auto status = parse_record_status(j.at("status").get<std::string>());
      if (!status) throw ParseError(file_->string(), line_no, "bad status");
      e.status = *status;
      e.text = j.at("text").get<std::string>();
      e.timestamp = j.value("timestamp", std::string());
      e.attempts = j.value("attempts", 0U);
      entries_[j.at("key").get<std::string>()] = std::move(e);
      good_end = in.eof() ? static_cast<std::streamoff>(std::filesystem::file_size(*file_))
                          : static_cast<std::streamoff>(in.tellg());
    } catch (const json::exception& ex) {
      // A torn final line from an interrupted run is dropped; anything else is corruption.
      if (in.peek() != std::char_traits<char>::eof()) throw ParseError(file_->string(), line_no, ex.what());
      torn = true;
      break;
    }
  }
  in.close();
  // Cut the torn tail so later appends start on a fresh line.
  if (torn) std::filesystem::resize_file(*file_, static_cast<std::uintmax_t>(good_end));
}

std::optional<ResponseCache::Entry> ResponseCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& key, const Entry& entry) {
  std::lock_guard lock(mu_);
  entries_[key] = entry;
  if (!file_) return;
  std::ofstream out(*file_, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot append to cache " + file_->string());
  out << json{{"key", key},
              {"status", std::string(to_string(entry.status))},
              {"text", entry.text},
              {"timestamp", entry.timestamp},
              {"attempts", entry.attempts}}
             .dump()
      << '\n';
  out.flush();
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------- engine

struct ExecutionEngine::RateLimiter {
  std::mutex mu;
  std::chrono::steady_clock::duration interval{};
  std::chrono::steady_clock::time_point next{};

  void acquire() {
    if (interval == std::chrono::steady_clock::duration::zero()) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mu);
      const auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next);
      next = slot + interval;
    }
    std::this_thread::sleep_until(slot);
  }
};

ExecutionEngine::ExecutionEngine(std::vector<Endpoint> endpoints, ChatTransport& transport, ResponseCache& cache,
                                 EngineOptions options)
    : transport_(transport), cache_(cache), options_(std::move(options)) {
  for (auto& ep : endpoints) {
    validate_endpoint(ep);
    auto limiter = std::make_unique<RateLimiter>();
    if (ep.rate_limit > 0.0) {
      limiter->interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(1.0 / ep.rate_limit));
    }
    limiters_.emplace(ep.name, std::move(limiter));
    const std::string name = ep.name;
    if (!endpoints_.emplace(name, std::move(ep)).second) {
      throw Error(ErrorKind::kConfig, "duplicate endpoint name '" + name + "'");
    }
  }
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
  if (!options_.clock) options_.clock = [] { return std::chrono::system_clock::now(); };
}

ExecutionEngine::~ExecutionEngine() = default;

const Endpoint& ExecutionEngine::endpoint(const std::string& name) const {
  const auto it = endpoints_.find(name);
  if (it == endpoints_.end()) throw Error(ErrorKind::kConfig, "unknown endpoint '" + name + "'");
  return it->second;
}

EngineStats ExecutionEngine::stats() const { return {requests_.load(), retries_.load(), cache_hits_.load()}; }

void ExecutionEngine::log(std::string_view message) const {
  if (options_.log) {
    options_.log(message);
  } else {
    std::cerr << message << '\n';
  }
}

JobResult ExecutionEngine::run_one(const ChatJob& job) {
  if (auto hit = cache_.get(job.cache_key)) {
    ++cache_hits_;
    return JobResult{hit->status, hit->text, hit->timestamp, hit->attempts, true, {}};
  }
  const Endpoint& ep = endpoint(job.endpoint);
  RateLimiter& limiter = *limiters_.at(job.endpoint);
  const ChatRequest request{ep.model, job.prompt, job.temperature, job.seed};

  JobResult result;
  auto backoff = options_.initial_backoff;
  for (std::uint32_t attempt = 0;; ++attempt) {
    limiter.acquire();
    ++requests_;
    const ChatResponse response = transport_.send(ep, request);
    result.attempts = attempt + 1;
    const ResponseClass cls = classify(response);
    if (cls == ResponseClass::kFatal) {
      throw Error(ErrorKind::kConfig, "endpoint '" + ep.name + "' rejected credentials (HTTP " +
                                          std::to_string(response.http_status) + ")");
    }
    if (cls == ResponseClass::kOk || cls == ResponseClass::kRefused) {
      result.status = cls == ResponseClass::kOk ? RecordStatus::kOk : RecordStatus::kRefused;
      result.text = response.content;
      result.timestamp = utc_timestamp(options_.clock());
      cache_.put(job.cache_key, {result.status, result.text, result.timestamp, result.attempts});
      return result;
    }
    result.error = response.error.empty() ? "HTTP " + std::to_string(response.http_status) : response.error;
    if (cls == ResponseClass::kFailed || attempt >= options_.max_retries) {
      result.status = RecordStatus::kTransportError;
      result.timestamp = utc_timestamp(options_.clock());
      log("request to " + ep.name + " failed after " + std::to_string(result.attempts) +
          " attempt(s): " + result.error);
      return result;
    }
    ++retries_;
    log("retry " + std::to_string(attempt + 1) + " for " + ep.name + " after " + result.error);
    std::this_thread::sleep_for(backoff);
    backoff = std::min(backoff * 2, options_.max_backoff);
  }
}

std::vector<JobResult> ExecutionEngine::run(std::span<const ChatJob> jobs) {
  for (const auto& job : jobs) endpoint(job.endpoint);

  std::vector<JobResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        results[i] = run_one(jobs[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        abort = true;
      }
    }
  };

  const std::size_t n_workers = std::min(options_.max_in_flight, jobs.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::vector<GenerationRecord> execute(std::span<const GenerationTask> tasks,
                                      std::span<const PromptTemplate> templates, ExecutionEngine& engine) {
  std::map<std::string, const PromptTemplate*, std::less<>> by_id;
  for (const auto& t : templates) by_id.emplace(t.id, &t);

  std::vector<ChatJob> jobs;
  std::vector<GenerationRecord> records(tasks.size());
  jobs.reserve(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& task = tasks[i];
    const auto it = by_id.find(task.template_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::kConfig, "task references unknown template '" + task.template_id + "'");
    }
    records[i].task = task;
    records[i].prompt = render_prompt(*it->second, task.slot_value);
    records[i].endpoint = engine.endpoint(task.model_id).url;
    jobs.push_back(ChatJob{task.cache_key(), task.model_id, records[i].prompt, task.temperature, task.task_seed});
  }
  const auto results = engine.run(jobs);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    records[i].response_text = results[i].text;
    records[i].timestamp = results[i].timestamp;
    records[i].status = results[i].status;
    records[i].attempts = results[i].attempts;
  }
  return records;
}

}  // namespace slantkit
