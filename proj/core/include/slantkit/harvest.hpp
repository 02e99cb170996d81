#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "slantkit/chat_client.hpp"

namespace slantkit {

inline constexpr std::string_view kSlotMarker = "{slot}";

enum class TemplateKind { kPolicy, kFigure, kTest };

std::string_view to_string(TemplateKind kind);
std::optional<TemplateKind> parse_template_kind(std::string_view text);

struct PromptTemplate {
  std::string id;
  std::string text;
  TemplateKind kind = TemplateKind::kPolicy;
};

// Checks the slot invariant: exactly one marker, or at most one for kTest.
void validate_template(const PromptTemplate& t);

// Replaces the slot marker with `slot_value` verbatim. Throws kPrecondition
// when a value is given for a slotless template or omitted for a slotted one.
std::string render_prompt(const PromptTemplate& t, std::optional<std::string_view> slot_value);

// JSON Lines: {"id": "...", "kind": "policy|figure|test", "text": "..."}
std::vector<PromptTemplate> load_templates(const std::filesystem::path& path);

enum class FigureCategory { kPresident, kSenator, kGovernor, kJustice, kJournalist, kWesternLeader };
enum class Alignment { kLeft, kCenter, kRight };

std::string_view to_string(FigureCategory c);
std::string_view to_string(Alignment a);
std::optional<Alignment> parse_alignment(std::string_view text);

struct PublicFigure {
  std::string name;
  FigureCategory category = FigureCategory::kPresident;
  Alignment alignment = Alignment::kCenter;
};

// CSV with columns name,category,alignment.
std::vector<PublicFigure> load_figures(const std::filesystem::path& path);

struct GenerationTask {
  std::size_t index = 0;  // position in the plan
  std::string model_id;
  std::string template_id;
  std::string slot_value;
  std::uint32_t replicate = 0;
  double temperature = 0.0;
  std::uint64_t task_seed = 0;

  // model_id/template_id/slot_value/replicate; unique within a plan.
  std::string record_id() const;
  // Cache identity: (model_id, template_id, slot_value, replicate, task_seed).
  std::string cache_key() const;

  friend bool operator==(const GenerationTask&, const GenerationTask&) = default;
};

// For every (model, slot value) pair, `replicates` tasks with templates drawn
// uniformly with replacement and temperatures uniform on [0, 1]. Order is
// model-major, then slot value, then replicate. Deterministic in `seed`.
std::vector<GenerationTask> plan_tasks(std::span<const std::string> models,
                                       std::span<const PromptTemplate> templates,
                                       std::span<const std::string> slot_values, std::uint32_t replicates,
                                       std::uint64_t seed);

std::string task_to_json(const GenerationTask& task);
GenerationTask task_from_json(std::string_view line, const std::string& source_name, std::size_t line_no);
void write_plan(const std::filesystem::path& path, std::span<const GenerationTask> tasks);
std::vector<GenerationTask> read_plan(const std::filesystem::path& path);

enum class RecordStatus { kOk, kRefused, kTransportError };

std::string_view to_string(RecordStatus s);
std::optional<RecordStatus> parse_record_status(std::string_view text);

struct GenerationRecord {
  GenerationTask task;
  std::string prompt;
  std::string response_text;
  std::string endpoint;
  std::string timestamp;  // UTC, ISO 8601
  RecordStatus status = RecordStatus::kTransportError;
  std::uint32_t attempts = 0;

  std::string id() const { return task.record_id(); }
};

std::string record_to_json(const GenerationRecord& record);
GenerationRecord record_from_json(std::string_view line, const std::string& source_name, std::size_t line_no);
void write_records(const std::filesystem::path& path, std::span<const GenerationRecord> records);
std::vector<GenerationRecord> read_records(const std::filesystem::path& path);

std::string utc_timestamp(std::chrono::system_clock::time_point t);

// Persistent response cache: one JSON object per line, appended as results
// arrive. Later lines for the same key win. All access is serialized.
class ResponseCache {
 public:
  struct Entry {
    RecordStatus status = RecordStatus::kOk;
    std::string text;
    std::string timestamp;
    std::uint32_t attempts = 0;
  };

  ResponseCache() = default;  // in-memory only
  explicit ResponseCache(std::filesystem::path file);

  std::optional<Entry> get(const std::string& key) const;
  void put(const std::string& key, const Entry& entry);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::optional<std::filesystem::path> file_;
  std::unordered_map<std::string, Entry> entries_;
};

// One request for the execution engine, from any stage.
struct ChatJob {
  std::string cache_key;
  std::string endpoint;  // endpoint name
  std::string prompt;
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;
};

struct JobResult {
  RecordStatus status = RecordStatus::kTransportError;
  std::string text;
  std::string timestamp;
  std::uint32_t attempts = 0;
  bool from_cache = false;
  std::string error;
};

struct EngineOptions {
  std::size_t max_in_flight = 4;
  std::uint32_t max_retries = 5;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{30000};
  std::function<void(std::string_view)> log;  // defaults to stderr
  std::function<std::chrono::system_clock::time_point()> clock;  // defaults to system_clock::now
};

struct EngineStats {
  std::size_t requests = 0;  // HTTP requests actually sent
  std::size_t retries = 0;
  std::size_t cache_hits = 0;
};

// Bounded-concurrency request runner with per-endpoint rate limiting,
// exponential backoff on transient failures, and a shared response cache.
// Results come back in job order regardless of completion order. Transport
// errors are never cached, so a re-run resumes where the last one failed.
class ExecutionEngine {
 public:
  ExecutionEngine(std::vector<Endpoint> endpoints, ChatTransport& transport, ResponseCache& cache,
                  EngineOptions options = {});
  ~ExecutionEngine();
  ExecutionEngine(const ExecutionEngine&) = delete;
  ExecutionEngine& operator=(const ExecutionEngine&) = delete;

  // Throws kConfig for unknown endpoints or fatal (credential) failures.
  std::vector<JobResult> run(std::span<const ChatJob> jobs);

  const Endpoint& endpoint(const std::string& name) const;
  bool has_endpoint(const std::string& name) const { return endpoints_.contains(name); }
  EngineStats stats() const;

 private:
  struct RateLimiter;

  JobResult run_one(const ChatJob& job);
  void log(std::string_view message) const;

  std::map<std::string, Endpoint> endpoints_;
  std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
  ChatTransport& transport_;
  ResponseCache& cache_;
  EngineOptions options_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> retries_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

// Renders each task's prompt and runs it; one record per task, in task order.
// Templates are looked up by id.
std::vector<GenerationRecord> execute(std::span<const GenerationTask> tasks,
                                      std::span<const PromptTemplate> templates, ExecutionEngine& engine);

}  // namespace slantkit
