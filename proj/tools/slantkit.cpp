#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "slantkit/error.hpp"
#include "slantkit/pipeline.hpp"

namespace {

// Exit status per error category; 1 is left for unexpected failures.
int exit_code(slantkit::ErrorKind kind) {
  using slantkit::ErrorKind;
  switch (kind) {
    case ErrorKind::kConfig: return 2;
    case ErrorKind::kParse: return 3;
    case ErrorKind::kIo: return 4;
    case ErrorKind::kTransport: return 5;
    case ErrorKind::kPrecondition:
    case ErrorKind::kDegenerate:
    case ErrorKind::kInsufficientEvidence:
    case ErrorKind::kEmpty: return 6;
  }
  return 1;
}

constexpr int kUsageExit = 64;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slantkit: measure political slant of language-model output"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, cache, fixture;
  std::optional<std::size_t> concurrency;
  std::optional<int> port;
  bool dry_run = false;

  app.add_option("--config", config_path, "pipeline configuration (JSON)");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--out", out, "override the output directory");
  app.add_option("--cache", cache, "override the response cache directory");
  app.add_option("--concurrency", concurrency, "maximum requests in flight");
  app.add_flag("--dry-run", dry_run, "write the plan without contacting any endpoint");

  struct Entry {
    const char* name;
    const char* help;
  };
  const Entry entries[] = {
      {"lexicon", "build the partisan lexicon from the congressional corpus"},
      {"slant", "score harvested records against the party references"},
      {"harvest", "plan and execute model generations"},
      {"annotate", "label records for viewpoint and sentiment with the judge model"},
      {"tests", "administer and score the political orientation tests"},
      {"aggregate", "combine the four methods into a ranking and write the report"},
      {"validate", "correlate news-outlet slant with outlet ratings"},
      {"mock-serve", "serve a fixture-backed chat-completion endpoint"},
  };
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    if (std::string_view(e.name) == "mock-serve") {
      sub->add_option("--fixture", fixture, "fixture JSON (overrides mock.fixture)");
      sub->add_option("--port", port, "port (overrides mock.port)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (e.get_exit_code() != 0) std::cerr << app.help();
    return kUsageExit;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const auto stage = slantkit::parse_stage(name);
  if (!stage) {
    std::cerr << app.help();
    return kUsageExit;
  }

  try {
    slantkit::RunConfig config;
    if (!config_path.empty()) {
      config = slantkit::RunConfig::load(config_path);
    } else if (*stage == slantkit::Stage::kMockServe) {
      config.base_dir = std::filesystem::current_path();
    } else {
      std::cerr << "error [config]: --config is required for `" << name << "`\n";
      return exit_code(slantkit::ErrorKind::kConfig);
    }
    if (fixture) config.mock.fixture = std::filesystem::absolute(*fixture);
    if (port) config.mock.port = *port;

    slantkit::RunOptions options;
    options.seed = seed;
    if (out) options.out = std::filesystem::absolute(*out);
    if (cache) options.cache = std::filesystem::absolute(*cache);
    options.concurrency = concurrency;
    options.dry_run = dry_run;
    slantkit::run_stage(*stage, std::move(config), options);
  } catch (const slantkit::Error& e) {
    std::cerr << "error [" << slantkit::to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
