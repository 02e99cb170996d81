#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "slantkit/chat_client.hpp"

namespace slantkit {

// Canned chat-completion behavior loaded from a fixture file:
//
//   {"models": {
//      "<model>": {
//        "rules": [{"contains": ["phrase", ...], "responses": ["...", ...]}],
//        "default": ["..."],
//        "fail_first": 0
//      }}}
//
// A rule matches when the user message contains every phrase (ASCII case
// insensitive); the first matching rule wins, else "default". When a rule
// lists several responses, one is picked by a stable hash of the request seed
// and message, so identical requests always get identical answers.
// "fail_first": N answers the first N requests for that model with HTTP 503.
class MockFixture {
 public:
  static MockFixture load(const std::filesystem::path& path);
  static MockFixture parse(std::string_view json_text, const std::string& source_name);

  // The canned reply, or nullopt for an unknown model.
  std::optional<std::string> respond(const std::string& model, std::string_view message,
                                     std::optional<std::uint64_t> seed) const;
  std::uint32_t fail_first(const std::string& model) const;

 private:
  struct Rule {
    std::vector<std::string> contains;  // lowercased
    std::vector<std::string> responses;
  };
  struct Model {
    std::vector<Rule> rules;
    std::vector<std::string> fallback;
    std::uint32_t fail_first = 0;
  };
  std::map<std::string, Model, std::less<>> models_;
};

// Turns a chat-completion request body into the HTTP status and JSON body the
// mock server would send. `served` counts prior requests for the model.
std::pair<int, std::string> mock_chat_reply(const MockFixture& fixture, std::string_view request_body,
                                            std::uint32_t served);

// HTTP server speaking the same contract as HttpTransport expects.
class MockServer {
 public:
  explicit MockServer(MockFixture fixture);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds and serves on a background thread; port 0 picks a free port.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until stop() is called from elsewhere.
  void serve(const std::string& host, int port);
  void stop();

  std::string base_url() const;
  std::size_t requests() const noexcept { return requests_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<std::size_t> requests_{0};
};

// In-process transport answering from a fixture without sockets.
class FixtureTransport final : public ChatTransport {
 public:
  explicit FixtureTransport(MockFixture fixture) : fixture_(std::move(fixture)) {}
  ChatResponse send(const Endpoint& endpoint, const ChatRequest& request) override;
  std::size_t requests() const noexcept { return requests_.load(); }

 private:
  MockFixture fixture_;
  std::mutex mu_;
  std::map<std::string, std::uint32_t> served_;
  std::atomic<std::size_t> requests_{0};
};

}  // namespace slantkit
