#include "slantkit/mock_server.hpp"

#include <httplib.h>
#include <json.hpp>

#include "slantkit/error.hpp"
#include "slantkit/random.hpp"
#include "slantkit/text_io.hpp"

namespace slantkit {

namespace {

using json = nlohmann::json;

std::vector<std::string> string_list(const json& j) {
  if (j.is_string()) return {j.get<std::string>()};
  return j.get<std::vector<std::string>>();
}

json completion_body(const std::string& model, const std::string& content, std::size_t id) {
  return json{{"id", "mock-" + std::to_string(id)},
              {"object", "chat.completion"},
              {"model", model},
              {"choices", json::array({{{"index", 0},
                                        {"message", {{"role", "assistant"}, {"content", content}}},
                                        {"finish_reason", content.empty() ? "content_filter" : "stop"}}})}};
}

}  // namespace

MockFixture MockFixture::parse(std::string_view json_text, const std::string& source_name) {
  MockFixture out;
  try {
    const json j = json::parse(json_text);
    for (const auto& [name, entry] : j.at("models").items()) {
      Model m;
      if (const auto it = entry.find("rules"); it != entry.end()) {
        for (const auto& r : *it) {
          Rule rule;
          for (auto& c : string_list(r.at("contains"))) rule.contains.push_back(to_lower_ascii(c));
          rule.responses = string_list(r.at("responses"));
          if (rule.responses.empty()) throw ParseError(source_name, 0, "rule without responses");
          m.rules.push_back(std::move(rule));
        }
      }
      if (const auto it = entry.find("default"); it != entry.end()) m.fallback = string_list(*it);
      m.fail_first = entry.value("fail_first", 0U);
      out.models_.emplace(name, std::move(m));
    }
  } catch (const json::exception& e) {
    throw ParseError(source_name, 0, e.what());
  }
  return out;
}

MockFixture MockFixture::load(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

std::optional<std::string> MockFixture::respond(const std::string& model, std::string_view message,
                                                std::optional<std::uint64_t> seed) const {
  const auto it = models_.find(model);
  if (it == models_.end()) return std::nullopt;
  const std::string lowered = to_lower_ascii(message);
  const std::vector<std::string>* pool = &it->second.fallback;
  for (const auto& rule : it->second.rules) {
    const bool all = std::all_of(rule.contains.begin(), rule.contains.end(),
                                 [&](const std::string& c) { return lowered.find(c) != std::string::npos; });
    if (all) {
      pool = &rule.responses;
      break;
    }
  }
  if (pool->empty()) return std::string();
  const std::uint64_t h = fnv1a64(message, derive_seed(seed.value_or(0), model));
  return (*pool)[h % pool->size()];
}

std::uint32_t MockFixture::fail_first(const std::string& model) const {
  const auto it = models_.find(model);
  return it == models_.end() ? 0 : it->second.fail_first;
}

std::pair<int, std::string> mock_chat_reply(const MockFixture& fixture, std::string_view request_body,
                                            std::uint32_t served) {
  json req;
  try {
    req = json::parse(request_body);
  } catch (const json::parse_error& e) {
    return {400, json{{"error", {{"message", e.what()}}}}.dump()};
  }
  if (!req.contains("model") || !req["model"].is_string() || !req.contains("messages") ||
      !req["messages"].is_array() || req["messages"].empty()) {
    return {400, json{{"error", {{"message", "request needs model and messages"}}}}.dump()};
  }
  const std::string model = req["model"].get<std::string>();
  std::string message;
  for (const auto& m : req["messages"]) {
    if (m.value("role", "") == "user") message = m.value("content", "");
  }
  std::optional<std::uint64_t> seed;
  if (req.contains("seed") && req["seed"].is_number_unsigned()) seed = req["seed"].get<std::uint64_t>();

  if (served < fixture.fail_first(model)) {
    return {503, json{{"error", {{"message", "mock: scripted failure"}}}}.dump()};
  }
  const auto reply = fixture.respond(model, message, seed);
  if (!reply) return {404, json{{"error", {{"message", "mock: unknown model " + model}}}}.dump()};
  return {200, completion_body(model, *reply, served).dump()};
}

struct MockServer::Impl {
  MockFixture fixture;
  httplib::Server server;
  std::thread thread;
  std::mutex mu;
  std::map<std::string, std::uint32_t> served;
  std::string host;
  int port = 0;
};

MockServer::MockServer(MockFixture fixture) : impl_(std::make_unique<Impl>()) {
  impl_->fixture = std::move(fixture);
  impl_->server.Post(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    std::uint32_t served = 0;
    {
      std::string model;
      try {
        model = json::parse(req.body).value("model", "");
      } catch (const json::exception&) {
      }
      std::lock_guard lock(impl_->mu);
      served = impl_->served[model]++;
    }
    const auto [status, body] = mock_chat_reply(impl_->fixture, req.body, served);
    res.status = status;
    res.set_content(body, "application/json");
  });
}

MockServer::~MockServer() { stop(); }

int MockServer::start(const std::string& host, int port) {
  impl_->host = host;
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    if (!impl_->server.bind_to_port(host, port)) impl_->port = -1;
    else impl_->port = port;
  }
  if (impl_->port <= 0) throw Error(ErrorKind::kIo, "mock server cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void MockServer::serve(const std::string& host, int port) {
  impl_->host = host;
  impl_->port = port;
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorKind::kIo, "mock server cannot listen on " + host + ":" + std::to_string(port));
  }
}

void MockServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockServer::base_url() const { return "http://" + impl_->host + ":" + std::to_string(impl_->port); }

ChatResponse FixtureTransport::send(const Endpoint& /*endpoint*/, const ChatRequest& request) {
  ++requests_;
  std::uint32_t served = 0;
  {
    std::lock_guard lock(mu_);
    served = served_[request.model]++;
  }
  const auto [status, body] = mock_chat_reply(fixture_, chat_request_body(request), served);
  return parse_chat_response(status, body);
}

}  // namespace slantkit
