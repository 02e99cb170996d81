#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace slantkit {

// One chat-completion endpoint. `name` is the model id used in plans and
// records; `model` is the name sent on the wire.
struct Endpoint {
  std::string name;
  std::string url;             // base URL, e.g. http://127.0.0.1:8089
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string credential_env;  // environment variable holding the API key; may be empty
  double rate_limit = 0.0;     // requests per second, 0 = unlimited
  double timeout_seconds = 60.0;
};

// Throws kConfig if the URL is not http(s)://host[:port][/prefix].
void validate_endpoint(const Endpoint& endpoint);

// {"endpoints": [{"name": ..., "url": ..., "model": ..., "credential_env": ...,
//                 "rate_limit": ..., "path": ..., "timeout_seconds": ...}]}
std::vector<Endpoint> load_endpoints(const std::filesystem::path& path);
std::vector<Endpoint> parse_endpoints(std::string_view json_text, const std::string& source_name);

struct ChatRequest {
  std::string model;
  std::string prompt;  // the single user message
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;
};

// Serialized request body: {"model", "messages": [{"role": "user", "content"}],
// "temperature", optional "seed"}.
std::string chat_request_body(const ChatRequest& request);

struct ChatResponse {
  int http_status = 0;        // 0 when the request never reached a server
  std::string content;        // first assistant message
  std::string finish_reason;
  std::string error;          // transport or protocol error description
};

// Extracts choices[0].message.content and finish_reason. Fills `error` when
// the body does not have that shape.
ChatResponse parse_chat_response(int http_status, std::string_view body);

enum class ResponseClass {
  kOk,
  kRefused,    // empty content or a content-filter stop
  kTransient,  // worth retrying: connection failure, 408, 429, 5xx
  kFailed,     // permanent request failure (other 4xx, malformed body)
  kFatal,      // bad credentials; abort the run
};

ResponseClass classify(const ChatResponse& response);

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual ChatResponse send(const Endpoint& endpoint, const ChatRequest& request) = 0;
};

// HTTP POST transport. Credentials are read from the endpoint's environment
// variable at send time and never stored.
class HttpTransport final : public ChatTransport {
 public:
  ChatResponse send(const Endpoint& endpoint, const ChatRequest& request) override;
};

}  // namespace slantkit
