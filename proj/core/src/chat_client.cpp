#include "slantkit/chat_client.hpp"

#include <cstdlib>
#include <regex>

#include <httplib.h>
#include <json.hpp>

#include "slantkit/error.hpp"
#include "slantkit/text_io.hpp"

namespace slantkit {

namespace {

using json = nlohmann::json;

struct ParsedUrl {
  std::string scheme_host_port;  // what httplib::Client accepts
  std::string base_path;
};

std::optional<ParsedUrl> parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?)://([A-Za-z0-9.\-]+|\[[0-9A-Fa-f:]+\])(:([0-9]{1,5}))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) return std::nullopt;
  if (m[4].matched && std::stoi(m[4].str()) > 65535) return std::nullopt;
  ParsedUrl out;
  out.scheme_host_port = m[1].str() + "://" + m[2].str() + m[3].str();
  out.base_path = m[5].matched ? m[5].str() : std::string();
  while (!out.base_path.empty() && out.base_path.back() == '/') out.base_path.pop_back();
  return out;
}

}  // namespace

void validate_endpoint(const Endpoint& endpoint) {
  if (endpoint.name.empty()) throw Error(ErrorKind::kConfig, "endpoint without a name");
  if (!parse_url(endpoint.url)) {
    throw Error(ErrorKind::kConfig, "endpoint '" + endpoint.name + "': malformed URL '" + endpoint.url + "'");
  }
  if (endpoint.model.empty()) {
    throw Error(ErrorKind::kConfig, "endpoint '" + endpoint.name + "': missing model name");
  }
  if (endpoint.rate_limit < 0.0) {
    throw Error(ErrorKind::kConfig, "endpoint '" + endpoint.name + "': negative rate limit");
  }
}

std::vector<Endpoint> parse_endpoints(std::string_view json_text, const std::string& source_name) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(source_name, 0, e.what());
  }
  const json& list = j.is_object() && j.contains("endpoints") ? j.at("endpoints") : j;
  if (!list.is_array()) throw ParseError(source_name, 0, "expected an array of endpoints");
  std::vector<Endpoint> out;
  for (const auto& e : list) {
    Endpoint ep;
    try {
      ep.name = e.at("name").get<std::string>();
      ep.url = e.at("url").get<std::string>();
      ep.model = e.value("model", ep.name);
      ep.path = e.value("path", ep.path);
      ep.credential_env = e.value("credential_env", std::string());
      ep.rate_limit = e.value("rate_limit", 0.0);
      ep.timeout_seconds = e.value("timeout_seconds", ep.timeout_seconds);
    } catch (const json::exception& ex) {
      throw ParseError(source_name, 0, std::string("endpoint entry: ") + ex.what());
    }
    validate_endpoint(ep);
    out.push_back(std::move(ep));
  }
  return out;
}

std::vector<Endpoint> load_endpoints(const std::filesystem::path& path) {
  return parse_endpoints(read_file(path), path.string());
}

std::string chat_request_body(const ChatRequest& request) {
  json body = {
      {"model", request.model},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.temperature},
  };
  if (request.seed) body["seed"] = *request.seed;
  return body.dump();
}

ChatResponse parse_chat_response(int http_status, std::string_view body) {
  ChatResponse r;
  r.http_status = http_status;
  if (http_status < 200 || http_status >= 300) {
    r.error = "HTTP " + std::to_string(http_status);
    return r;
  }
  try {
    const json j = json::parse(body);
    const json& choice = j.at("choices").at(0);
    const json& content = choice.at("message").at("content");
    r.content = content.is_null() ? std::string() : content.get<std::string>();
    if (const auto it = choice.find("finish_reason"); it != choice.end() && it->is_string()) {
      r.finish_reason = it->get<std::string>();
    }
  } catch (const json::exception& e) {
    r.error = std::string("malformed chat response: ") + e.what();
  }
  return r;
}

ResponseClass classify(const ChatResponse& response) {
  const int s = response.http_status;
  if (s == 0) return ResponseClass::kTransient;
  if (s == 401 || s == 403) return ResponseClass::kFatal;
  if (s == 408 || s == 429 || s >= 500) return ResponseClass::kTransient;
  if (s < 200 || s >= 300) return ResponseClass::kFailed;
  if (!response.error.empty()) return ResponseClass::kFailed;
  if (response.finish_reason == "content_filter" || trim(response.content).empty()) {
    return ResponseClass::kRefused;
  }
  return ResponseClass::kOk;
}

ChatResponse HttpTransport::send(const Endpoint& endpoint, const ChatRequest& request) {
  const auto url = parse_url(endpoint.url);
  if (!url) throw Error(ErrorKind::kConfig, "malformed endpoint URL '" + endpoint.url + "'");

  httplib::Client client(url->scheme_host_port);
  const auto timeout = std::chrono::duration<double>(endpoint.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  if (!endpoint.credential_env.empty()) {
    const char* key = std::getenv(endpoint.credential_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(ErrorKind::kConfig, "endpoint '" + endpoint.name + "': credential variable " +
                                          endpoint.credential_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const auto res = client.Post(url->base_path + endpoint.path, headers, chat_request_body(request),
                               "application/json");
  if (!res) {
    ChatResponse r;
    r.error = "transport error: " + httplib::to_string(res.error());
    return r;
  }
  return parse_chat_response(res->status, res->body);
}

}  // namespace slantkit
