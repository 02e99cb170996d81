#include <doctest.h>

#include <cstdlib>
#include <set>

#include <json.hpp>

#include "helpers.hpp"
#include "slantkit/chat_client.hpp"
#include "slantkit/error.hpp"
#include "slantkit/mock_server.hpp"

using namespace slantkit;

namespace {

const char* kFixture = R"({
  "models": {
    "alpha": {
      "rules": [
        {"contains": ["Minimum Wage"], "responses": ["wage reply"]},
        {"contains": ["tax", "relief"], "responses": ["r1", "r2", "r3"]},
        {"contains": ["refuse"], "responses": [""]}
      ],
      "default": ["fallback"]
    },
    "flaky": {"default": ["finally"], "fail_first": 2}
  }
})";

std::string body(const std::string& model, const std::string& msg, std::optional<std::uint64_t> seed = {}) {
  return chat_request_body({model, msg, 0, seed});
}

}  // namespace

TEST_SUITE("mock") {
  TEST_CASE("rules match case-insensitively and in order") {
    const auto f = MockFixture::parse(kFixture, "f");
    CHECK(f.respond("alpha", "Raise the minimum WAGE", {}) == "wage reply");
    CHECK(f.respond("alpha", "nothing relevant", {}) == "fallback");
    CHECK(f.respond("alpha", "tax only", {}) == "fallback");
    const auto r = f.respond("alpha", "tax relief now", 3);
    CHECK((r == "r1" || r == "r2" || r == "r3"));
    CHECK_FALSE(f.respond("nobody", "x", {}).has_value());
  }

  TEST_CASE("replies are a pure function of model, message and seed") {
    const auto f = MockFixture::parse(kFixture, "f");
    std::set<std::string> seen;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto a = f.respond("alpha", "tax relief", seed);
      CHECK(a == f.respond("alpha", "tax relief", seed));
      seen.insert(*a);
    }
    CHECK(seen.size() == 3);
  }

  TEST_CASE("fixture parse errors") {
    CHECK_THROWS_AS(MockFixture::parse("{", "f"), Error);
    CHECK_THROWS_AS(MockFixture::parse(R"({"models": 3})", "f"), Error);
  }

  TEST_CASE("chat replies cover failures, unknown models and refusals") {
    const auto f = MockFixture::parse(kFixture, "f");
    CHECK(mock_chat_reply(f, body("flaky", "x"), 0).first == 503);
    CHECK(mock_chat_reply(f, body("flaky", "x"), 1).first == 503);
    const auto ok = mock_chat_reply(f, body("flaky", "x"), 2);
    CHECK(ok.first == 200);
    CHECK(parse_chat_response(ok.first, ok.second).content == "finally");
    CHECK(mock_chat_reply(f, body("nobody", "x"), 0).first == 404);
    CHECK(mock_chat_reply(f, "garbage", 0).first == 400);
    const auto refused = mock_chat_reply(f, body("alpha", "please refuse"), 0);
    CHECK(classify(parse_chat_response(refused.first, refused.second)) == ResponseClass::kRefused);
  }

  TEST_CASE("http server and client speak the same protocol") {
    MockServer server(MockFixture::parse(kFixture, "f"));
    const int port = server.start("127.0.0.1", 0);
    REQUIRE(port > 0);
    HttpTransport http;
    Endpoint ep{"a", server.base_url(), "/v1/chat/completions", "alpha", "", 0, 5};
    const auto r = http.send(ep, {"alpha", "the minimum wage", 0.3, 1});
    CHECK(r.http_status == 200);
    CHECK(r.content == "wage reply");
    Endpoint flaky = ep;
    flaky.model = "flaky";
    CHECK(http.send(flaky, {"flaky", "x", 0, {}}).http_status == 503);
    CHECK(http.send(flaky, {"flaky", "x", 0, {}}).http_status == 503);
    CHECK(http.send(flaky, {"flaky", "x", 0, {}}).content == "finally");
    CHECK(server.requests() == 4);
    server.stop();
  }

  TEST_CASE("credentials are sent as a bearer token") {
    MockServer server(MockFixture::parse(kFixture, "f"));
    server.start("127.0.0.1", 0);
    ::setenv("SLANTKIT_TEST_KEY", "secret", 1);
    HttpTransport http;
    Endpoint ep{"a", server.base_url(), "/v1/chat/completions", "alpha", "SLANTKIT_TEST_KEY", 0, 5};
    CHECK(http.send(ep, {"alpha", "x", 0, {}}).content == "fallback");
    ::unsetenv("SLANTKIT_TEST_KEY");
    server.stop();
  }

  TEST_CASE("fixture transport needs no sockets") {
    FixtureTransport t(MockFixture::parse(kFixture, "f"));
    Endpoint ep{"a", "http://unused:1", "/v1/chat/completions", "flaky", "", 0, 5};
    CHECK(t.send(ep, {"flaky", "x", 0, {}}).http_status == 503);
    CHECK(t.send(ep, {"flaky", "x", 0, {}}).http_status == 503);
    CHECK(t.send(ep, {"flaky", "x", 0, {}}).content == "finally");
    CHECK(t.requests() == 3);
  }

  TEST_CASE("bundled sample fixture loads") {
    const auto f = MockFixture::load(testutil::data_dir() / "sample" / "mock_fixture.json");
    CHECK(f.respond("mock-judge", "Classify the political viewpoint of ... working families", {}).has_value());
    CHECK(f.fail_first("mock-left") == 2);
  }
}
