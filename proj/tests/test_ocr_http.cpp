#include <gtest/gtest.h>

#include "evocr/io.hpp"
#include "evocr/ocr.hpp"
#include "evocr/scene.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <thread>

using namespace evocr;
using namespace evocr::ocr;

namespace {

constexpr const char* kTokenEnv = "EVOCR_HTTP_TEST_TOKEN";

/// Local stand-in for the OCR services. The dedicated endpoint answers with
/// the mock transcription of the posted PNG; the LLM endpoint wraps it in a
/// chat-completion reply.
class FakeService : public ::testing::Test {
 protected:
  void SetUp() override {
    setenv(kTokenEnv, "secret", 1);
    server_.Post("/ocr", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      last_type_ = req.get_header_value("Content-Type");
      if (last_auth_ != "Bearer secret") {
        res.status = 401;
        return;
      }
      const io::Bytes png(req.body.begin(), req.body.end());
      res.set_content(recognize_mock(io::decode_png(png)) + "\n", "text/plain");
    });
    server_.Post("/llm", [this](const httplib::Request& req, httplib::Response& res) {
      last_type_ = req.get_header_value("Content-Type");
      const auto j = nlohmann::json::parse(req.body);
      last_model_ = j.at("model").get<std::string>();
      std::string url = j.at("messages").at(0).at("content").at(1).at("image_url").at("url");
      const std::string prefix = "data:image/png;base64,";
      EXPECT_EQ(url.rfind(prefix, 0), 0u);
      const nlohmann::json reply = {
          {"choices", {{{"message", {{"role", "assistant"}, {"content", "Hello world"}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    server_.Post("/busy", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    server_.Post("/bad", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    server_.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"choices\": []}", "application/json");
    });
    server_.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(800));
      res.set_content("late", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  OcrBackend dedicated(const std::string& path) const {
    auto b = OcrBackend::dedicated_http(url(path));
    b.auth_env = kTokenEnv;
    b.timeout_ms = 2000;
    return b;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::string last_auth_, last_type_, last_model_;
};

BinaryImage hello() { return synth::render_text_page("Hello world", BitmapFont::builtin(2), {}).truth.binary; }

}  // namespace

TEST_F(FakeService, DedicatedRoundTrip) {
  const auto r = recognize(hello(), dedicated("/ocr"));
  EXPECT_EQ(r.text, "Hello world");
  EXPECT_EQ(last_auth_, "Bearer secret");
  EXPECT_EQ(last_type_, "image/png");
  EXPECT_EQ(r.request_bytes, io::encode_png(hello()).size());
  EXPECT_EQ(r.backend, dedicated("/ocr").label());
}

TEST_F(FakeService, LlmRoundTrip) {
  auto b = OcrBackend::llm_http(url("/llm"));
  b.auth_env = kTokenEnv;
  b.model = "reader-1";
  const auto r = recognize(hello(), b);
  EXPECT_EQ(r.text, "Hello world");
  EXPECT_EQ(last_model_, "reader-1");
  EXPECT_EQ(last_type_, "application/json");
  EXPECT_EQ(r.request_bytes, encode_request(hello(), b).size());
}

TEST_F(FakeService, RejectedCredentialsAreConfigErrors) {
  setenv(kTokenEnv, "wrong", 1);
  EXPECT_THROW(recognize(hello(), dedicated("/ocr")), ConfigError);
}

TEST_F(FakeService, MissingCredentialsFailBeforeSending) {
  unsetenv(kTokenEnv);
  EXPECT_THROW(recognize(hello(), dedicated("/ocr")), ConfigError);
  EXPECT_TRUE(last_auth_.empty());
}

TEST_F(FakeService, ServerErrorsAreBackendErrors) {
  EXPECT_THROW(recognize(hello(), dedicated("/busy")), BackendError);
}

TEST_F(FakeService, ClientErrorsAreResponseErrors) {
  EXPECT_THROW(recognize(hello(), dedicated("/bad")), ResponseError);
}

TEST_F(FakeService, MalformedLlmReplyIsResponseError) {
  auto b = OcrBackend::llm_http(url("/garbage"));
  b.auth_env = kTokenEnv;
  EXPECT_THROW(recognize(hello(), b), ResponseError);
}

TEST_F(FakeService, TimeoutIsBackendError) {
  auto b = dedicated("/slow");
  b.timeout_ms = 200;
  EXPECT_THROW(recognize(hello(), b), BackendError);
}

TEST(HttpBackend, MalformedEndpointRejected) {
  setenv(kTokenEnv, "secret", 1);
  auto b = OcrBackend::dedicated_http("ftp://example/ocr");
  b.auth_env = kTokenEnv;
  EXPECT_THROW(recognize(hello(), b), ConfigError);
}
