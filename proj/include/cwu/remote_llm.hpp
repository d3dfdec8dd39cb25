#pragma once

#include <chrono>
#include <string>
#include <thread>

#include "json.hpp"

#include "cwu/http.hpp"
#include "cwu/llm.hpp"

namespace cwu {

struct RemoteLlmConfig {
  int max_retries = 2;
  int retry_delay_ms = 200;
  int timeout_sec = 120;
};

/// Chat-completions client. Sends
///   POST {endpoint_url}/chat/completions
///   {"model", "messages": [system, user], "max_tokens", "temperature": 0}
/// and reads choices[0].message.content. Temperature is pinned to 0.
/// Transport failures and 5xx responses are retried up to max_retries, then
/// reported as api_error; 4xx responses map to api_error immediately with
/// their status code. Errors never escape as exceptions.
class RemoteChatProvider final : public GenerationProvider {
 public:
  explicit RemoteChatProvider(RemoteLlmConfig config = {}) : config_(config) {}

 protected:
  GenerationOutcome generate_unchecked(const ModelProfile& profile,
                                       const Prompt& prompt) override {
    nlohmann::json body;
    body["model"] = profile.name;
    body["messages"] = nlohmann::json::array(
        {{{"role", "system"}, {"content", prompt.system_text}},
         {{"role", "user"}, {"content", prompt.user_text}}});
    body["max_tokens"] = profile.max_output_tokens;
    body["temperature"] = 0;
    const std::string payload = body.dump();

    HttpResponse response;
    for (int attempt = 0;; ++attempt) {
      try {
        response = post_json(profile.endpoint_url, "/chat/completions",
                             bearer_auth_headers(profile.api_key_env), payload,
                             config_.timeout_sec);
      } catch (const std::exception&) {
        if (attempt < config_.max_retries) {
          backoff();
          continue;
        }
        return {GenerationStatus::api_error, "", 0};
      }
      if (response.status >= 500 && attempt < config_.max_retries) {
        backoff();
        continue;
      }
      break;
    }
    if (response.status >= 400) {
      return {GenerationStatus::api_error, "", response.status};
    }
    return parse_answer(response.body);
  }

 private:
  static GenerationOutcome parse_answer(const std::string& body) {
    try {
      const auto payload = nlohmann::json::parse(body);
      const auto& choices = payload.at("choices");
      const std::string answer =
          choices.at(0).at("message").at("content").get<std::string>();
      if (answer.empty()) {
        return {GenerationStatus::api_error, "", 0};
      }
      return {GenerationStatus::ok, answer, 0};
    } catch (const nlohmann::json::exception&) {
      return {GenerationStatus::api_error, "", 0};
    }
  }

  void backoff() const {
    if (config_.retry_delay_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry_delay_ms));
    }
  }

  RemoteLlmConfig config_;
};

}  // namespace cwu
