// Copyright 2026 The recdc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "recdc/llm.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "recdc/errors.h"

namespace recdc {
namespace {

bool IsRetryableStatus(int status) {
  return status == 408 || status == 429 || status == 500 || status == 502 ||
         status == 503 || status == 504;
}

std::string ChildPromptRequest(const PromptTemplate& parent, std::size_t n) {
  return "Below is an instruction used to condense item contents into short "
         "titles for a recommender system. Write " +
         std::to_string(n) +
         " improved variants of it. Start every variant with a line "
         "containing only [prompt] and write nothing else.\n\nInstruction:\n" +
         parent.body;
}

}  // namespace

struct RemoteBackend::Counters {
  std::atomic<std::size_t> requests{0};
};

std::chrono::milliseconds RetryPolicy::Backoff(int attempt) const {
  const double scaled = static_cast<double>(initial_backoff.count()) *
                        std::pow(multiplier, attempt);
  const double capped =
      std::min(scaled, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

RemoteBackend::RemoteBackend(RemoteBackendConfig config, SleepFn sleep)
    : config_(std::move(config)),
      sleep_(std::move(sleep)),
      slots_(static_cast<std::ptrdiff_t>(
          std::clamp<std::size_t>(config_.max_in_flight, 1, 256))),
      counters_(std::make_unique<Counters>()) {
  if (config_.base_url.empty()) {
    throw ValidationError("remote LLM backend needs a base URL");
  }
  if (!sleep_) {
    sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

RemoteBackend::~RemoteBackend() = default;

std::size_t RemoteBackend::requests_sent() const {
  return counters_->requests.load();
}

std::string RemoteBackend::Complete(const std::string& message) {
  nlohmann::json request = {
      {"model", config_.model},
      {"messages", nlohmann::json::array(
                       {{{"role", "user"}, {"content", message}}})},
      {"temperature", 0}};
  const std::string body = request.dump();

  httplib::Headers headers;
  if (!config_.token_env.empty()) {
    const char* token = std::getenv(config_.token_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw TransportError("environment variable " + config_.token_env +
                           " holding the LLM token is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  slots_.acquire();
  struct Release {
    std::counting_semaphore<256>& s;
    ~Release() { s.release(); }
  } release{slots_};

  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);

  std::string last_error;
  for (int attempt = 0;; ++attempt) {
    ++counters_->requests;
    auto result = client.Post(config_.path, headers, body, "application/json");
    std::chrono::milliseconds delay = config_.retry.Backoff(attempt);
    if (result) {
      if (result->status == 200) {
        try {
          const auto json = nlohmann::json::parse(result->body);
          return json.at("choices").at(0).at("message").at("content")
              .get<std::string>();
        } catch (const nlohmann::json::exception& e) {
          throw LlmOutputError(
              std::string("malformed chat-completion response: ") + e.what(),
              result->body);
        }
      }
      last_error = "HTTP " + std::to_string(result->status);
      if (!IsRetryableStatus(result->status)) {
        throw TransportError("LLM endpoint answered " + last_error);
      }
      if (result->status == 429 && result->has_header("Retry-After")) {
        const std::string value = result->get_header_value("Retry-After");
        char* end = nullptr;
        const double seconds = std::strtod(value.c_str(), &end);
        if (end != value.c_str() && seconds >= 0) {
          delay = std::min(
              std::chrono::milliseconds(
                  static_cast<long long>(seconds * 1000.0)),
              config_.retry.max_backoff);
        }
      }
    } else {
      last_error = httplib::to_string(result.error());
    }
    if (attempt >= config_.retry.max_retries) break;
    spdlog::warn("LLM request failed ({}), retry {} of {} in {} ms",
                 last_error, attempt + 1, config_.retry.max_retries,
                 delay.count());
    sleep_(delay);
  }
  throw TransportError("LLM request failed after " +
                       std::to_string(config_.retry.max_retries + 1) +
                       " attempts: " + last_error);
}

std::string RemoteBackend::CondenseItem(const PromptTemplate& prompt,
                                        const Item& item) {
  return Complete(prompt.RenderItem(item));
}

std::string RemoteBackend::ExtractInterests(
    const PromptTemplate& prompt, std::span<const Item* const> history) {
  return Complete(prompt.RenderHistory(history));
}

std::string RemoteBackend::GenerateChildPrompts(const PromptTemplate& parent,
                                                std::size_t n) {
  return Complete(ChildPromptRequest(parent, n));
}

}  // namespace recdc
