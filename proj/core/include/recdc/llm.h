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

#ifndef RECDC_LLM_H_
#define RECDC_LLM_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recdc/dataset.h"

namespace recdc {

// An LLM instruction: free-form body plus the input-format hint and the
// output-format instruction that the parsers below rely on.
struct PromptTemplate {
  std::string id;
  std::string body;
  std::string input_hint;
  std::string output_instruction;

  // Message asking for one item to be condensed:
  //   [title]{...}, [abs]{...}, [category]{...}
  std::string RenderItem(const Item& item) const;

  // Message asking for the interests behind a click history:
  //   (1){title}, (2){title}, ...
  std::string RenderHistory(std::span<const Item* const> history) const;

  friend bool operator==(const PromptTemplate&,
                         const PromptTemplate&) = default;
};

PromptTemplate DefaultCondensePrompt();
PromptTemplate DefaultInterestPrompt();

// Plain-text file form: four sections (id, body, input_hint,
// output_instruction) separated by lines consisting of "---".
std::string SerializePrompt(const PromptTemplate& prompt);
PromptTemplate ParsePrompt(std::string_view text,
                           const std::string& source = "prompt");
PromptTemplate LoadPrompt(const std::filesystem::path& path);
void SavePrompt(const PromptTemplate& prompt,
                const std::filesystem::path& path);

// Output parsers. Each throws LlmOutputError carrying the raw text when
// nothing usable is found.

// "[new_title]{...}" or "[new_title] ...". A missing tag falls back to the
// first non-empty line (logged).
std::string ParseCondensedTitle(std::string_view raw);

// "[interests] -a, -b, ..." into a de-duplicated, order-preserving list.
std::vector<std::string> ParseInterests(std::string_view raw);

// Blocks introduced by a line "[prompt]". Children inherit the parent's
// input hint and output instruction; ids are "<parent>.<index>".
std::vector<PromptTemplate> ParseChildPrompts(std::string_view raw,
                                              const PromptTemplate& parent);

std::string FormatCondensedTitle(std::string_view title);
std::string FormatInterests(std::span<const std::string> interests);
std::string FormatChildPrompts(std::span<const std::string> bodies);

// Raw completion source. Implementations return text in the output forms
// above; the free functions below do the parsing and retrying.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;

  virtual std::string CondenseItem(const PromptTemplate& prompt,
                                   const Item& item) = 0;
  virtual std::string ExtractInterests(
      const PromptTemplate& prompt, std::span<const Item* const> history) = 0;
  virtual std::string GenerateChildPrompts(const PromptTemplate& parent,
                                           std::size_t n) = 0;

  // How many calls may usefully be in flight at once.
  virtual std::size_t max_in_flight() const { return 1; }
  // Attempts per operation when the answer does not parse.
  virtual int parse_attempts() const { return 3; }
};

struct MockBackendConfig {
  // Upper bound on condensed title length, in tokens.
  std::size_t summary_budget = 16;
  // Interests returned per user.
  std::size_t interest_count = 5;
  // Return the full item content as its condensed title.
  bool echo = false;
  std::uint64_t seed = 0;
};

// Deterministic offline stand-in for a chat model.
//
// Condensation is extractive: title tokens first, then the abstract's
// highest-frequency tokens, up to a budget. The budget reacts to the
// prompt body: it starts at half the configured budget and moves two
// tokens per emphasis word ("informative", "keywords", ... raise it;
// "brief", "short", ... lower it), capped at the configured budget. A body
// mentioning "category" also pulls in the category tokens. That makes
// prompt wording matter, so prompt evolution has something to find.
//
// Interests are the top-k content tokens across the history by term
// frequency. Child prompts are seeded synonym swaps plus one appended
// emphasis sentence per child.
class MockBackend final : public LlmBackend {
 public:
  explicit MockBackend(MockBackendConfig config = {}) : config_(config) {}

  std::string CondenseItem(const PromptTemplate& prompt,
                           const Item& item) override;
  std::string ExtractInterests(const PromptTemplate& prompt,
                               std::span<const Item* const> history) override;
  std::string GenerateChildPrompts(const PromptTemplate& parent,
                                   std::size_t n) override;

  // Token budget the mock applies for `prompt`.
  std::size_t EffectiveBudget(const PromptTemplate& prompt) const;

  const MockBackendConfig& config() const { return config_; }

 private:
  MockBackendConfig config_;
};

struct RetryPolicy {
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{30000};
  double multiplier = 2.0;

  // initial * multiplier^attempt, capped at max_backoff.
  std::chrono::milliseconds Backoff(int attempt) const;
};

struct RemoteBackendConfig {
  // Scheme, host and optional port, e.g. "https://api.openai.com".
  std::string base_url;
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  // Name of the environment variable holding the bearer token. Empty means
  // no Authorization header.
  std::string token_env = "OPENAI_API_KEY";
  std::chrono::seconds timeout{60};
  RetryPolicy retry;
  std::size_t max_in_flight = 4;
};

// Chat-completion client: POSTs {model, messages, temperature: 0} and reads
// choices[0].message.content. Transport failures, 408, 429 and 5xx are
// retried with exponential backoff; 429 honors Retry-After.
class RemoteBackend final : public LlmBackend {
 public:
  using SleepFn = std::function<void(std::chrono::milliseconds)>;

  explicit RemoteBackend(RemoteBackendConfig config, SleepFn sleep = {});
  ~RemoteBackend() override;

  std::string CondenseItem(const PromptTemplate& prompt,
                           const Item& item) override;
  std::string ExtractInterests(const PromptTemplate& prompt,
                               std::span<const Item* const> history) override;
  std::string GenerateChildPrompts(const PromptTemplate& parent,
                                   std::size_t n) override;

  std::size_t max_in_flight() const override { return config_.max_in_flight; }

  // Sends one user message and returns the assistant's reply.
  std::string Complete(const std::string& message);

  // Total HTTP requests issued, including retries.
  std::size_t requests_sent() const;

 private:
  RemoteBackendConfig config_;
  SleepFn sleep_;
  std::counting_semaphore<256> slots_;
  struct Counters;
  std::unique_ptr<Counters> counters_;
};

// Operations. They retry unparseable answers up to the backend's
// parse_attempts() before throwing LlmOutputError.

std::string CondenseItem(LlmBackend& backend, const PromptTemplate& prompt,
                         const Item& item);

// Throws std::invalid_argument on an empty history.
std::vector<std::string> ExtractInterests(LlmBackend& backend,
                                          const PromptTemplate& prompt,
                                          const ClickHistory& history,
                                          const ItemMap& items);

// Exactly n children, or LlmOutputError stating how many were obtained.
std::vector<PromptTemplate> GenerateChildPrompts(LlmBackend& backend,
                                                 const PromptTemplate& parent,
                                                 std::size_t n);

// Runs fn(i) for i in [0, n) on up to `workers` threads. fn must write its
// result into a slot owned by i; there is no ordering between calls.
void ParallelFor(std::size_t n, std::size_t workers,
                 const std::function<void(std::size_t)>& fn);

}  // namespace recdc

#endif  // RECDC_LLM_H_
