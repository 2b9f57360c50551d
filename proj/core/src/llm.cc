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
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <spdlog/spdlog.h>

#include "recdc/errors.h"
#include "recdc/file_io.h"
#include "recdc/random.h"
#include "recdc/text.h"

namespace recdc {
namespace {

constexpr std::string_view kSectionSeparator = "---";
constexpr std::string_view kTitleTag = "[new_title]";
constexpr std::string_view kInterestsTag = "[interests]";
constexpr std::string_view kPromptTag = "[prompt]";

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string_view StripBraces(std::string_view s) {
  s = Trim(s);
  if (s.size() >= 2 && s.front() == '{' && s.back() == '}') {
    s = Trim(s.substr(1, s.size() - 2));
  }
  return s;
}

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string Join(std::span<const std::string> words, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

const std::set<std::string, std::less<>>& StopWords() {
  static const std::set<std::string, std::less<>> kWords = {
      "a",    "an",   "and",  "are",  "as",   "at",   "be",   "by",
      "for",  "from", "has",  "have", "he",   "her",  "his",  "in",
      "is",   "it",   "its",  "of",   "on",   "or",   "she",  "that",
      "the",  "their", "they", "this", "to",  "was",  "were", "will",
      "with", "who",  "what", "when", "where", "which", "after", "over"};
  return kWords;
}

// Tokens ranked by frequency (descending), ties by first occurrence. The
// surface form of the first occurrence is kept.
std::vector<std::string> RankByFrequency(
    std::span<const std::string> tokens,
    const std::function<bool(const std::string&)>& keep) {
  struct Entry {
    std::string surface;
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::map<std::string, Entry> entries;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string key = Lower(tokens[i]);
    if (!keep(key)) continue;
    auto [it, inserted] = entries.try_emplace(key);
    if (inserted) {
      it->second.surface = tokens[i];
      it->second.first = i;
    }
    ++it->second.count;
  }
  std::vector<Entry> ranked;
  ranked.reserve(entries.size());
  for (auto& [key, entry] : entries) ranked.push_back(std::move(entry));
  std::sort(ranked.begin(), ranked.end(), [](const Entry& a, const Entry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (Entry& e : ranked) out.push_back(std::move(e.surface));
  return out;
}

// Appended by the mock when it writes child prompts. The first four raise
// the mock's condensation budget, the fifth asks for the category, the
// last three lower the budget.
const std::vector<std::string>& EmphasisSentences() {
  static const std::vector<std::string> kSentences = {
      "Keep the most informative keywords.",
      "Preserve key entities and named topics.",
      "Reuse detailed descriptive words from the abstract.",
      "Make the new title comprehensive.",
      "Mention the category when it helps.",
      "Keep it brief.",
      "Prefer a short headline.",
      "Be concise and drop minor details."};
  return kSentences;
}

const std::vector<std::vector<std::string>>& SynonymGroups() {
  static const std::vector<std::vector<std::string>> kGroups = {
      {"Condense", "Summarize", "Compress"},
      {"condense", "summarize", "compress"},
      {"title", "headline"},
      {"preserves", "keeps", "retains"},
      {"meaning", "gist", "essence"},
      {"item", "article", "entry"},
      {"following", "given"},
      {"Rewrite", "Rephrase"}};
  return kGroups;
}

const std::set<std::string, std::less<>> kRaisingWords = {
    "informative", "keywords",      "entities",
    "detailed",    "descriptive",   "comprehensive"};
const std::set<std::string, std::less<>> kLoweringWords = {
    "brief", "short", "concise", "succinct", "drop"};

std::string SubstituteSynonyms(const std::string& body, Rng& rng) {
  std::string out;
  std::size_t i = 0;
  while (i < body.size()) {
    if (!std::isalpha(static_cast<unsigned char>(body[i]))) {
      out += body[i++];
      continue;
    }
    std::size_t j = i;
    while (j < body.size() && std::isalpha(static_cast<unsigned char>(body[j])))
      ++j;
    std::string word = body.substr(i, j - i);
    for (const auto& group : SynonymGroups()) {
      auto it = std::find(group.begin(), group.end(), word);
      if (it == group.end()) continue;
      if (rng.Bernoulli(0.5)) {
        const std::size_t pick = rng.UniformIndex(group.size() - 1);
        const std::size_t self = static_cast<std::size_t>(it - group.begin());
        word = group[pick >= self ? pick + 1 : pick];
      }
      break;
    }
    out += word;
    i = j;
  }
  return out;
}

}  // namespace

std::string PromptTemplate::RenderItem(const Item& item) const {
  std::string message = body;
  message += "\n\nHints on the format of input:\n";
  message += input_hint;
  message += "\n\nInstructions on the format of output:\n";
  message += output_instruction;
  message += "\n\nInput:\n[title]{" + item.title + "}, [abs]{" +
             item.abstract_text + "}, [category]{" + item.category + "}";
  return message;
}

std::string PromptTemplate::RenderHistory(
    std::span<const Item* const> history) const {
  std::string message = body;
  message += "\n\nHints on the format of input:\n";
  message += input_hint;
  message += "\n\nInstructions on the format of output:\n";
  message += output_instruction;
  message += "\n\nInput:\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i) message += ", ";
    message += "(" + std::to_string(i + 1) + "){" + history[i]->title + "}";
  }
  return message;
}

PromptTemplate DefaultCondensePrompt() {
  return {"condense-v0",
          "Condense the following item into a new title that preserves its "
          "meaning for a content-based recommender.",
          "[title]{title}, [abs]{abs}, [category]{category}",
          "[new_title]{new_title}"};
}

PromptTemplate DefaultInterestPrompt() {
  return {"interests-v0",
          "Read the titles of the items this user clicked and list the "
          "user's interests as short phrases.",
          "(1){title}, (2){title}, (3){title}, ...",
          "[interests] -interest1, -interest2, ..."};
}

std::string SerializePrompt(const PromptTemplate& prompt) {
  const std::string* sections[] = {&prompt.id, &prompt.body,
                                   &prompt.input_hint,
                                   &prompt.output_instruction};
  std::string out;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::string_view line : SplitLines(*sections[i])) {
      if (Trim(line) == kSectionSeparator) {
        throw ValidationError("prompt \"" + prompt.id +
                              "\" contains a bare --- line");
      }
    }
    if (i) out += "\n---\n";
    out += *sections[i];
  }
  out += '\n';
  return out;
}

PromptTemplate ParsePrompt(std::string_view text, const std::string& source) {
  std::vector<std::string> sections(1);
  std::size_t line_no = 0;
  for (std::string_view line : SplitLines(text)) {
    ++line_no;
    if (Trim(line) == kSectionSeparator) {
      sections.emplace_back();
      continue;
    }
    if (!sections.back().empty()) sections.back() += '\n';
    sections.back() += line;
  }
  if (sections.size() != 4) {
    throw ParseError(source, line_no,
                     "expected 4 sections separated by ---, got " +
                         std::to_string(sections.size()));
  }
  PromptTemplate prompt{std::string(Trim(sections[0])),
                        std::string(Trim(sections[1])),
                        std::string(Trim(sections[2])),
                        std::string(Trim(sections[3]))};
  if (prompt.id.empty() || prompt.id.find('\n') != std::string::npos) {
    throw ParseError(source, 1, "prompt id must be a single non-empty line");
  }
  if (prompt.body.empty()) throw ParseError(source, 1, "empty prompt body");
  return prompt;
}

PromptTemplate LoadPrompt(const std::filesystem::path& path) {
  return ParsePrompt(ReadFile(path), path.string());
}

void SavePrompt(const PromptTemplate& prompt,
                const std::filesystem::path& path) {
  WriteFile(path, SerializePrompt(prompt));
}

std::string ParseCondensedTitle(std::string_view raw) {
  const std::size_t tag = raw.find(kTitleTag);
  if (tag != std::string_view::npos) {
    std::string_view rest = raw.substr(tag + kTitleTag.size());
    for (std::string_view line : SplitLines(rest)) {
      const std::string_view title = StripBraces(line);
      if (!title.empty()) return std::string(title);
    }
    throw LlmOutputError("empty [new_title] in LLM output", std::string(raw));
  }
  for (std::string_view line : SplitLines(raw)) {
    const std::string_view title = StripBraces(line);
    if (!title.empty()) {
      spdlog::warn("LLM output lacks the [new_title] tag; using bare line");
      return std::string(title);
    }
  }
  throw LlmOutputError("no condensed title in LLM output", std::string(raw));
}

std::vector<std::string> ParseInterests(std::string_view raw) {
  const std::size_t tag = raw.find(kInterestsTag);
  if (tag == std::string_view::npos) {
    throw LlmOutputError("no [interests] tag in LLM output", std::string(raw));
  }
  std::vector<std::string> interests;
  std::set<std::string> seen;
  std::string_view rest = raw.substr(tag + kInterestsTag.size());
  std::size_t start = 0;
  while (start <= rest.size()) {
    std::size_t end = rest.find_first_of(",\n", start);
    if (end == std::string_view::npos) end = rest.size();
    std::string_view piece = StripBraces(rest.substr(start, end - start));
    while (!piece.empty() && (piece.front() == '-' || piece.front() == ' ')) {
      piece.remove_prefix(1);
    }
    piece = StripBraces(piece);
    if (!piece.empty() && seen.insert(Lower(piece)).second) {
      interests.emplace_back(piece);
    }
    start = end + 1;
  }
  if (interests.empty()) {
    throw LlmOutputError("empty interest list in LLM output",
                         std::string(raw));
  }
  return interests;
}

std::vector<PromptTemplate> ParseChildPrompts(std::string_view raw,
                                              const PromptTemplate& parent) {
  std::vector<std::string> bodies;
  bool in_block = false;
  for (std::string_view line : SplitLines(raw)) {
    if (Trim(line) == kPromptTag) {
      bodies.emplace_back();
      in_block = true;
      continue;
    }
    if (!in_block) continue;
    if (!bodies.back().empty()) bodies.back() += '\n';
    bodies.back() += line;
  }
  std::vector<PromptTemplate> children;
  for (const std::string& body : bodies) {
    const std::string_view trimmed = Trim(body);
    if (trimmed.empty()) continue;
    bool has_separator = false;
    for (std::string_view line : SplitLines(trimmed)) {
      if (Trim(line) == kSectionSeparator) has_separator = true;
    }
    if (has_separator) continue;
    children.push_back({parent.id + "." + std::to_string(children.size() + 1),
                        std::string(trimmed), parent.input_hint,
                        parent.output_instruction});
  }
  return children;
}

std::string FormatCondensedTitle(std::string_view title) {
  return std::string(kTitleTag) + "{" + std::string(title) + "}";
}

std::string FormatInterests(std::span<const std::string> interests) {
  std::string out(kInterestsTag);
  for (std::size_t i = 0; i < interests.size(); ++i) {
    out += i ? ", -" : " -";
    out += interests[i];
  }
  return out;
}

std::string FormatChildPrompts(std::span<const std::string> bodies) {
  std::string out;
  for (const std::string& body : bodies) {
    out += kPromptTag;
    out += '\n';
    out += body;
    out += '\n';
  }
  return out;
}

std::size_t MockBackend::EffectiveBudget(const PromptTemplate& prompt) const {
  long shift = 0;
  for (const std::string& token : Tokenizer().Tokenize(prompt.body)) {
    if (kRaisingWords.contains(token)) shift += 2;
    if (kLoweringWords.contains(token)) shift -= 2;
  }
  const long cap = static_cast<long>(config_.summary_budget);
  const long budget = cap / 2 + shift;
  return static_cast<std::size_t>(std::clamp(budget, std::min(2L, cap), cap));
}

std::string MockBackend::CondenseItem(const PromptTemplate& prompt,
                                      const Item& item) {
  if (config_.echo) return FormatCondensedTitle(item.Content());

  const Tokenizer surface(/*lowercase=*/false);
  const std::size_t budget = EffectiveBudget(prompt);
  std::vector<std::string> words;
  std::set<std::string> used;
  auto add = [&](const std::string& word) {
    if (words.size() >= budget) return;
    if (used.insert(Lower(word)).second) words.push_back(word);
  };
  for (const std::string& w : surface.Tokenize(item.title)) add(w);
  const auto body_tokens = Tokenizer().Tokenize(prompt.body);
  const bool wants_category =
      std::find(body_tokens.begin(), body_tokens.end(), "category") !=
      body_tokens.end();
  if (wants_category) {
    for (const std::string& w : surface.Tokenize(item.category)) add(w);
  }
  const auto abstract_tokens = surface.Tokenize(item.abstract_text);
  for (const std::string& w :
       RankByFrequency(abstract_tokens, [](const std::string& key) {
         return !StopWords().contains(key);
       })) {
    add(w);
  }
  if (words.empty()) return FormatCondensedTitle(item.title);
  return FormatCondensedTitle(Join(words, " "));
}

std::string MockBackend::ExtractInterests(
    const PromptTemplate& /*prompt*/, std::span<const Item* const> history) {
  const Tokenizer tokenizer;
  std::vector<std::string> tokens;
  for (const Item* item : history) {
    for (std::string& t : tokenizer.Tokenize(item->Content())) {
      tokens.push_back(std::move(t));
    }
  }
  auto ranked = RankByFrequency(tokens, [](const std::string& key) {
    if (key.size() < 3 || StopWords().contains(key)) return false;
    return key.find_first_not_of("0123456789") != std::string::npos;
  });
  if (ranked.size() > config_.interest_count) {
    ranked.resize(config_.interest_count);
  }
  if (ranked.empty() && !history.empty()) ranked.push_back(history[0]->title);
  return FormatInterests(ranked);
}

std::string MockBackend::GenerateChildPrompts(const PromptTemplate& parent,
                                              std::size_t n) {
  const auto& sentences = EmphasisSentences();
  const std::uint64_t base = HashCombine(config_.seed, Fnv1a64(parent.body));
  std::vector<std::size_t> order(sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng order_rng(base);
  order_rng.Shuffle(std::span<std::size_t>(order));

  std::vector<std::string> bodies;
  std::set<std::string> taken = {parent.body};
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(HashCombine(base, i + 1));
    std::string body = SubstituteSynonyms(parent.body, rng);
    if (rng.Bernoulli(0.3)) {
      std::vector<std::size_t> present;
      for (std::size_t s = 0; s < sentences.size(); ++s) {
        if (body.find(sentences[s]) != std::string::npos) present.push_back(s);
      }
      if (!present.empty()) {
        const std::string& victim =
            sentences[present[rng.UniformIndex(present.size())]];
        const std::size_t pos = body.find(victim);
        std::size_t len = victim.size();
        if (pos > 0 && body[pos - 1] == ' ') {
          body.erase(pos - 1, len + 1);
        } else {
          body.erase(pos, len);
        }
      }
    }
    body += ' ';
    body += sentences[order[i % order.size()]];
    for (std::size_t suffix = 2; !taken.insert(body).second; ++suffix) {
      body += " (variant " + std::to_string(suffix) + ")";
    }
    bodies.push_back(std::move(body));
  }
  return FormatChildPrompts(bodies);
}

std::string CondenseItem(LlmBackend& backend, const PromptTemplate& prompt,
                         const Item& item) {
  const int attempts = std::max(1, backend.parse_attempts());
  for (int attempt = 1;; ++attempt) {
    const std::string raw = backend.CondenseItem(prompt, item);
    try {
      return ParseCondensedTitle(raw);
    } catch (const LlmOutputError& e) {
      if (attempt >= attempts) throw;
      spdlog::debug("condense {}: unparseable answer, retrying", item.id);
    }
  }
}

std::vector<std::string> ExtractInterests(LlmBackend& backend,
                                          const PromptTemplate& prompt,
                                          const ClickHistory& history,
                                          const ItemMap& items) {
  if (history.item_ids.empty()) {
    throw std::invalid_argument("cannot extract interests of user " +
                                history.user_id + " with an empty history");
  }
  std::vector<const Item*> resolved;
  resolved.reserve(history.item_ids.size());
  for (const std::string& id : history.item_ids) {
    auto it = items.find(id);
    if (it == items.end()) {
      throw DanglingReferenceError(id, "history of user " + history.user_id);
    }
    resolved.push_back(&it->second);
  }
  const int attempts = std::max(1, backend.parse_attempts());
  for (int attempt = 1;; ++attempt) {
    const std::string raw = backend.ExtractInterests(prompt, resolved);
    try {
      return ParseInterests(raw);
    } catch (const LlmOutputError&) {
      if (attempt >= attempts) throw;
    }
  }
}

std::vector<PromptTemplate> GenerateChildPrompts(LlmBackend& backend,
                                                 const PromptTemplate& parent,
                                                 std::size_t n) {
  if (n == 0) throw std::invalid_argument("child prompt count must be >= 1");
  const int attempts = std::max(1, backend.parse_attempts());
  std::size_t best = 0;
  std::string last_raw;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    last_raw = backend.GenerateChildPrompts(parent, n);
    auto children = ParseChildPrompts(last_raw, parent);
    if (children.size() >= n) {
      children.resize(n);
      return children;
    }
    best = std::max(best, children.size());
  }
  throw LlmOutputError("obtained " + std::to_string(best) + " of " +
                           std::to_string(n) + " child prompts",
                       last_raw);
}

void ParallelFor(std::size_t n, std::size_t workers,
                 const std::function<void(std::size_t)>& fn) {
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace recdc
