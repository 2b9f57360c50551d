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

#ifndef RECDC_ERRORS_H_
#define RECDC_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace recdc {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input. Callers treat this family as "bad input" (exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

// An id that does not resolve inside the owning dataset.
class DanglingReferenceError : public ValidationError {
 public:
  DanglingReferenceError(std::string id, const std::string& context)
      : ValidationError("dangling reference to \"" + id + "\" in " + context),
        id_(std::move(id)) {}

  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// The LLM endpoint could not be reached or kept failing after retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

// The LLM answered, but not in the requested output form.
class LlmOutputError : public Error {
 public:
  LlmOutputError(const std::string& what, std::string raw_response)
      : Error(what), raw_response_(std::move(raw_response)) {}

  const std::string& raw_response() const { return raw_response_; }

 private:
  std::string raw_response_;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace recdc

#endif  // RECDC_ERRORS_H_
