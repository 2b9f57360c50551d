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

#ifndef RECDC_TESTS_TEST_UTIL_H_
#define RECDC_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "recdc/dataset.h"
#include "recdc/random.h"

namespace recdc::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

Item MakeItem(std::string id, std::string title, std::string abstract_text = "",
              std::string category = "");

// Three users, five items, a few labeled impressions each.
Dataset TinyDataset();

// Random valid dataset: odd ids and UTF-8 text, empty fields, duplicate
// history entries, users without impressions.
Dataset FuzzDataset(Rng& rng);

}  // namespace recdc::testing

#endif  // RECDC_TESTS_TEST_UTIL_H_
