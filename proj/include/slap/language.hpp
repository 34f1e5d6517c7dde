// Copyright 2026 The slap-cpp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Command tokenization and the word vocabulary frozen at dataset build.

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace slap {

inline constexpr std::size_t kMaxCommandWords = 32;

/// Lowercases, replaces punctuation by spaces and splits on whitespace.
/// Throws InvalidArgument for an empty command or one longer than 32 words.
std::vector<std::string> tokenize_command(std::string_view command);

/// Word list; index 0 is reserved for unknown words.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  static Vocabulary from_commands(std::span<const std::string> commands);

  /// Index in [1, size()] for known words, 0 otherwise.
  int index(const std::string& word) const;
  std::vector<int> encode(std::string_view command) const;
  /// Table rows needed by an embedding: words plus the unknown slot.
  int table_size() const { return static_cast<int>(words_.size()) + 1; }
  const std::vector<std::string>& words() const { return words_; }

  /// One word per line.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, int, std::less<>> lookup_;
};

}  // namespace slap
