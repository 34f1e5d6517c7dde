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


#include "slap/language.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "slap/errors.hpp"

namespace slap {

std::vector<std::string> tokenize_command(std::string_view command) {
  std::string cleaned(command);
  for (char& c : cleaned) {
    const auto u = static_cast<unsigned char>(c);
    c = std::ispunct(u) ? ' ' : static_cast<char>(std::tolower(u));
  }
  std::istringstream in(cleaned);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  if (words.empty()) throw InvalidArgument("command has no words");
  if (words.size() > kMaxCommandWords) throw InvalidArgument("command longer than 32 words");
  return words;
}

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!lookup_.emplace(words_[i], static_cast<int>(i) + 1).second) {
      throw InvalidArgument("duplicate vocabulary word: " + words_[i]);
    }
  }
}

Vocabulary Vocabulary::from_commands(std::span<const std::string> commands) {
  std::set<std::string> unique;
  for (const auto& c : commands) {
    for (auto& w : tokenize_command(c)) unique.insert(std::move(w));
  }
  return Vocabulary(std::vector<std::string>(unique.begin(), unique.end()));
}

int Vocabulary::index(const std::string& word) const {
  const auto it = lookup_.find(word);
  return it == lookup_.end() ? 0 : it->second;
}

std::vector<int> Vocabulary::encode(std::string_view command) const {
  std::vector<int> out;
  for (const auto& w : tokenize_command(command)) out.push_back(index(w));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary: " + path.string());
  for (const auto& w : words_) out << w << '\n';
  if (!out) throw IoError("failed writing vocabulary: " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vocabulary: " + path.string());
  std::vector<std::string> words;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) words.push_back(line);
  }
  return Vocabulary(std::move(words));
}

}  // namespace slap
