// Copyright (C) 2026 The sepal Authors
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

#include <optional>
#include <sstream>

#include "parsers.hpp"

namespace sepal {
namespace {

std::vector<std::string> words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string strip_comment(const std::string& line) {
  auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

}  // namespace

// <path_regex> [<file type>] <user:role:type:level>
TableResult<FileContextEntry> parse_file_contexts(std::string_view text) {
  TableResult<FileContextEntry> result;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto w = words(strip_comment(line));
    if (w.empty()) continue;
    if (w.size() < 2 || w.size() > 3) {
      ++result.skipped;
      continue;
    }
    const std::string& context = w.back();
    std::vector<std::string> fields;
    std::stringstream ctx(context);
    std::string f;
    while (std::getline(ctx, f, ':')) fields.push_back(f);
    if (fields.size() < 3 || !is_valid_ident(fields[2])) {
      ++result.skipped;  // includes <<none>>
      continue;
    }
    result.entries.push_back(FileContextEntry{w[0], Ident(fields[2])});
  }
  return result;
}

// `service <name> <path> [args]` opens a block; `user <name>` inside it
// sets the account. Any other section keyword closes the block.
TableResult<RcServiceEntry> parse_rc(std::string_view text) {
  TableResult<RcServiceEntry> result;
  std::istringstream in{std::string(text)};
  std::string line;
  std::optional<RcServiceEntry> cur;
  auto close = [&] {
    if (cur) result.entries.push_back(std::move(*cur));
    cur.reset();
  };
  while (std::getline(in, line)) {
    auto w = words(strip_comment(line));
    if (w.empty()) continue;
    if (w[0] == "service") {
      close();
      if (w.size() < 3 || w[2].empty() || w[2][0] != '/') {
        ++result.skipped;
        continue;
      }
      cur = RcServiceEntry{w[1], w[2], "root"};
    } else if (w[0] == "on" || w[0] == "import") {
      close();
    } else if (cur && w[0] == "user") {
      if (w.size() == 2) {
        cur->user = w[1];
      } else {
        ++result.skipped;
      }
    }
  }
  close();
  return result;
}

// Whitespace separated key=value pairs; entries without domain= are
// skipped (they only label app data directories).
TableResult<SeappEntry> parse_seapp(std::string_view text) {
  TableResult<SeappEntry> result;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto w = words(strip_comment(line));
    if (w.empty()) continue;
    SeappEntry e;
    bool ok = true;
    bool have_domain = false;
    for (const auto& kv : w) {
      auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        ok = false;
        break;
      }
      std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
      if (k == "domain") {
        if (!is_valid_ident(v)) {
          ok = false;
          break;
        }
        e.domain = Ident(v);
        have_domain = true;
        continue;
      }
      if (k == "user") e.assigned_user_class = v;
      e.selector.emplace_back(k, v);
    }
    if (!ok || !have_domain) {
      ++result.skipped;
      continue;
    }
    result.entries.push_back(std::move(e));
  }
  return result;
}

}  // namespace sepal
