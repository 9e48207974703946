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

// Readers for the policy sources we consume: CIL, flat (setools-style)
// rule text, TE comment blocks, and the Android context/init tables.

#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "policy_model.hpp"

namespace sepal {

// class -> every permission declared for it. Backs `*` and `~{...}` in flat
// permission position.
class ClassPermTable {
 public:
  ClassPermTable() = default;

  // Tab or space separated: `<class> <perm> <perm> ...`, `#` comments.
  static ClassPermTable parse(std::string_view text);
  static ClassPermTable load(const std::string& path);

  void add(const Ident& cls, const std::set<Ident>& perms);
  const std::set<Ident>* find(const Ident& cls) const;
  std::size_t size() const { return table_.size(); }

 private:
  std::map<Ident, std::set<Ident>> table_;
};

struct ParseOptions {
  std::string source_name;  // recorded in rule origins
  bool finalize = true;     // false when fragments are merged first
  bool strict = false;
  const ClassPermTable* class_perms = nullptr;
};

// S-expression CIL. Recognized: type, typeattribute, typeattributeset,
// allow, neverallow, typetransition, class, common, classcommon, and the
// block/in/optional containers (block names are flattened with '.').
// Everything else is skipped and counted in PolicyDb::skipped_forms.
PolicyDb parse_cil(std::string_view text, const ParseOptions& options = {});

// One statement per ';':
//   allow <s> <t>:<c> <p>;      allow <s> <t>:<c> { p1 p2 };
// plus neverallow, type/attribute/typeattribute declarations and
// type_transition. `#` starts a comment.
PolicyDb parse_flat(std::string_view text, const ParseOptions& options = {});

// Canonical flat text for `db`: declarations, resolved attribute
// memberships, then rules in their original order. Re-parsing it yields
// the same atomic expansion.
std::string to_flat_text(const PolicyDb& db);

// ---------------------------------------------------------------------------
// TE comments

struct CommentDoc {
  Ident unit;
  Op polarity = Op::kAllow;
  std::vector<std::string> sentences;
};

struct CommentDocs {
  CommentDoc allow;
  CommentDoc neverallow;
};

// Lowercases, drops non-ASCII bytes and splits at '.', ':' and newlines.
std::vector<std::string> split_comment_sentences(std::string_view text);

CommentDocs parse_te_comments(std::string_view text, const Ident& unit);

// Sentence file consumed by the CoNLL-U preprocessor:
//   ## unit=<name> polarity=<allow|neverallow>
//   <sentence>
//   ...
std::string write_sentence_file(const std::vector<CommentDoc>& docs);
std::vector<CommentDoc> read_sentence_file(std::string_view text);

// An allow statement found inside userdebug_or_eng(...) or
// build_test_only(...). Tokens are kept as written (attributes, sets and
// permission macros are not expanded).
struct DebugStatement {
  std::string macro;
  int line = 0;
  std::vector<std::string> subjects;
  std::vector<std::string> targets;
  std::vector<std::string> classes;
  std::vector<std::string> permissions;
};

std::vector<DebugStatement> scan_debug_statements(std::string_view te_text);

// ---------------------------------------------------------------------------
// Android tables

template <typename T>
struct TableResult {
  std::vector<T> entries;
  std::size_t skipped = 0;
};

struct FileContextEntry {
  std::string path_pattern;
  Ident label_type;
};

struct RcServiceEntry {
  std::string service_name;
  std::string executable_path;
  std::string user;  // "root" when the block has no user option
};

struct SeappEntry {
  std::vector<std::pair<std::string, std::string>> selector;
  Ident domain;
  std::string assigned_user_class;
};

TableResult<FileContextEntry> parse_file_contexts(std::string_view text);
TableResult<RcServiceEntry> parse_rc(std::string_view text);
TableResult<SeappEntry> parse_seapp(std::string_view text);

}  // namespace sepal
