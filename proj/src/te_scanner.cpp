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

// Line-level TE scanning. No m4 expansion happens here: comments are routed
// by the first keyword of the statement that follows them, and debug-only
// macro bodies are tokenized just enough to recover their allow statements.

#include <cctype>
#include <optional>
#include <sstream>

#include "errors.hpp"
#include "parsers.hpp"

namespace sepal {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) out.emplace_back(text.substr(start));
      break;
    }
    out.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

bool is_keyword_statement(const std::string& word) {
  static const char* const kKeywords[] = {
      "allow",        "neverallow",      "auditallow",     "dontaudit",
      "allowxperm",   "neverallowxperm", "dontauditxperm", "type",
      "attribute",    "typeattribute",   "type_transition", "typetransition",
      "typealias",    "permissive",      "expandattribute", "attribute_role",
  };
  for (const char* k : kKeywords) {
    if (word == k) return true;
  }
  return false;
}

std::string first_word(const std::string& code) {
  std::size_t i = 0;
  while (i < code.size() && (code[i] == '`' || code[i] == '\'' ||
                             std::isspace(static_cast<unsigned char>(code[i])))) {
    ++i;
  }
  std::size_t start = i;
  while (i < code.size() && (std::isalnum(static_cast<unsigned char>(code[i])) ||
                             code[i] == '_')) {
    ++i;
  }
  return code.substr(start, i - start);
}

}  // namespace

std::vector<std::string> split_comment_sentences(std::string_view text) {
  std::string norm;
  norm.reserve(text.size());
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (u & 0x80) continue;
    norm.push_back(static_cast<char>(std::tolower(u)));
  }
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::string s = trim(cur);
    if (!s.empty()) out.push_back(std::move(s));
    cur.clear();
  };
  for (char c : norm) {
    if (c == '.' || c == ':' || c == '\n') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

CommentDocs parse_te_comments(std::string_view text, const Ident& unit) {
  CommentDocs docs;
  docs.allow.unit = unit;
  docs.allow.polarity = Op::kAllow;
  docs.neverallow.unit = unit;
  docs.neverallow.polarity = Op::kNeverallow;

  auto doc_for = [&](Op p) -> CommentDoc& {
    return p == Op::kNeverallow ? docs.neverallow : docs.allow;
  };
  auto add = [&](Op p, const std::string& comment) {
    for (auto& s : split_comment_sentences(comment)) {
      doc_for(p).sentences.push_back(std::move(s));
    }
  };

  std::vector<std::string> pending;
  std::optional<Op> open_statement;  // keyword statement still missing ';'

  for (const std::string& raw : lines_of(text)) {
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t i = line.find_first_not_of('#');
      std::string body = i == std::string::npos ? std::string() : line.substr(i);
      if (open_statement) {
        add(*open_statement, body);
      } else {
        pending.push_back(std::move(body));
      }
      continue;
    }

    std::string code = line;
    std::string trailing;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      code = line.substr(0, hash);
      trailing = line.substr(hash + 1);
    }

    Op polarity = Op::kAllow;
    if (open_statement) {
      polarity = *open_statement;
    } else {
      std::string kw = first_word(code);
      if (kw == "neverallow" || kw == "neverallowxperm") polarity = Op::kNeverallow;
      if (is_keyword_statement(kw)) open_statement = polarity;
    }
    for (const auto& c : pending) add(polarity, c);
    pending.clear();
    if (!trailing.empty()) add(polarity, trailing);
    if (open_statement && code.find(';') != std::string::npos) {
      open_statement.reset();
    }
  }
  // A block with no statement after it has nothing to route by.
  for (const auto& c : pending) add(Op::kAllow, c);
  return docs;
}

std::string write_sentence_file(const std::vector<CommentDoc>& docs) {
  std::ostringstream out;
  for (const auto& d : docs) {
    if (d.sentences.empty()) continue;
    out << "## unit=" << d.unit.str() << " polarity=" << op_name(d.polarity) << "\n";
    for (const auto& s : d.sentences) out << s << "\n";
  }
  return out.str();
}

std::vector<CommentDoc> read_sentence_file(std::string_view text) {
  std::vector<CommentDoc> docs;
  int lineno = 0;
  for (const std::string& raw : lines_of(text)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.rfind("## ", 0) == 0) {
      CommentDoc d;
      std::istringstream fields(line.substr(3));
      std::string kv;
      bool have_unit = false, have_pol = false;
      while (fields >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "unit" && is_valid_ident(v)) {
          d.unit = Ident(v);
          have_unit = true;
        } else if (k == "polarity") {
          auto op = parse_op(v);
          if (!op) throw SyntaxError("sentence file", lineno, 0, "bad polarity '" + v + "'");
          d.polarity = *op;
          have_pol = true;
        }
      }
      if (!have_unit || !have_pol) {
        throw SyntaxError("sentence file", lineno, 0, "header needs unit= and polarity=");
      }
      docs.push_back(std::move(d));
      continue;
    }
    if (docs.empty()) {
      throw SyntaxError("sentence file", lineno, 0, "sentence before first header");
    }
    docs.back().sentences.push_back(line);
  }
  return docs;
}

// ---------------------------------------------------------------------------
// debug macro bodies

namespace {

struct BodyToken {
  std::string text;
  int line;
};

std::vector<BodyToken> tokenize_body(std::string_view body, int first_line) {
  std::vector<BodyToken> out;
  int line = first_line;
  std::string cur;
  int cur_line = line;
  auto flush = [&] {
    if (!cur.empty()) out.push_back({cur, cur_line});
    cur.clear();
  };
  for (char c : body) {
    if (c == '\n') {
      flush();
      ++line;
    } else if (c == '`' || c == '\'' || c == ' ' || c == '\t' || c == '\r') {
      flush();
    } else if (c == '{' || c == '}' || c == ':' || c == ';' || c == ',') {
      flush();
      out.push_back({std::string(1, c), line});
    } else {
      if (cur.empty()) cur_line = line;
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

// Reads `name` or `{ a b }` starting at toks[i].
bool read_group(const std::vector<BodyToken>& toks, std::size_t& i,
                std::size_t end, std::vector<std::string>& out) {
  if (i >= end) return false;
  if (toks[i].text == "{") {
    ++i;
    while (i < end && toks[i].text != "}") out.push_back(toks[i++].text);
    if (i >= end) return false;
    ++i;
    return true;
  }
  if (toks[i].text == ":" || toks[i].text == ";") return false;
  out.push_back(toks[i++].text);
  return true;
}

}  // namespace

std::vector<DebugStatement> scan_debug_statements(std::string_view te_text) {
  // Blank out comments but keep newlines so line numbers survive.
  std::string text(te_text);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '#') {
      while (i < text.size() && text[i] != '\n') text[i++] = ' ';
    }
  }

  std::vector<DebugStatement> out;
  for (const char* macro : {"userdebug_or_eng", "build_test_only"}) {
    const std::string needle = std::string(macro) + "(";
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
      const bool boundary =
          pos == 0 || !(std::isalnum(static_cast<unsigned char>(text[pos - 1])) ||
                        text[pos - 1] == '_');
      std::size_t open = pos + needle.size() - 1;
      pos = open + 1;
      if (!boundary) continue;
      int depth = 1;
      std::size_t close = open + 1;
      while (close < text.size() && depth > 0) {
        if (text[close] == '(') ++depth;
        if (text[close] == ')') --depth;
        if (depth > 0) ++close;
      }
      if (depth != 0) break;  // unterminated macro call
      int first_line = 1;
      for (std::size_t k = 0; k <= open; ++k) {
        if (text[k] == '\n') ++first_line;
      }
      auto toks = tokenize_body(std::string_view(text).substr(open + 1, close - open - 1),
                                first_line);
      std::size_t i = 0;
      while (i < toks.size()) {
        std::size_t end = i;
        while (end < toks.size() && toks[end].text != ";") ++end;
        if (toks[i].text == "allow") {
          DebugStatement st;
          st.macro = macro;
          st.line = toks[i].line;
          std::size_t j = i + 1;
          bool ok = read_group(toks, j, end, st.subjects) &&
                    read_group(toks, j, end, st.targets) && j < end &&
                    toks[j].text == ":";
          if (ok) {
            ++j;
            ok = read_group(toks, j, end, st.classes);
          }
          if (ok) {
            while (j < end) {
              if (toks[j].text != "{" && toks[j].text != "}") {
                st.permissions.push_back(toks[j].text);
              }
              ++j;
            }
            ok = !st.permissions.empty();
          }
          if (ok) out.push_back(std::move(st));
        }
        i = end + 1;
      }
      pos = close;
    }
  }
  return out;
}

}  // namespace sepal
