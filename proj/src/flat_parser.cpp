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

#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "parsers.hpp"

namespace sepal {

// ---------------------------------------------------------------------------
// ClassPermTable

ClassPermTable ClassPermTable::parse(std::string_view text) {
  ClassPermTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string cls;
    if (!(fields >> cls)) continue;
    if (!is_valid_ident(cls)) {
      throw SyntaxError("class table", lineno, 0, "invalid class '" + cls + "'");
    }
    std::set<Ident> perms;
    std::string p;
    while (fields >> p) {
      if (!is_valid_ident(p)) {
        throw SyntaxError("class table", lineno, 0, "invalid permission '" + p + "'");
      }
      perms.insert(Ident(p));
    }
    table.add(Ident(cls), perms);
  }
  return table;
}

ClassPermTable ClassPermTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void ClassPermTable::add(const Ident& cls, const std::set<Ident>& perms) {
  table_[cls].insert(perms.begin(), perms.end());
}

const std::set<Ident>* ClassPermTable::find(const Ident& cls) const {
  auto it = table_.find(cls);
  return it == table_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// flat reader

namespace {

struct Token {
  std::string text;
  int line = 0;
  bool quoted = false;
};

std::vector<std::vector<Token>> split_statements(std::string_view text,
                                                 const std::string& source) {
  std::vector<std::vector<Token>> statements;
  std::vector<Token> cur;
  int line = 1;
  std::size_t i = 0;
  auto is_punct = [](char c) {
    return c == '{' || c == '}' || c == ':' || c == ';' || c == ',' ||
           c == '~' || c == '*';
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == ';') {
      if (cur.empty()) throw SyntaxError(source, line, 0, "empty statement");
      statements.push_back(std::move(cur));
      cur.clear();
      ++i;
    } else if (is_punct(c)) {
      cur.push_back(Token{std::string(1, c), line});
      ++i;
    } else if (c == '"') {
      std::size_t end = text.find('"', i + 1);
      if (end == std::string_view::npos) {
        throw SyntaxError(source, line, 0, "unterminated string");
      }
      cur.push_back(Token{std::string(text.substr(i + 1, end - i - 1)), line, true});
      i = end + 1;
    } else {
      std::size_t start = i;
      while (i < text.size() && !is_punct(text[i]) && text[i] != '#' &&
             text[i] != '"' && text[i] != ' ' && text[i] != '\t' &&
             text[i] != '\n' && text[i] != '\r') {
        ++i;
      }
      cur.push_back(Token{std::string(text.substr(start, i - start)), line});
    }
  }
  if (!cur.empty()) {
    throw SyntaxError(source, cur.front().line, 0, "missing ';'");
  }
  return statements;
}

class FlatBuilder {
 public:
  FlatBuilder(std::string source, const ParseOptions& options)
      : source_(std::move(source)), options_(options) {}

  PolicyDb build(std::string_view text) {
    for (auto& st : split_statements(text, source_)) statement(st);
    return std::move(db_);
  }

 private:
  using Tokens = std::vector<Token>;

  [[noreturn]] void fail(const Token& at, const std::string& msg) const {
    throw SyntaxError(source_, at.line, 0, msg);
  }

  Ident name(const Tokens& t, std::size_t i) const {
    if (i >= t.size()) fail(t.back(), "unexpected end of statement");
    if (t[i].quoted || !is_valid_ident(t[i].text)) {
      fail(t[i], "expected a name, found '" + t[i].text + "'");
    }
    return Ident(t[i].text);
  }

  void expect(const Tokens& t, std::size_t i, std::string_view what) const {
    if (i >= t.size()) fail(t.back(), "expected '" + std::string(what) + "'");
    if (t[i].text != what) {
      fail(t[i], "expected '" + std::string(what) + "', found '" + t[i].text + "'");
    }
  }

  // Names inside { ... }; the opening brace is at t[i].
  std::vector<std::string> braced(const Tokens& t, std::size_t& i) const {
    std::vector<std::string> out;
    expect(t, i, "{");
    ++i;
    while (i < t.size() && t[i].text != "}") out.push_back(t[i++].text);
    expect(t, i, "}");
    ++i;
    return out;
  }

  // name | * | ~X | { a b -c }
  SetExpr type_set(const Tokens& t, std::size_t& i) const {
    if (i >= t.size()) fail(t.back(), "unexpected end of statement");
    if (t[i].text == "*") {
      ++i;
      return SetExpr::all();
    }
    if (t[i].text == "~") {
      ++i;
      return SetExpr::negate(type_set(t, i));
    }
    if (t[i].text != "{") return SetExpr::named(name(t, i++));
    const Token& open = t[i];
    std::vector<SetExpr> pos, neg;
    for (const auto& item : braced(t, i)) {
      const bool minus = !item.empty() && item[0] == '-';
      std::string n = minus ? item.substr(1) : item;
      if (!is_valid_ident(n)) fail(open, "invalid name '" + item + "' in set");
      (minus ? neg : pos).push_back(SetExpr::named(Ident(n)));
    }
    if (pos.empty()) fail(open, "empty type set");
    SetExpr p = pos.size() == 1 ? pos[0] : SetExpr::disj(std::move(pos));
    if (neg.empty()) return p;
    SetExpr n = neg.size() == 1 ? neg[0] : SetExpr::disj(std::move(neg));
    return SetExpr::conj({std::move(p), SetExpr::negate(std::move(n))});
  }

  std::vector<Ident> names_or_set(const Tokens& t, std::size_t& i) const {
    std::vector<Ident> out;
    if (i < t.size() && t[i].text == "{") {
      std::size_t at = i;
      for (const auto& s : braced(t, i)) {
        if (!is_valid_ident(s)) fail(t[at], "invalid name '" + s + "'");
        out.emplace_back(s);
      }
    } else {
      out.push_back(name(t, i++));
    }
    return out;
  }

  const std::set<Ident>* class_perms(const Ident& cls) const {
    auto it = db_.classes.find(cls);
    if (it != db_.classes.end()) return &it->second;
    return options_.class_perms ? options_.class_perms->find(cls) : nullptr;
  }

  std::set<Ident> permissions(const Tokens& t, std::size_t i, const Ident& cls) const {
    if (i >= t.size()) fail(t.back(), "missing permissions");
    const Token& at = t[i];
    auto all_for_class = [&]() {
      const std::set<Ident>* all = class_perms(cls);
      if (!all) fail(at, "no permission table entry for class '" + cls.str() + "'");
      return *all;
    };
    std::set<Ident> perms;
    if (at.text == "*") {
      if (i + 1 != t.size()) fail(at, "unexpected tokens after '*'");
      return all_for_class();
    }
    if (at.text == "~") {
      ++i;
      std::vector<std::string> excluded;
      if (i < t.size() && t[i].text == "{") {
        excluded = braced(t, i);
      } else {
        excluded.push_back(name(t, i++).str());
      }
      if (i != t.size()) fail(at, "unexpected tokens after permission set");
      perms = all_for_class();
      for (const auto& e : excluded) perms.erase(Ident(e));
    } else if (at.text == "{") {
      for (const auto& p : braced(t, i)) {
        if (!is_valid_ident(p)) fail(at, "invalid permission '" + p + "'");
        perms.insert(Ident(p));
      }
      if (i != t.size()) fail(at, "unexpected tokens after permission set");
    } else {
      for (; i < t.size(); ++i) perms.insert(name(t, i));
    }
    if (perms.empty()) fail(at, "empty permission set");
    return perms;
  }

  void access_rule(const Tokens& t, Op op) {
    std::size_t i = 1;
    SetExpr subject = type_set(t, i);
    SetExpr target = type_set(t, i);
    expect(t, i, ":");
    ++i;
    std::vector<Ident> classes = names_or_set(t, i);
    for (const auto& cls : classes) {
      PolicyRule rule;
      rule.op = op;
      rule.subject = subject;
      rule.target = target;
      rule.cls = cls;
      rule.permissions = permissions(t, i, cls);
      rule.origin = Origin{source_, t[0].line};
      db_.rules.push_back(std::move(rule));
    }
  }

  void attribute_list(const Tokens& t, std::size_t i, const Ident& type) {
    // , a1 , a2 ...  (leading comma optional for typeattribute)
    for (; i < t.size(); ++i) {
      if (t[i].text == ",") continue;
      db_.add_membership(name(t, i), SetExpr::named(type));
    }
  }

  void statement(const Tokens& t) {
    const std::string& kw = t[0].text;
    if (kw == "allow" || kw == "neverallow") {
      access_rule(t, kw == "allow" ? Op::kAllow : Op::kNeverallow);
    } else if (kw == "type") {
      Ident type = name(t, 1);
      db_.types.insert(type);
      std::size_t i = 2;
      if (i < t.size() && t[i].text == "alias") {
        ++i;
        if (i < t.size() && t[i].text == "{") {
          braced(t, i);
        } else {
          ++i;
        }
      }
      attribute_list(t, i, type);
    } else if (kw == "attribute") {
      if (t.size() != 2) fail(t[0], "malformed attribute declaration");
      db_.attributes.insert(name(t, 1));
    } else if (kw == "typeattribute") {
      if (t.size() < 3) fail(t[0], "malformed typeattribute statement");
      attribute_list(t, 2, name(t, 1));
    } else if (kw == "type_transition" || kw == "typetransition") {
      transition(t);
    } else {
      ++db_.skipped_forms;
    }
  }

  void transition(const Tokens& t) {
    TypeTransition tr;
    tr.origin = Origin{source_, t[0].line};
    tr.source = name(t, 1);
    tr.exec_type = name(t, 2);
    std::size_t i = 3;
    if (i < t.size() && t[i].text == ":") ++i;
    tr.cls = name(t, i++);
    tr.result = name(t, i++);
    if (i < t.size() && t[i].quoted) ++i;
    if (i != t.size()) fail(t[0], "malformed type_transition statement");
    db_.transitions.push_back(std::move(tr));
  }

  std::string source_;
  const ParseOptions& options_;
  PolicyDb db_;
};

std::string flat_set(const SetExpr& e, const Resolver& r) {
  if (e.is_name()) return e.name.str();
  std::set<Ident> names;
  e.collect_names(names);
  if (names.count(kSelf)) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot flatten a compound set containing self: " + e.to_string());
  }
  auto members = r.idents(r.eval(e));
  if (members.empty()) return {};
  if (members.size() == 1) return members.begin()->str();
  std::string out = "{";
  for (const auto& m : members) out += " " + m.str();
  return out + " }";
}

}  // namespace

PolicyDb parse_flat(std::string_view text, const ParseOptions& options) {
  PolicyDb db = FlatBuilder(options.source_name, options).build(text);
  if (options.finalize) finalize(db, FinalizeOptions{options.strict});
  return db;
}

std::string to_flat_text(const PolicyDb& db) {
  Resolver r(db);
  std::ostringstream out;
  for (const auto& t : db.types) out << "type " << t.str() << ";\n";
  for (const auto& a : db.attributes) out << "attribute " << a.str() << ";\n";
  for (const auto& a : db.attributes) {
    for (const auto& m : r.idents(r.members(a))) {
      out << "typeattribute " << m.str() << " " << a.str() << ";\n";
    }
  }
  for (const auto& rule : db.rules) {
    std::string s = flat_set(rule.subject, r);
    std::string t = flat_set(rule.target, r);
    if (s.empty() || t.empty()) continue;  // denotes no types
    out << op_name(rule.op) << " " << s << " " << t << ":" << rule.cls.str();
    if (rule.permissions.size() == 1) {
      out << " " << rule.permissions.begin()->str() << ";\n";
    } else {
      out << " {";
      for (const auto& p : rule.permissions) out << " " << p.str();
      out << " };\n";
    }
  }
  for (const auto& tr : db.transitions) {
    out << "type_transition " << tr.source.str() << " " << tr.exec_type.str()
        << ":" << tr.cls.str() << " " << tr.result.str() << ";\n";
  }
  return out.str();
}

}  // namespace sepal
