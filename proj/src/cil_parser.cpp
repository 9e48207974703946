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

#include <set>
#include <string>
#include <vector>

#include "errors.hpp"
#include "parsers.hpp"

namespace sepal {
namespace {

struct SNode {
  bool is_list = false;
  bool quoted = false;
  std::string atom;
  std::vector<SNode> items;
  int line = 0;
  int col = 0;
};

class SExprReader {
 public:
  SExprReader(std::string_view text, std::string source)
      : text_(text), source_(std::move(source)) {}

  std::vector<SNode> read_all() {
    std::vector<SNode> top;
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) break;
      if (text_[pos_] == ')') fail("unbalanced ')'");
      top.push_back(read_node());
    }
    return top;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(source_, line_, col_, msg);
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else {
        break;
      }
    }
  }

  SNode read_node() {
    SNode node;
    node.line = line_;
    node.col = col_;
    char c = text_[pos_];
    if (c == '(') {
      node.is_list = true;
      advance();
      while (true) {
        skip_space();
        if (pos_ >= text_.size()) {
          throw SyntaxError(source_, node.line, node.col, "unclosed '('");
        }
        if (text_[pos_] == ')') {
          advance();
          break;
        }
        node.items.push_back(read_node());
      }
      return node;
    }
    if (c == '"') {
      node.quoted = true;
      advance();
      while (pos_ < text_.size() && text_[pos_] != '"') {
        node.atom.push_back(text_[pos_]);
        advance();
      }
      if (pos_ >= text_.size()) {
        throw SyntaxError(source_, node.line, node.col, "unterminated string");
      }
      advance();
      return node;
    }
    while (pos_ < text_.size()) {
      c = text_[pos_];
      if (c == '(' || c == ')' || c == ';' || c == ' ' || c == '\t' ||
          c == '\n' || c == '\r' || c == '"') {
        break;
      }
      node.atom.push_back(c);
      advance();
    }
    return node;
  }

  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool is_atom(const SNode& n, std::string_view s) {
  return !n.is_list && !n.quoted && n.atom == s;
}

class CilBuilder {
 public:
  CilBuilder(std::string source, const ParseOptions& options)
      : source_(std::move(source)), options_(options) {}

  PolicyDb build(const std::vector<SNode>& top) {
    std::vector<std::string> scope;
    for (const auto& n : top) collect_decls(n, scope);
    for (const auto& n : top) statement(n, scope);
    for (const auto& [cls, common] : class_commons_) {
      auto it = commons_.find(common);
      if (it != commons_.end()) {
        db_.classes[cls].insert(it->second.begin(), it->second.end());
      }
    }
    return std::move(db_);
  }

 private:
  [[noreturn]] void fail(const SNode& at, const std::string& msg) const {
    throw SyntaxError(source_, at.line, at.col, msg);
  }

  static std::string join(const std::vector<std::string>& scope,
                          std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) out += '.';
      out += scope[i];
    }
    return out;
  }

  static std::string local_name(const std::vector<std::string>& scope,
                                const std::string& name) {
    if (scope.empty()) return name;
    return join(scope, scope.size()) + "." + name;
  }

  Ident ident(const SNode& n) const {
    if (n.is_list) fail(n, "expected a name, found a list");
    if (!is_valid_ident(n.atom)) fail(n, "invalid name '" + n.atom + "'");
    return Ident(n.atom);
  }

  // Innermost enclosing block that declares the name wins; otherwise global.
  Ident qualify(const SNode& n, const std::vector<std::string>& scope) const {
    if (n.is_list) fail(n, "expected a name, found a list");
    std::string name = n.atom;
    if (!name.empty() && name[0] == '.') name.erase(0, 1);
    if (name.find('.') == std::string::npos) {
      for (std::size_t depth = scope.size(); depth > 0; --depth) {
        std::string candidate = join(scope, depth) + "." + name;
        if (block_decls_.count(candidate)) return Ident(candidate);
      }
    }
    if (!is_valid_ident(name)) fail(n, "invalid name '" + n.atom + "'");
    return Ident(name);
  }

  static bool is_container(const SNode& n) {
    return n.is_list && n.items.size() >= 2 &&
           (is_atom(n.items[0], "block") || is_atom(n.items[0], "in") ||
            is_atom(n.items[0], "optional"));
  }

  void collect_decls(const SNode& n, std::vector<std::string>& scope) {
    if (!n.is_list || n.items.empty() || n.items[0].is_list) return;
    const std::string& head = n.items[0].atom;
    if (is_container(n)) {
      const bool opens_scope = head != "optional";
      if (opens_scope) scope.push_back(n.items[1].atom);
      for (std::size_t i = 2; i < n.items.size(); ++i) collect_decls(n.items[i], scope);
      if (opens_scope) scope.pop_back();
      return;
    }
    if ((head == "type" || head == "typeattribute") && n.items.size() == 2 &&
        !scope.empty()) {
      block_decls_.insert(local_name(scope, n.items[1].atom));
    }
  }

  void statement(const SNode& n, std::vector<std::string>& scope) {
    if (!n.is_list || n.items.empty() || n.items[0].is_list) {
      ++db_.skipped_forms;
      return;
    }
    const std::string& head = n.items[0].atom;
    if (is_container(n)) {
      const bool opens_scope = head != "optional";
      if (opens_scope) scope.push_back(n.items[1].atom);
      for (std::size_t i = 2; i < n.items.size(); ++i) statement(n.items[i], scope);
      if (opens_scope) scope.pop_back();
      return;
    }
    if (head == "type" && n.items.size() == 2) {
      db_.types.insert(declared(n.items[1], scope));
    } else if (head == "typeattribute" && n.items.size() == 2) {
      db_.attributes.insert(declared(n.items[1], scope));
    } else if (head == "typeattributeset" && n.items.size() == 3) {
      db_.add_membership(qualify(n.items[1], scope), expr(n.items[2], scope));
    } else if ((head == "allow" || head == "neverallow") && n.items.size() == 4) {
      access_rule(n, head == "allow" ? Op::kAllow : Op::kNeverallow, scope);
    } else if (head == "typetransition" &&
               (n.items.size() == 5 || n.items.size() == 6)) {
      TypeTransition tr;
      tr.source = qualify(n.items[1], scope);
      tr.exec_type = qualify(n.items[2], scope);
      tr.cls = ident(n.items[3]);
      tr.result = qualify(n.items.back(), scope);
      tr.origin = Origin{source_, n.line};
      db_.transitions.push_back(std::move(tr));
    } else if (head == "class" && n.items.size() == 3 && n.items[2].is_list) {
      auto& perms = db_.classes[ident(n.items[1])];
      for (const auto& p : n.items[2].items) perms.insert(ident(p));
    } else if (head == "common" && n.items.size() == 3 && n.items[2].is_list) {
      auto& perms = commons_[n.items[1].atom];
      for (const auto& p : n.items[2].items) perms.insert(ident(p));
    } else if (head == "classcommon" && n.items.size() == 3) {
      class_commons_.emplace_back(ident(n.items[1]), n.items[2].atom);
    } else {
      ++db_.skipped_forms;
    }
  }

  Ident declared(const SNode& name, const std::vector<std::string>& scope) const {
    Ident plain = ident(name);
    if (scope.empty()) return plain;
    return Ident(local_name(scope, plain.str()));
  }

  void access_rule(const SNode& n, Op op, const std::vector<std::string>& scope) {
    const SNode& cp = n.items[3];
    if (!cp.is_list) {
      // Named classpermission sets are not tracked.
      ++db_.skipped_forms;
      return;
    }
    if (cp.items.size() != 2 || cp.items[0].is_list || !cp.items[1].is_list) {
      fail(cp, "expected (class (permission ...))");
    }
    PolicyRule rule;
    rule.op = op;
    rule.subject = SetExpr::named(qualify(n.items[1], scope));
    rule.target = SetExpr::named(qualify(n.items[2], scope));
    rule.cls = ident(cp.items[0]);
    rule.origin = Origin{source_, n.line};
    for (const auto& p : cp.items[1].items) {
      if (p.is_list) {
        // Permission expressions like (not (read)) are not supported.
        ++db_.skipped_forms;
        return;
      }
      if (p.atom == "all") {
        const std::set<Ident>* all = all_perms(rule.cls);
        if (!all) fail(p, "no permission list for class '" + rule.cls.str() + "'");
        rule.permissions.insert(all->begin(), all->end());
      } else {
        rule.permissions.insert(ident(p));
      }
    }
    if (rule.permissions.empty()) fail(cp, "empty permission list");
    db_.rules.push_back(std::move(rule));
  }

  const std::set<Ident>* all_perms(const Ident& cls) const {
    auto it = db_.classes.find(cls);
    if (it != db_.classes.end()) return &it->second;
    return options_.class_perms ? options_.class_perms->find(cls) : nullptr;
  }

  // Operand lists accept both (not X) and the bare `not X` spelling.
  std::vector<SetExpr> operands(const SNode& list, std::size_t first,
                                const std::vector<std::string>& scope) const {
    std::vector<SetExpr> out;
    for (std::size_t i = first; i < list.items.size(); ++i) {
      if (is_atom(list.items[i], "not")) {
        if (i + 1 >= list.items.size()) fail(list.items[i], "'not' needs an operand");
        out.push_back(SetExpr::negate(expr(list.items[++i], scope)));
      } else {
        out.push_back(expr(list.items[i], scope));
      }
    }
    return out;
  }

  SetExpr expr(const SNode& n, const std::vector<std::string>& scope) const {
    if (!n.is_list) {
      if (is_atom(n, "all")) return SetExpr::all();
      return SetExpr::named(qualify(n, scope));
    }
    if (n.items.empty()) fail(n, "empty expression");
    const SNode& head = n.items[0];
    if (is_atom(head, "and") || is_atom(head, "or")) {
      auto ops = operands(n, 1, scope);
      if (ops.empty()) fail(n, "operator needs operands");
      return is_atom(head, "and") ? SetExpr::conj(std::move(ops))
                                  : SetExpr::disj(std::move(ops));
    }
    if (is_atom(head, "not")) {
      if (n.items.size() != 2) fail(n, "'not' takes exactly one operand");
      return SetExpr::negate(expr(n.items[1], scope));
    }
    if (is_atom(head, "xor")) {
      if (n.items.size() != 3) fail(n, "'xor' takes two operands");
      SetExpr a = expr(n.items[1], scope);
      SetExpr b = expr(n.items[2], scope);
      return SetExpr::disj({SetExpr::conj({a, SetExpr::negate(b)}),
                            SetExpr::conj({SetExpr::negate(a), b})});
    }
    auto ops = operands(n, 0, scope);
    if (ops.size() == 1) return std::move(ops[0]);
    return SetExpr::disj(std::move(ops));
  }

  std::string source_;
  const ParseOptions& options_;
  PolicyDb db_;
  std::set<std::string> block_decls_;
  std::map<std::string, std::set<Ident>> commons_;
  std::vector<std::pair<Ident, std::string>> class_commons_;
};

}  // namespace

PolicyDb parse_cil(std::string_view text, const ParseOptions& options) {
  SExprReader reader(text, options.source_name);
  auto top = reader.read_all();
  PolicyDb db = CilBuilder(options.source_name, options).build(top);
  if (options.finalize) finalize(db, FinalizeOptions{options.strict});
  return db;
}

}  // namespace sepal
