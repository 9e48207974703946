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

#include "policy_model.hpp"

#include <algorithm>
#include <utility>

#include "errors.hpp"

namespace sepal {

bool is_valid_ident(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '.' ||
                    c == '$' || c == '-';
    if (!ok) return false;
  }
  return true;
}

Ident::Ident(std::string name) : name_(std::move(name)) {
  if (!is_valid_ident(name_)) {
    throw Error(ErrorCode::kInvalidArgument,
                "invalid identifier '" + name_ + "'");
  }
}

std::uint32_t Interner::intern(const Ident& name) {
  auto [it, inserted] =
      ids_.emplace(name, static_cast<std::uint32_t>(names_.size()));
  if (inserted) names_.push_back(name);
  return it->second;
}

std::optional<std::uint32_t> Interner::find(const Ident& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const char* op_name(Op op) {
  return op == Op::kAllow ? "allow" : "neverallow";
}

std::optional<Op> parse_op(std::string_view s) {
  if (s == "allow") return Op::kAllow;
  if (s == "neverallow") return Op::kNeverallow;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// SetExpr

SetExpr SetExpr::named(Ident name) {
  SetExpr e;
  e.kind = Kind::kName;
  e.name = std::move(name);
  return e;
}

SetExpr SetExpr::all() { return SetExpr{}; }

SetExpr SetExpr::conj(std::vector<SetExpr> operands) {
  if (operands.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "'and' needs an operand");
  }
  SetExpr e;
  e.kind = Kind::kAnd;
  e.children = std::move(operands);
  return e;
}

SetExpr SetExpr::disj(std::vector<SetExpr> operands) {
  if (operands.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "'or' needs an operand");
  }
  SetExpr e;
  e.kind = Kind::kOr;
  e.children = std::move(operands);
  return e;
}

SetExpr SetExpr::negate(SetExpr operand) {
  SetExpr e;
  e.kind = Kind::kNot;
  e.children.push_back(std::move(operand));
  return e;
}

std::string SetExpr::to_string() const {
  switch (kind) {
    case Kind::kName: return name.str();
    case Kind::kAll: return "all";
    case Kind::kNot: return "(not " + children[0].to_string() + ")";
    case Kind::kAnd:
    case Kind::kOr: {
      std::string out = kind == Kind::kAnd ? "(and" : "(or";
      for (const auto& c : children) out += " " + c.to_string();
      return out + ")";
    }
  }
  return {};
}

void SetExpr::collect_names(std::set<Ident>& out) const {
  if (kind == Kind::kName) out.insert(name);
  for (const auto& c : children) c.collect_names(out);
}

std::string Origin::to_string() const {
  return file + ":" + std::to_string(line);
}

std::string AtomicRule::to_string() const {
  return std::string(op_name(label)) + " " + subject.str() + " " +
         target.str() + ":" + cls.str() + " " + permission.str();
}

// ---------------------------------------------------------------------------
// PolicyDb

void PolicyDb::add_membership(const Ident& attribute, SetExpr expr) {
  auto it = memberships.find(attribute);
  if (it == memberships.end()) {
    memberships.emplace(attribute, std::move(expr));
    return;
  }
  SetExpr& cur = it->second;
  if (cur.kind != SetExpr::Kind::kOr) cur = SetExpr::disj({std::move(cur)});
  if (expr.kind == SetExpr::Kind::kOr) {
    for (auto& c : expr.children) cur.children.push_back(std::move(c));
  } else {
    cur.children.push_back(std::move(expr));
  }
}

void PolicyDb::merge(PolicyDb other) {
  types.insert(other.types.begin(), other.types.end());
  attributes.insert(other.attributes.begin(), other.attributes.end());
  for (auto& [attr, expr] : other.memberships) {
    add_membership(attr, std::move(expr));
  }
  for (auto& [cls, perms] : other.classes) {
    classes[cls].insert(perms.begin(), perms.end());
  }
  std::move(other.rules.begin(), other.rules.end(), std::back_inserter(rules));
  std::move(other.transitions.begin(), other.transitions.end(),
            std::back_inserter(transitions));
  std::move(other.warnings.begin(), other.warnings.end(),
            std::back_inserter(warnings));
  skipped_forms += other.skipped_forms;
}

void finalize(PolicyDb& db, const FinalizeOptions& options) {
  for (const auto& t : db.types) {
    if (db.attributes.count(t)) {
      throw Error(ErrorCode::kFormat,
                  "'" + t.str() + "' declared as both type and attribute");
    }
  }

  for (const auto& [attr, expr] : db.memberships) {
    (void)expr;
    if (db.is_attribute(attr)) continue;
    if (db.is_type(attr)) {
      throw Error(ErrorCode::kFormat,
                  "membership assigned to type '" + attr.str() + "'");
    }
    if (options.strict) {
      throw Error(ErrorCode::kUnknownName,
                  "undeclared attribute '" + attr.str() + "'");
    }
    db.warnings.push_back("auto-declared attribute '" + attr.str() + "'");
    db.attributes.insert(attr);
  }

  // Names in type position, in first-use order so warnings are stable.
  std::vector<std::pair<Ident, std::string>> referenced;
  auto note = [&](const SetExpr& e, const std::string& where) {
    std::set<Ident> names;
    e.collect_names(names);
    for (const auto& n : names) referenced.emplace_back(n, where);
  };
  for (const auto& [attr, expr] : db.memberships) note(expr, "membership of " + attr.str());
  for (const auto& r : db.rules) {
    note(r.subject, r.origin.to_string());
    note(r.target, r.origin.to_string());
  }
  for (const auto& tr : db.transitions) {
    for (const Ident* n : {&tr.source, &tr.exec_type, &tr.result}) {
      referenced.emplace_back(*n, tr.origin.to_string());
    }
  }

  for (const auto& [name, where] : referenced) {
    if (name == kSelf || db.is_type(name) || db.is_attribute(name)) continue;
    if (options.strict) {
      throw Error(ErrorCode::kUnknownName,
                  "undeclared name '" + name.str() + "' at " + where);
    }
    db.warnings.push_back("auto-declared type '" + name.str() + "' (" +
                          where + ")");
    db.types.insert(name);
  }
}

// ---------------------------------------------------------------------------
// TypeSet

TypeSet TypeSet::full(std::size_t universe) {
  TypeSet s(universe);
  return s.complement();
}

std::size_t TypeSet::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(__builtin_popcountll(w));
  return n;
}

TypeSet& TypeSet::operator&=(const TypeSet& o) {
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
  return *this;
}

TypeSet& TypeSet::operator|=(const TypeSet& o) {
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
  return *this;
}

TypeSet& TypeSet::subtract(const TypeSet& o) {
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
  return *this;
}

TypeSet TypeSet::complement() const {
  TypeSet out(size_);
  for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] = ~words_[i];
  if (size_ % 64 != 0 && !out.words_.empty()) {
    out.words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resolver

Resolver::Resolver(const PolicyDb& db)
    : types_(db.types.begin(), db.types.end()) {
  for (std::size_t i = 0; i < types_.size(); ++i) index_[types_[i].str()] = i;

  for (const auto& a : db.attributes) attrs_.emplace(a, TypeSet(types_.size()));

  // Gauss-Seidel sweeps in attribute order. Without negation this is the
  // least fixpoint; with negation inside a cycle it may oscillate, so the
  // sweep count is bounded and the last state kept.
  const std::size_t max_sweeps = attrs_.size() + 2;
  bool changed = true;
  std::size_t sweeps = 0;
  while (changed && sweeps < max_sweeps) {
    changed = false;
    ++sweeps;
    for (auto& [attr, set] : attrs_) {
      auto it = db.memberships.find(attr);
      if (it == db.memberships.end()) continue;
      TypeSet next = eval_with(it->second, nullptr, attrs_);
      if (!(next == set)) {
        set = std::move(next);
        changed = true;
      }
    }
  }
  converged_ = !changed;
}

std::optional<std::size_t> Resolver::index_of(const Ident& type) const {
  auto it = index_.find(type.str());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TypeSet Resolver::eval(const SetExpr& expr, const Ident* self_type) const {
  return eval_with(expr, self_type, attrs_);
}

TypeSet Resolver::eval_with(const SetExpr& expr, const Ident* self_type,
                            const std::map<Ident, TypeSet>& attrs) const {
  const std::size_t n = types_.size();
  switch (expr.kind) {
    case SetExpr::Kind::kAll:
      return TypeSet::full(n);
    case SetExpr::Kind::kName: {
      if (expr.name == kSelf && self_type != nullptr) {
        TypeSet s(n);
        if (auto i = index_of(*self_type)) s.insert(*i);
        return s;
      }
      if (auto i = index_of(expr.name)) {
        TypeSet s(n);
        s.insert(*i);
        return s;
      }
      auto it = attrs.find(expr.name);
      if (it != attrs.end()) return it->second;
      throw Error(ErrorCode::kUnknownName,
                  "unknown name '" + expr.name.str() + "'");
    }
    case SetExpr::Kind::kAnd: {
      TypeSet s = eval_with(expr.children[0], self_type, attrs);
      for (std::size_t i = 1; i < expr.children.size(); ++i) {
        s &= eval_with(expr.children[i], self_type, attrs);
      }
      return s;
    }
    case SetExpr::Kind::kOr: {
      TypeSet s(n);
      for (const auto& c : expr.children) s |= eval_with(c, self_type, attrs);
      return s;
    }
    case SetExpr::Kind::kNot:
      return eval_with(expr.children[0], self_type, attrs).complement();
  }
  return TypeSet(n);
}

const TypeSet& Resolver::members(const Ident& attribute) const {
  auto it = attrs_.find(attribute);
  if (it == attrs_.end()) {
    throw Error(ErrorCode::kUnknownName,
                "unknown attribute '" + attribute.str() + "'");
  }
  return it->second;
}

std::set<Ident> Resolver::idents(const TypeSet& set) const {
  std::set<Ident> out;
  set.for_each([&](std::size_t i) { out.insert(types_[i]); });
  return out;
}

std::vector<Ident> Resolver::attributes_of(const Ident& type) const {
  std::vector<Ident> out;
  auto i = index_of(type);
  if (!i) return out;
  for (const auto& [attr, set] : attrs_) {
    if (set.contains(*i)) out.push_back(attr);
  }
  return out;
}

std::set<Ident> resolve(const SetExpr& expr, const PolicyDb& db) {
  Resolver r(db);
  return r.idents(r.eval(expr));
}

}  // namespace sepal
