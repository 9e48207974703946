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

// Core policy types: identifiers, set expressions over types, policy rules,
// atomic rules and the PolicyDb container. Nothing in here does I/O.

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sepal {

bool is_valid_ident(std::string_view s);

// A type, attribute, class or permission name. Always matches
// [A-Za-z0-9_.$-]+ once constructed from a string.
class Ident {
 public:
  Ident() = default;
  explicit Ident(std::string name);
  Ident(const char* name) : Ident(std::string(name)) {}  // NOLINT

  const std::string& str() const { return name_; }
  bool empty() const { return name_.empty(); }

  friend bool operator==(const Ident&, const Ident&) = default;
  friend std::strong_ordering operator<=>(const Ident& a, const Ident& b) {
    return a.name_.compare(b.name_) <=> 0;
  }

 private:
  std::string name_;
};

inline const Ident kSelf{"self"};

// Dense ids for names; id -> name and name -> id are inverse maps.
class Interner {
 public:
  std::uint32_t intern(const Ident& name);
  std::optional<std::uint32_t> find(const Ident& name) const;
  const Ident& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<Ident> names_;
  std::map<Ident, std::uint32_t> ids_;
};

enum class Op : std::uint8_t { kAllow, kNeverallow };

const char* op_name(Op op);
std::optional<Op> parse_op(std::string_view s);

struct SetExpr {
  enum class Kind : std::uint8_t { kName, kAll, kAnd, kOr, kNot };

  Kind kind = Kind::kAll;
  Ident name;                    // kName only
  std::vector<SetExpr> children;  // kAnd/kOr: >= 1, kNot: exactly 1

  static SetExpr named(Ident name);
  static SetExpr all();
  static SetExpr conj(std::vector<SetExpr> operands);
  static SetExpr disj(std::vector<SetExpr> operands);
  static SetExpr negate(SetExpr operand);

  bool is_name() const { return kind == Kind::kName; }

  // CIL-flavoured rendering, e.g. (and (appdomain) (not (shell x))).
  std::string to_string() const;

  // Every Name referenced anywhere in the tree.
  void collect_names(std::set<Ident>& out) const;

  friend bool operator==(const SetExpr&, const SetExpr&) = default;
};

struct Origin {
  std::string file;
  int line = 0;

  std::string to_string() const;
  friend bool operator==(const Origin&, const Origin&) = default;
};

struct PolicyRule {
  Op op = Op::kAllow;
  SetExpr subject;
  SetExpr target;  // may be Name(self)
  Ident cls;
  std::set<Ident> permissions;  // never empty
  Origin origin;
};

struct AtomicRule {
  Ident subject;
  Ident target;
  Ident cls;
  Ident permission;
  Op label = Op::kAllow;

  // Lexicographic over (subject, target, class, permission, label).
  friend auto operator<=>(const AtomicRule&, const AtomicRule&) = default;
  friend bool operator==(const AtomicRule&, const AtomicRule&) = default;

  bool same_tuple(const AtomicRule& o) const {
    return subject == o.subject && target == o.target && cls == o.cls &&
           permission == o.permission;
  }
  std::string to_string() const;
};

using AtomicSet = std::set<AtomicRule>;

struct TypeTransition {
  Ident source;
  Ident exec_type;
  Ident cls;
  Ident result;
  Origin origin;
};

struct PolicyDb {
  std::set<Ident> types;
  std::set<Ident> attributes;
  std::map<Ident, SetExpr> memberships;
  std::map<Ident, std::set<Ident>> classes;  // declared class -> permissions
  std::vector<PolicyRule> rules;
  std::vector<TypeTransition> transitions;
  std::vector<std::string> warnings;
  std::size_t skipped_forms = 0;

  bool is_type(const Ident& n) const { return types.count(n) != 0; }
  bool is_attribute(const Ident& n) const { return attributes.count(n) != 0; }

  // Repeated contributions to one attribute are unioned.
  void add_membership(const Ident& attribute, SetExpr expr);

  // Appends `other` (rules keep their order, memberships are unioned).
  void merge(PolicyDb other);
};

struct FinalizeOptions {
  bool strict = false;
};

// Checks declarations after all fragments are merged. Undeclared names in
// type positions become concrete types (a warning each) unless strict, in
// which case Error(kUnknownName) is thrown. Names used only as the attribute
// of a membership are declared as attributes.
void finalize(PolicyDb& db, const FinalizeOptions& options = {});

// Bitset over the concrete types of one PolicyDb.
class TypeSet {
 public:
  TypeSet() = default;
  explicit TypeSet(std::size_t universe) : size_(universe), words_((universe + 63) / 64, 0) {}

  static TypeSet full(std::size_t universe);

  std::size_t universe() const { return size_; }
  void insert(std::size_t i) { words_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  bool contains(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }

  TypeSet& operator&=(const TypeSet& o);
  TypeSet& operator|=(const TypeSet& o);
  TypeSet& subtract(const TypeSet& o);
  TypeSet complement() const;

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits) {
        const int b = __builtin_ctzll(bits);
        f(w * 64 + static_cast<std::size_t>(b));
        bits &= bits - 1;
      }
    }
  }

  friend bool operator==(const TypeSet&, const TypeSet&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

// Evaluates set expressions against one PolicyDb. Attribute memberships are
// resolved once at construction by iterating to a fixpoint, so cyclic
// attribute definitions are fine. Immutable afterwards.
class Resolver {
 public:
  explicit Resolver(const PolicyDb& db);

  const std::vector<Ident>& types() const { return types_; }
  std::optional<std::size_t> index_of(const Ident& type) const;

  // `self_type` binds the reserved `self` token; without it `self` is an
  // unknown name.
  TypeSet eval(const SetExpr& expr, const Ident* self_type = nullptr) const;

  const TypeSet& members(const Ident& attribute) const;
  std::set<Ident> idents(const TypeSet& set) const;

  // Attributes whose resolved membership contains `type`, sorted.
  std::vector<Ident> attributes_of(const Ident& type) const;

  bool converged() const { return converged_; }

 private:
  TypeSet eval_with(const SetExpr& expr, const Ident* self_type,
                    const std::map<Ident, TypeSet>& attrs) const;

  std::vector<Ident> types_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<Ident, TypeSet> attrs_;
  bool converged_ = true;
};

// Concrete types denoted by `expr` in `db`. Throws Error(kUnknownName).
std::set<Ident> resolve(const SetExpr& expr, const PolicyDb& db);

}  // namespace sepal

template <>
struct std::hash<sepal::Ident> {
  std::size_t operator()(const sepal::Ident& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
