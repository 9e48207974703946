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

// Feature view of an atomic rule for the wide and deep model parts.
//
// Wide index layout (kWideActive indices per example, each field block
// reserves slot 0 for out-of-vocabulary):
//   [subject one-hot | target | class | permission | 6 flags x {false,true}
//    | uid bucket | hashed crosses (hash_buckets)]

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "comment_nlp.hpp"
#include "policy_model.hpp"
#include "uid_inference.hpp"

namespace sepal {

inline constexpr std::uint32_t kDefaultHashBuckets = 1u << 18;
inline constexpr int kFlagCount = 6;
inline constexpr int kCrossCount = 4;
inline constexpr int kWideActive = 4 + kFlagCount + 1 + kCrossCount;
inline constexpr int kDefaultVecDim = 300;

enum class Field : std::uint8_t { kSubject, kTarget, kClass, kPermission };

class Vocabulary {
 public:
  static Vocabulary build(const AtomicSet& train);

  // 0 when unseen.
  std::uint32_t id(Field f, const Ident& name) const;
  // Entries including the reserved 0 slot.
  std::uint32_t slots(Field f) const;
  const std::map<Ident, std::uint32_t>& entries(Field f) const;

  void set_entries(Field f, std::map<Ident, std::uint32_t> entries);

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::array<std::map<Ident, std::uint32_t>, 4> maps_;
};

struct FlagSet {
  // domain, mls, core, app, net, untrusted
  std::array<bool, kFlagCount> bits{};

  bool domain() const { return bits[0]; }
  bool mls() const { return bits[1]; }
  bool core() const { return bits[2]; }
  bool app() const { return bits[3]; }
  bool net() const { return bits[4]; }
  bool untrusted() const { return bits[5]; }

  std::uint8_t mask() const;
  static FlagSet from_mask(std::uint8_t m);
  std::string to_string() const;  // e.g. "101110"

  friend bool operator==(const FlagSet&, const FlagSet&) = default;
};

struct FlagConfig {
  std::vector<Ident> untrusted{"untrusted_app_all", "untrusted_app", "isolated_app"};
};

struct TypeInfo {
  FlagSet flags;
  std::vector<Ident> attributes;  // resolved, sorted
};

using TypeInfoMap = std::map<Ident, TypeInfo>;

// Per concrete type of `db`: the six flags and the attributes it belongs to.
TypeInfoMap build_type_info(const PolicyDb& db, const FlagConfig& config = {});
FlagSet flags_of(const Ident& type, const std::vector<Ident>& attributes,
                 const FlagConfig& config = {});

// Everything encode() needs besides the atomic itself.
struct EncoderContext {
  Vocabulary vocab;
  TypeInfoMap types;
  std::map<Ident, UidBucket> uids;
  DocVectorMap doc_vecs;
  std::map<Ident, Ident> unit_map;  // explicit subject -> TE unit
  std::uint32_t hash_buckets = kDefaultHashBuckets;
  int vec_dim = kDefaultVecDim;

  std::uint32_t wide_dim() const;
  std::uint32_t cross_offset() const;

  // Explicit map, else the subject's own name, else its first attribute
  // that has a document. Empty when nothing matches.
  Ident unit_for(const Ident& subject) const;
};

struct EncodedExample {
  std::array<std::uint32_t, kWideActive> wide{};
  std::array<std::uint32_t, 4> deep_ids{};
  FlagSet flags;
  UidBucket uid = UidBucket::kUnknown;
  std::vector<double> allow_vec;
  std::vector<double> neverallow_vec;
  std::uint8_t label = 1;  // 1 allow, 0 neverallow

  friend bool operator==(const EncodedExample&, const EncodedExample&) = default;
};

std::uint64_t fnv1a64(std::string_view data);

// Keys fed to the hash for the four crosses, in wide-index order:
// target x class, class x permission, target x class x permission,
// subject x flags.
std::array<std::string, kCrossCount> cross_keys(const AtomicRule& a, const FlagSet& subject_flags);

EncodedExample encode(const AtomicRule& atomic, const EncoderContext& ctx);
std::vector<EncodedExample> encode_all(const AtomicSet& atomics, const EncoderContext& ctx,
                                       int jobs = 1);

// Convenience form building a one-off context from a db.
EncodedExample encode(const AtomicRule& atomic, const PolicyDb& db,
                      const std::map<Ident, UidBucket>& uid_map, const DocVectorMap& doc_vecs,
                      const Vocabulary& vocab, std::uint32_t hash_buckets = kDefaultHashBuckets);

struct CollisionStats {
  std::size_t distinct_keys = 0;
  std::size_t occupied_buckets = 0;
  std::size_t collisions = 0;  // distinct_keys - occupied_buckets
};

// Collisions among the distinct crossed-feature keys of `atomics`.
CollisionStats cross_collisions(const AtomicSet& atomics, const EncoderContext& ctx);

// SEPF example file (layout in docs/formats.md).
std::string examples_to_binary(const std::vector<EncodedExample>& examples,
                               std::uint32_t hash_buckets, std::uint32_t wide_dim);
std::vector<EncodedExample> examples_from_binary(std::string_view data,
                                                 std::uint32_t* hash_buckets = nullptr,
                                                 std::uint32_t* wide_dim = nullptr);

}  // namespace sepal
