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

#include "features.hpp"

#include <algorithm>
#include <future>
#include <set>
#include <unordered_map>

#include "binary_io.hpp"
#include "errors.hpp"

namespace sepal {

namespace {
constexpr int kUidSlots = kUidBucketCount;
constexpr const char* kFlagAttributes[kFlagCount - 1] = {
    "domain", "mlstrustedsubject", "coredomain", "appdomain", "netdomain"};
}  // namespace

Vocabulary Vocabulary::build(const AtomicSet& train) {
  std::array<std::set<Ident>, 4> seen;
  for (const auto& a : train) {
    seen[0].insert(a.subject);
    seen[1].insert(a.target);
    seen[2].insert(a.cls);
    seen[3].insert(a.permission);
  }
  Vocabulary v;
  for (int f = 0; f < 4; ++f) {
    std::uint32_t next = 1;
    for (const auto& name : seen[f]) v.maps_[f].emplace(name, next++);
  }
  return v;
}

std::uint32_t Vocabulary::id(Field f, const Ident& name) const {
  const auto& m = maps_[static_cast<int>(f)];
  auto it = m.find(name);
  return it == m.end() ? 0 : it->second;
}

std::uint32_t Vocabulary::slots(Field f) const {
  return static_cast<std::uint32_t>(maps_[static_cast<int>(f)].size()) + 1;
}

const std::map<Ident, std::uint32_t>& Vocabulary::entries(Field f) const {
  return maps_[static_cast<int>(f)];
}

void Vocabulary::set_entries(Field f, std::map<Ident, std::uint32_t> entries) {
  std::vector<bool> used(entries.size() + 1, false);
  for (const auto& [name, id] : entries) {
    if (id == 0 || id > entries.size() || used[id]) {
      throw Error(ErrorCode::kFormat, "vocabulary ids must be a permutation of 1..n");
    }
    used[id] = true;
  }
  maps_[static_cast<int>(f)] = std::move(entries);
}

std::uint8_t FlagSet::mask() const {
  std::uint8_t m = 0;
  for (int i = 0; i < kFlagCount; ++i) {
    if (bits[i]) m |= static_cast<std::uint8_t>(1u << i);
  }
  return m;
}

FlagSet FlagSet::from_mask(std::uint8_t m) {
  FlagSet f;
  for (int i = 0; i < kFlagCount; ++i) f.bits[i] = (m >> i) & 1;
  return f;
}

std::string FlagSet::to_string() const {
  std::string s;
  for (bool b : bits) s.push_back(b ? '1' : '0');
  return s;
}

FlagSet flags_of(const Ident& type, const std::vector<Ident>& attributes,
                 const FlagConfig& config) {
  auto has = [&](const Ident& a) {
    return std::binary_search(attributes.begin(), attributes.end(), a);
  };
  FlagSet f;
  for (int i = 0; i < kFlagCount - 1; ++i) f.bits[i] = has(Ident(kFlagAttributes[i]));
  for (const auto& u : config.untrusted) {
    if (u == type || has(u)) f.bits[5] = true;
  }
  return f;
}

TypeInfoMap build_type_info(const PolicyDb& db, const FlagConfig& config) {
  const Resolver r(db);
  TypeInfoMap out;
  for (const auto& t : r.types()) {
    TypeInfo info;
    info.attributes = r.attributes_of(t);
    info.flags = flags_of(t, info.attributes, config);
    out.emplace(t, std::move(info));
  }
  return out;
}

std::uint32_t EncoderContext::cross_offset() const {
  return vocab.slots(Field::kSubject) + vocab.slots(Field::kTarget) +
         vocab.slots(Field::kClass) + vocab.slots(Field::kPermission) + 2 * kFlagCount +
         kUidSlots;
}

std::uint32_t EncoderContext::wide_dim() const { return cross_offset() + hash_buckets; }

Ident EncoderContext::unit_for(const Ident& subject) const {
  if (auto it = unit_map.find(subject); it != unit_map.end()) return it->second;
  auto has_doc = [&](const Ident& u) {
    return doc_vecs.count({u, Op::kAllow}) || doc_vecs.count({u, Op::kNeverallow});
  };
  if (has_doc(subject)) return subject;
  if (auto it = types.find(subject); it != types.end()) {
    for (const auto& a : it->second.attributes) {
      if (has_doc(a)) return a;
    }
  }
  return Ident();
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::array<std::string, kCrossCount> cross_keys(const AtomicRule& a, const FlagSet& f) {
  const char sep = '\x1f';
  return {
      "tc" + std::string(1, sep) + a.target.str() + sep + a.cls.str(),
      "cp" + std::string(1, sep) + a.cls.str() + sep + a.permission.str(),
      "tcp" + std::string(1, sep) + a.target.str() + sep + a.cls.str() + sep +
          a.permission.str(),
      "sf" + std::string(1, sep) + a.subject.str() + sep + f.to_string(),
  };
}

EncodedExample encode(const AtomicRule& a, const EncoderContext& ctx) {
  EncodedExample ex;
  const Vocabulary& v = ctx.vocab;
  ex.deep_ids = {v.id(Field::kSubject, a.subject), v.id(Field::kTarget, a.target),
                 v.id(Field::kClass, a.cls), v.id(Field::kPermission, a.permission)};
  if (auto it = ctx.types.find(a.subject); it != ctx.types.end()) ex.flags = it->second.flags;
  ex.uid = lookup_bucket(ctx.uids, a.subject);
  ex.label = a.label == Op::kAllow ? 1 : 0;

  std::uint32_t off = 0;
  int k = 0;
  const Field fields[4] = {Field::kSubject, Field::kTarget, Field::kClass, Field::kPermission};
  for (int f = 0; f < 4; ++f) {
    ex.wide[k++] = off + ex.deep_ids[f];
    off += v.slots(fields[f]);
  }
  for (int i = 0; i < kFlagCount; ++i) ex.wide[k++] = off + 2 * i + (ex.flags.bits[i] ? 1 : 0);
  off += 2 * kFlagCount;
  ex.wide[k++] = off + static_cast<std::uint32_t>(ex.uid);
  off += kUidSlots;
  for (const auto& key : cross_keys(a, ex.flags)) {
    ex.wide[k++] = off + static_cast<std::uint32_t>(fnv1a64(key) % ctx.hash_buckets);
  }

  ex.allow_vec.assign(ctx.vec_dim, 0.0);
  ex.neverallow_vec.assign(ctx.vec_dim, 0.0);
  const Ident unit = ctx.unit_for(a.subject);
  if (!unit.empty()) {
    auto copy = [&](Op p, std::vector<double>& dst) {
      auto it = ctx.doc_vecs.find({unit, p});
      if (it == ctx.doc_vecs.end()) return;
      if (static_cast<int>(it->second.size()) != ctx.vec_dim) {
        throw Error(ErrorCode::kFormat, "comment vector for '" + unit.str() +
                                            "' has the wrong dimension");
      }
      dst = it->second;
    };
    copy(Op::kAllow, ex.allow_vec);
    copy(Op::kNeverallow, ex.neverallow_vec);
  }
  return ex;
}

std::vector<EncodedExample> encode_all(const AtomicSet& atomics, const EncoderContext& ctx,
                                       int jobs) {
  std::vector<const AtomicRule*> items;
  items.reserve(atomics.size());
  for (const auto& a : atomics) items.push_back(&a);
  std::vector<EncodedExample> out(items.size());
  const std::size_t n = items.size();
  const std::size_t j = std::max<std::size_t>(1, std::min<std::size_t>(jobs, n ? n : 1));
  auto run = [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = encode(*items[i], ctx);
  };
  if (j == 1) {
    run(0, n);
  } else {
    std::vector<std::future<void>> fs;
    for (std::size_t t = 0; t < j; ++t) {
      fs.push_back(std::async(std::launch::async, run, n * t / j, n * (t + 1) / j));
    }
    for (auto& f : fs) f.get();
  }
  return out;
}

EncodedExample encode(const AtomicRule& atomic, const PolicyDb& db,
                      const std::map<Ident, UidBucket>& uid_map, const DocVectorMap& doc_vecs,
                      const Vocabulary& vocab, std::uint32_t hash_buckets) {
  EncoderContext ctx;
  ctx.vocab = vocab;
  ctx.types = build_type_info(db);
  ctx.uids = uid_map;
  ctx.doc_vecs = doc_vecs;
  ctx.hash_buckets = hash_buckets;
  if (!doc_vecs.empty()) ctx.vec_dim = static_cast<int>(doc_vecs.begin()->second.size());
  return encode(atomic, ctx);
}

CollisionStats cross_collisions(const AtomicSet& atomics, const EncoderContext& ctx) {
  std::set<std::string> keys;
  for (const auto& a : atomics) {
    FlagSet f;
    if (auto it = ctx.types.find(a.subject); it != ctx.types.end()) f = it->second.flags;
    for (auto& k : cross_keys(a, f)) keys.insert(std::move(k));
  }
  std::set<std::uint64_t> buckets;
  for (const auto& k : keys) buckets.insert(fnv1a64(k) % ctx.hash_buckets);
  return CollisionStats{keys.size(), buckets.size(), keys.size() - buckets.size()};
}

namespace {
constexpr char kSepfMagic[4] = {'S', 'E', 'P', 'F'};
constexpr std::uint16_t kSepfVersion = 1;
}  // namespace

std::string examples_to_binary(const std::vector<EncodedExample>& examples,
                               std::uint32_t hash_buckets, std::uint32_t wide_dim) {
  const std::uint32_t dim =
      examples.empty() ? 0 : static_cast<std::uint32_t>(examples.front().allow_vec.size());
  ByteWriter w;
  w.bytes(std::string_view(kSepfMagic, 4));
  w.u16(kSepfVersion);
  w.u32(hash_buckets);
  w.u32(wide_dim);
  w.u32(dim);
  w.u64(examples.size());
  for (const auto& ex : examples) {
    if (ex.allow_vec.size() != dim || ex.neverallow_vec.size() != dim) {
      throw Error(ErrorCode::kInvalidArgument, "examples have mixed vector dimensions");
    }
    for (std::uint32_t i : ex.wide) w.u32(i);
    for (std::uint32_t i : ex.deep_ids) w.u32(i);
    w.u8(ex.flags.mask());
    w.u8(static_cast<std::uint8_t>(ex.uid));
    w.u8(ex.label);
    w.u8(0);
    for (double x : ex.allow_vec) w.f32(static_cast<float>(x));
    for (double x : ex.neverallow_vec) w.f32(static_cast<float>(x));
  }
  return w.take();
}

std::vector<EncodedExample> examples_from_binary(std::string_view data,
                                                 std::uint32_t* hash_buckets,
                                                 std::uint32_t* wide_dim) {
  ByteReader r(data, "SEPF");
  if (r.bytes(4) != std::string_view(kSepfMagic, 4)) {
    throw Error(ErrorCode::kFormat, "not an SEPF file");
  }
  if (r.u16() != kSepfVersion) throw Error(ErrorCode::kFormat, "unsupported SEPF version");
  const std::uint32_t hb = r.u32();
  const std::uint32_t wd = r.u32();
  const std::uint32_t dim = r.u32();
  const std::uint64_t n = r.u64();
  const std::uint64_t record = 4 * (kWideActive + 4) + 4 + 8ull * dim;
  if (n > r.remaining() / record) throw Error(ErrorCode::kFormat, "SEPF: truncated");
  std::vector<EncodedExample> out(n);
  for (auto& ex : out) {
    for (auto& i : ex.wide) {
      i = r.u32();
      if (i >= wd) throw Error(ErrorCode::kFormat, "SEPF: wide index out of range");
    }
    for (auto& i : ex.deep_ids) i = r.u32();
    ex.flags = FlagSet::from_mask(r.u8());
    const std::uint8_t uid = r.u8();
    if (uid >= kUidBucketCount) throw Error(ErrorCode::kFormat, "SEPF: bad uid bucket");
    ex.uid = static_cast<UidBucket>(uid);
    ex.label = r.u8();
    r.u8();
    ex.allow_vec.resize(dim);
    ex.neverallow_vec.resize(dim);
    for (auto& x : ex.allow_vec) x = r.f32();
    for (auto& x : ex.neverallow_vec) x = r.f32();
  }
  if (!r.done()) throw Error(ErrorCode::kFormat, "SEPF: trailing bytes");
  if (hash_buckets) *hash_buckets = hb;
  if (wide_dim) *wide_dim = wd;
  return out;
}

}  // namespace sepal
