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


#include <map>
#include <set>
#include <string>

#include "doctest.h"
#include "features.hpp"
#include "oracles.hpp"
#include "parsers.hpp"
#include "pipeline.hpp"
#include "rng.hpp"

using namespace sepal;

namespace {

const char* kDb =
    "attribute domain;\nattribute appdomain;\nattribute netdomain;\nattribute coredomain;\n"
    "attribute mlstrustedsubject;\n"
    "type untrusted_app, domain, appdomain, netdomain;\n"
    "type init, domain, coredomain, mlstrustedsubject;\n"
    "type app_data_file;\ntype kernel;\n"
    "allow untrusted_app app_data_file:file { read write };\n"
    "allow init kernel:security load_policy;\n";

AtomicRule atom(const char* s, const char* t, const char* c, const char* p, Op l = Op::kAllow) {
  return {s, t, c, p, l};
}

}  // namespace

TEST_CASE("fnv1a64 reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("vocabulary indices are contiguous from one") {
  const AtomicSet train{atom("a", "x", "file", "read"), atom("b", "x", "file", "write"),
                        atom("c", "y", "dir", "read")};
  const Vocabulary v = Vocabulary::build(train);
  CHECK(v.slots(Field::kSubject) == 4);
  CHECK(v.slots(Field::kTarget) == 3);
  CHECK(v.slots(Field::kClass) == 3);
  CHECK(v.slots(Field::kPermission) == 3);
  std::set<std::uint32_t> ids;
  for (const auto& [n, id] : v.entries(Field::kSubject)) ids.insert(id);
  CHECK(ids == std::set<std::uint32_t>{1, 2, 3});
  CHECK(v.id(Field::kSubject, "vendor_only") == 0);
}

TEST_CASE("vocabulary sizes equal distinct counts per field") {
  Rng rng(21);
  AtomicSet train;
  for (int i = 0; i < 400; ++i) {
    train.insert({Ident("s" + std::to_string(rng.below(30))), Ident("t" + std::to_string(rng.below(50))),
                  Ident("c" + std::to_string(rng.below(7))), Ident("p" + std::to_string(rng.below(12)))});
  }
  std::set<Ident> s, t, c, p;
  for (const auto& a : train) {
    s.insert(a.subject);
    t.insert(a.target);
    c.insert(a.cls);
    p.insert(a.permission);
  }
  const Vocabulary v = Vocabulary::build(train);
  CHECK(v.slots(Field::kSubject) == s.size() + 1);
  CHECK(v.slots(Field::kTarget) == t.size() + 1);
  CHECK(v.slots(Field::kClass) == c.size() + 1);
  CHECK(v.slots(Field::kPermission) == p.size() + 1);
}

TEST_CASE("flags come from attribute membership") {
  const PolicyDb db = parse_flat(kDb);
  const TypeInfoMap info = build_type_info(db);
  const FlagSet app = info.at("untrusted_app").flags;
  CHECK(app.domain());
  CHECK(app.app());
  CHECK(app.net());
  CHECK(app.untrusted());
  CHECK_FALSE(app.core());
  CHECK_FALSE(app.mls());
  const FlagSet init = info.at("init").flags;
  CHECK(init.domain());
  CHECK(init.core());
  CHECK(init.mls());
  CHECK_FALSE(init.app());
  CHECK(info.at("kernel").flags.mask() == 0);
  for (std::uint8_t m = 0; m < 64; ++m) CHECK(FlagSet::from_mask(m).mask() == m);
}

TEST_CASE("encoding: layout, bounds and oov") {
  const PolicyDb db = parse_flat(kDb);
  const AtomicSet train = expand(db);
  const EncoderContext ctx = make_context(train, db, {{"untrusted_app", UidBucket::kApp}}, {}, 1024);
  const EncodedExample ex = encode(atom("untrusted_app", "app_data_file", "file", "read"), ctx);
  CHECK(ex.label == 1);
  CHECK(ex.uid == UidBucket::kApp);
  CHECK(ex.flags == build_type_info(db).at("untrusted_app").flags);
  for (auto i : ex.wide) CHECK(i < ctx.wide_dim());
  for (int k = kWideActive - kCrossCount; k < kWideActive; ++k) {
    CHECK(ex.wide[k] >= ctx.cross_offset());
  }
  CHECK(ex.deep_ids[0] == ctx.vocab.id(Field::kSubject, "untrusted_app"));
  CHECK(ex.allow_vec == std::vector<double>(ctx.vec_dim, 0.0));

  const EncodedExample oov = encode(atom("vendor_x", "app_data_file", "file", "read", Op::kNeverallow), ctx);
  CHECK(oov.deep_ids[0] == 0);
  CHECK(oov.label == 0);
  CHECK(oov.uid == UidBucket::kUnknown);
}

TEST_CASE("encoding: shared crosses hash identically") {
  const PolicyDb db = parse_flat(kDb);
  const EncoderContext ctx = make_context(expand(db), db, {}, {}, 4096);
  const auto a = encode(atom("untrusted_app", "app_data_file", "file", "read"), ctx);
  const auto b = encode(atom("untrusted_app", "app_data_file", "file", "write"), ctx);
  const int tc = kWideActive - kCrossCount;
  CHECK(a.wide[tc] == b.wide[tc]);
  CHECK(a.wide[tc + 3] == b.wide[tc + 3]);
  CHECK(a.wide[tc + 2] != b.wide[tc + 2]);
  CHECK(a.wide[tc] ==
        ctx.cross_offset() +
            fnv1a64(cross_keys(atom("untrusted_app", "app_data_file", "file", "read"), a.flags)[0]) %
                4096);
}

TEST_CASE("encoding is pure and parallel-safe") {
  const PolicyDb db = parse_flat(kDb);
  const AtomicSet train = expand(db);
  DocVectorMap vecs;
  vecs[{Ident("untrusted_app"), Op::kAllow}] = std::vector<double>(kDefaultVecDim, 0.25);
  const EncoderContext ctx = make_context(train, db, {}, vecs);
  const auto one = encode_all(train, ctx, 1);
  const auto four = encode_all(train, ctx, 4);
  CHECK(one == four);
  const auto ex = encode(atom("untrusted_app", "app_data_file", "file", "read"), ctx);
  CHECK(ex.allow_vec == std::vector<double>(kDefaultVecDim, 0.25));
  CHECK(ex.neverallow_vec == std::vector<double>(kDefaultVecDim, 0.0));
  const auto via_db = encode(atom("untrusted_app", "app_data_file", "file", "read"), db, {}, vecs,
                             ctx.vocab);
  CHECK(via_db == ex);
}

TEST_CASE("crossed-feature collisions match an exact count") {
  Rng rng(31);
  AtomicSet atoms;
  while (atoms.size() < 1000) {
    atoms.insert({Ident("s" + std::to_string(rng.below(40))), Ident("t" + std::to_string(rng.below(80))),
                  Ident("c" + std::to_string(rng.below(6))), Ident("p" + std::to_string(rng.below(10)))});
  }
  EncoderContext ctx;
  ctx.vocab = Vocabulary::build(atoms);
  ctx.hash_buckets = 2048;  // small on purpose so collisions occur
  const CollisionStats got = cross_collisions(atoms, ctx);

  // Oracle: bucket -> distinct keys, with FNV-1a written out here.
  auto fnv = [](const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
    return h;
  };
  const std::string sep(1, '\x1f');
  std::set<std::string> keys;
  for (const auto& a : atoms) {
    keys.insert("tc" + sep + a.target.str() + sep + a.cls.str());
    keys.insert("cp" + sep + a.cls.str() + sep + a.permission.str());
    keys.insert("tcp" + sep + a.target.str() + sep + a.cls.str() + sep + a.permission.str());
    keys.insert("sf" + sep + a.subject.str() + sep + "000000");
  }
  std::map<std::uint64_t, std::size_t> per_bucket;
  for (const auto& k : keys) ++per_bucket[fnv(k) % 2048];
  std::size_t collisions = 0;
  for (const auto& [b, n] : per_bucket) collisions += n - 1;
  CHECK(got.distinct_keys == keys.size());
  CHECK(got.collisions == collisions);
  CHECK(got.collisions > 0);
}

TEST_CASE("example file round trip") {
  const PolicyDb db = parse_flat(kDb);
  const AtomicSet train = expand(db);
  const EncoderContext ctx = make_context(train, db, {}, {}, 512);
  const auto ex = encode_all(train, ctx);
  const std::string bin = examples_to_binary(ex, ctx.hash_buckets, ctx.wide_dim());
  CHECK(bin.substr(0, 4) == "SEPF");
  std::uint32_t hb = 0, wd = 0;
  CHECK(examples_from_binary(bin, &hb, &wd) == ex);
  CHECK(hb == 512);
  CHECK(wd == ctx.wide_dim());
  CHECK_THROWS(examples_from_binary(bin.substr(0, bin.size() - 3)));
}

TEST_CASE("unit lookup falls back to attributes") {
  const PolicyDb db = parse_flat(kDb);
  DocVectorMap vecs;
  vecs[{Ident("appdomain"), Op::kAllow}] = std::vector<double>(4, 1.0);
  EncoderContext ctx = make_context(expand(db), db, {}, vecs);
  CHECK(ctx.unit_for("untrusted_app") == Ident("appdomain"));
  CHECK(ctx.unit_for("init").empty());
  ctx.unit_map["init"] = "appdomain";
  CHECK(ctx.unit_for("init") == Ident("appdomain"));
}
