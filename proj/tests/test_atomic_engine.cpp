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


#include <algorithm>
#include <string>
#include <vector>

#include "atomic_engine.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "parsers.hpp"
#include "pipeline.hpp"
#include "test_util.hpp"

using namespace sepal;
using sepal_test::fixture;

namespace {

AtomicRule allow(const char* s, const char* t, const char* c, const char* p) {
  return {s, t, c, p, Op::kAllow};
}

}  // namespace

TEST_CASE("cil and flat forms of one rule expand identically") {
  const AtomicSet cil = expand(parse_cil(fixture("policy/app_data.cil")));
  const AtomicSet neg = expand(parse_cil(fixture("policy/app_data_negated.cil")));
  const AtomicSet flat = expand(parse_flat(fixture("policy/app_data_flat.conf")));
  CHECK(cil.size() == 3 * 6);
  CHECK(cil == flat);
  CHECK(neg == flat);
  CHECK(cil.count(allow("bluetooth", "app_data_file", "file", "map")) == 1);
  CHECK(cil.count(allow("isolated_app", "app_data_file", "file", "read")) == 0);
}

TEST_CASE("expansion equals the brute-force enumerator on random policies") {
  Rng rng(2024);
  for (int i = 0; i < 200; ++i) {
    const auto p = sepal_test::random_policy(rng);
    const std::string text = sepal_test::to_cil(p);
    CAPTURE(text);
    CHECK(expand(parse_cil(text)) == sepal_test::BruteForce(p).expand());
  }
}

TEST_CASE("parallel expansion is identical to serial") {
  const PolicyDb db = parse_cil(fixture("policy/aosp_like.cil"));
  SourceMap s1, s4;
  const AtomicSet a = expand(db, &s1, {1});
  const AtomicSet b = expand(db, &s4, {4});
  CHECK(a == b);
  CHECK(s1 == s4);
}

TEST_CASE("labels follow the originating rule") {
  const PolicyDb db = parse_cil(fixture("policy/aosp_like.cil"));
  SourceMap sources;
  const AtomicSet atoms = expand(db, &sources);
  for (const auto& a : atoms) {
    const std::string& src = sources.at(a);
    const int line = std::stoi(src.substr(src.rfind(':') + 1));
    const auto it = std::find_if(db.rules.begin(), db.rules.end(),
                                 [&](const PolicyRule& r) { return r.origin.line == line; });
    REQUIRE(it != db.rules.end());
    CHECK(it->op == a.label);
  }
}

TEST_CASE("expansion is idempotent") {
  const PolicyDb db = parse_cil(fixture("policy/aosp_like.cil"));
  const AtomicSet once = expand(db);
  PolicyDb concrete;
  concrete.types = db.types;
  for (const auto& a : once) {
    PolicyRule r;
    r.op = a.label;
    r.subject = SetExpr::named(a.subject);
    r.target = SetExpr::named(a.target);
    r.cls = a.cls;
    r.permissions = {a.permission};
    concrete.rules.push_back(r);
  }
  CHECK(expand(concrete) == once);
}

TEST_CASE("augmentation: negated subjects hold the access") {
  const PolicyDb db = parse_cil(fixture("policy/base_typeattr_293.cil"));
  const auto res = augment_from_negations(db, 100);
  CHECK(res.atomics == AtomicSet{allow("con_monitor_app", "con_monitor_app", "file", "read"),
                                 allow("shell", "con_monitor_app", "file", "read")});
  const auto capped = augment_from_negations(db, 1);
  CHECK(capped.atomics == AtomicSet{allow("con_monitor_app", "con_monitor_app", "file", "read")});
  CHECK(capped.candidates == 2);

  const PolicyDb plain = parse_cil(
      "(type a)(type b)(typeattribute appdomain)(typeattributeset appdomain (a))"
      "(neverallow appdomain b (file (read)))");
  CHECK(augment_from_negations(plain, 100).atomics.empty());
}

TEST_CASE("augmentation drops atomics that contradict a neverallow") {
  const PolicyDb db = parse_cil(fixture("policy/aosp_like.cil"));
  const AtomicSet never = with_label(expand(db), Op::kNeverallow);
  const auto res = augment_from_negations(db, 1000);
  CHECK(res.candidates == 30);
  CHECK(res.dropped_contradictions == 2);
  CHECK(res.atomics.size() == 28);
  for (const auto& a : res.atomics) {
    CHECK(a.label == Op::kAllow);
    AtomicRule flipped = a;
    flipped.label = Op::kNeverallow;
    CHECK(never.count(flipped) == 0);
  }
  CHECK(res.atomics.count(allow("vold", "userdata_block_device", "blk_file", "write")) == 0);
  CHECK(res.atomics.count(allow("vold", "userdata_block_device", "blk_file", "read")) == 1);
  CHECK(res.atomics.count(allow("platform_app", "keystore_data_file", "file", "unlink")) == 0);
}

TEST_CASE("balancing cap targets an even split") {
  AtomicSet expanded;
  for (int i = 0; i < 10; ++i) {
    expanded.insert({Ident("s" + std::to_string(i)), "t", "c", "p", Op::kNeverallow});
  }
  for (int i = 0; i < 4; ++i) expanded.insert({Ident("a" + std::to_string(i)), "t", "c", "p"});
  CHECK(balancing_cap(expanded, 100) == 6);
  CHECK(balancing_cap(expanded, 3) == 3);
  for (int i = 4; i < 12; ++i) expanded.insert({Ident("a" + std::to_string(i)), "t", "c", "p"});
  CHECK(balancing_cap(expanded, 100) == 0);
}

TEST_CASE("diff ignores labels and keeps only device extras") {
  const AtomicSet ref = expand(parse_cil(fixture("policy/app_data.cil")));
  CHECK(diff(ref, ref).empty());
  AtomicSet device = ref;
  device.insert(allow("untrusted_app", "proc_stat", "file", "read"));
  CHECK(diff(device, ref) == AtomicSet{allow("untrusted_app", "proc_stat", "file", "read")});

  AtomicSet relabeled;
  for (auto a : ref) {
    a.label = Op::kNeverallow;
    relabeled.insert(a);
  }
  CHECK(diff(ref, relabeled).empty());
}

TEST_CASE("diff: vendor attribute and concrete types expand alike") {
  const AtomicSet device = expand(parse_flat(
      "attribute vendor_grp;\ntype a, vendor_grp;\ntype b, vendor_grp;\ntype f;\n"
      "allow vendor_grp f:file read;\n"));
  const AtomicSet reference = expand(parse_flat(
      "type a;\ntype b;\ntype f;\nallow a f:file read;\nallow b f:file read;\n"));
  CHECK(diff(device, reference).empty());
}

TEST_CASE("diff is anti-monotone in the reference") {
  Rng rng(8);
  for (int round = 0; round < 50; ++round) {
    const AtomicSet dev = expand(parse_cil(sepal_test::to_cil(sepal_test::random_policy(rng))));
    AtomicSet ref = expand(parse_cil(sepal_test::to_cil(sepal_test::random_policy(rng))));
    const AtomicSet small = diff(dev, ref);
    for (const auto& a : dev)
      if (rng.bernoulli(0.3)) ref.insert(a);
    const AtomicSet big = diff(dev, ref);
    CHECK(std::includes(small.begin(), small.end(), big.begin(), big.end()));
  }
}

TEST_CASE("dedupe across images") {
  const AtomicSet one{allow("a", "b", "c", "d")};
  auto r = dedupe_corpus({one, one});
  CHECK(r.unique.size() == 1);
  CHECK(r.occurrence.at(allow("a", "b", "c", "d")) == 2);

  const AtomicSet x{allow("a", "b", "c", "1"), allow("a", "b", "c", "2"), allow("a", "b", "c", "3")};
  const AtomicSet y{allow("e", "b", "c", "1"), allow("e", "b", "c", "2"), allow("e", "b", "c", "3"),
                    allow("e", "b", "c", "4")};
  CHECK(dedupe_corpus({x, y}).unique.size() == 7);

  Rng rng(4);
  std::vector<AtomicSet> images;
  std::vector<AtomicRule> all;
  for (int i = 0; i < 6; ++i) {
    images.push_back(expand(parse_cil(sepal_test::to_cil(sepal_test::random_policy(rng)))));
    all.insert(all.end(), images.back().begin(), images.back().end());
  }
  std::sort(all.begin(), all.end());
  const auto d = dedupe_corpus(images);
  std::vector<AtomicRule> uniq(all.begin(), std::unique(all.begin(), all.end()));
  CHECK(std::vector<AtomicRule>(d.unique.begin(), d.unique.end()) == uniq);
  for (const auto& a : uniq) {
    CHECK(d.occurrence.at(a) == static_cast<std::size_t>(std::count(all.begin(), all.end(), a)));
  }
}

TEST_CASE("training set combines expansion and augmentation") {
  const PolicyDb db = parse_cil(fixture("policy/aosp_like.cil"));
  const TrainingSet none = training_set(db, 0);
  CHECK(none.augmented == 0);
  CHECK(none.atomics == expand(db));
  const TrainingSet five = training_set(db, 5);
  CHECK(five.augmented == 5);
  // Oracle: the five canonically least augmented atomics not already allowed.
  AtomicSet want = expand(db);
  std::size_t added = 0;
  for (const auto& a : augment_from_negations(db, 1000).atomics) {
    if (added < 5 && want.insert(a).second) ++added;
  }
  CHECK(five.atomics == want);
}
