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


// Exercises the shared library through its C header only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sepal/sepal.h"

namespace {

std::string slurp(const std::string& rel) {
  std::ifstream in(std::string(SEPAL_FIXTURE_DIR) + "/" + rel, std::ios::binary);
  REQUIRE(in);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string take(char* p) {
  std::string s = p ? p : "";
  sepal_free(p);
  return s;
}

sepal_policy* parse(const std::string& text, const char* format, const char* name = "t") {
  sepal_policy* db = nullptr;
  REQUIRE(sepal_policy_parse(text.data(), text.size(), format, name, 0, &db) == SEPAL_OK);
  return db;
}

sepal_atomics* expand(const sepal_policy* db) {
  sepal_atomics* a = nullptr;
  REQUIRE(sepal_expand(db, 1, &a) == SEPAL_OK);
  return a;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strlen(sepal_version()) > 0);
  CHECK(std::string(sepal_status_name(SEPAL_OK)) != std::string(sepal_status_name(SEPAL_ERR_PARSE)));
}

TEST_CASE("cil and flat snippets expand alike through the C API") {
  sepal_policy* cil = parse(slurp("policy/app_data.cil"), "cil");
  sepal_policy* flat = parse(slurp("policy/app_data_flat.conf"), "flat");
  sepal_atomics* a = expand(cil);
  sepal_atomics* b = expand(flat);
  CHECK(sepal_atomics_size(a) == 18);
  char* ja = nullptr;
  char* jb = nullptr;
  REQUIRE(sepal_atomics_to_jsonl(a, &ja) == SEPAL_OK);
  REQUIRE(sepal_atomics_to_jsonl(b, &jb) == SEPAL_OK);
  // Sources differ; compare the tuples.
  sepal_atomics* d = nullptr;
  REQUIRE(sepal_diff(a, b, &d) == SEPAL_OK);
  CHECK(sepal_atomics_size(d) == 0);
  sepal_atomic_view v{};
  REQUIRE(sepal_atomics_get(a, 0, &v) == SEPAL_OK);
  CHECK(std::string(v.subject) == "bluetooth");
  CHECK(v.neverallow == 0);
  CHECK(sepal_atomics_get(a, 18, &v) == SEPAL_ERR_INVALID_ARG);

  sepal_atomics* back = nullptr;
  const std::string text = take(ja);
  REQUIRE(sepal_atomics_from_jsonl(text.data(), text.size(), &back) == SEPAL_OK);
  CHECK(sepal_atomics_size(back) == 18);
  take(jb);
  for (sepal_atomics* x : {a, b, d, back}) sepal_atomics_free(x);
  sepal_policy_free(cil);
  sepal_policy_free(flat);
}

TEST_CASE("errors map to status codes") {
  sepal_policy* db = nullptr;
  const char* bad = "(allow a b (file (read))";
  CHECK(sepal_policy_parse(bad, std::strlen(bad), "cil", "bad.cil", 0, &db) == SEPAL_ERR_PARSE);
  CHECK(std::string(sepal_last_error()).find("bad.cil") != std::string::npos);
  CHECK(db == nullptr);
  const char* undeclared = "allow a b:file read;";
  CHECK(sepal_policy_parse(undeclared, std::strlen(undeclared), "flat", "u", 1, &db) ==
        SEPAL_ERR_UNKNOWN_NAME);
  CHECK(sepal_policy_parse(undeclared, std::strlen(undeclared), "flat", "u", 0, &db) == SEPAL_OK);
  CHECK(sepal_policy_warning_count(db) == 2);
  sepal_policy_free(db);
  CHECK(sepal_policy_parse(nullptr, 4, "cil", "x", 0, &db) == SEPAL_ERR_INVALID_ARG);
  CHECK(sepal_policy_parse("", 0, "cil", "x", 0, nullptr) == SEPAL_ERR_INVALID_ARG);
  CHECK(sepal_policy_parse("", 0, "nonsense", "x", 0, &db) == SEPAL_ERR_INVALID_ARG);
  const char* missing = "/nonexistent/policy.cil";
  CHECK(sepal_policy_load(&missing, 1, nullptr, 0, &db) == SEPAL_ERR_IO);
}

TEST_CASE("json round trip of a policy") {
  sepal_policy* db = parse(slurp("policy/aosp_like.cil"), "cil");
  const std::string json = take([&] {
    char* p = nullptr;
    REQUIRE(sepal_policy_to_json(db, &p) == SEPAL_OK);
    return p;
  }());
  const auto path = std::filesystem::temp_directory_path() / "sepal_capi_policy.json";
  std::ofstream(path) << json;
  sepal_policy* again = nullptr;
  const std::string p = path.string();
  REQUIRE(sepal_policy_load_any(p.c_str(), &again) == SEPAL_OK);
  sepal_atomics* a = expand(db);
  sepal_atomics* b = expand(again);
  sepal_atomics* d = nullptr;
  REQUIRE(sepal_diff(a, b, &d) == SEPAL_OK);
  CHECK(sepal_atomics_size(a) == sepal_atomics_size(b));
  CHECK(sepal_atomics_size(d) == 0);
  for (sepal_atomics* x : {a, b, d}) sepal_atomics_free(x);
  sepal_policy_free(db);
  sepal_policy_free(again);
  std::filesystem::remove(path);
}

TEST_CASE("training set augmentation") {
  sepal_policy* db = parse(slurp("policy/base_typeattr_293.cil"), "cil");
  sepal_atomics* t = nullptr;
  size_t augmented = 0;
  REQUIRE(sepal_training_set(db, 10, 1, &t, &augmented) == SEPAL_OK);
  CHECK(augmented == 2);
  CHECK(sepal_atomics_size(t) == 3);
  sepal_atomics* allow = nullptr;
  REQUIRE(sepal_atomics_allow(t, &allow) == SEPAL_OK);
  CHECK(sepal_atomics_size(allow) == 2);
  sepal_atomics_free(allow);
  sepal_atomics_free(t);
  sepal_policy_free(db);
}

TEST_CASE("uid inference through the C API") {
  sepal_policy* db = parse(slurp("uid/mediadrm.cil"), "cil");
  const std::string fc = slurp("uid/file_contexts");
  const std::string rc = slurp("uid/mediadrmserver.rc");
  const std::string seapp = slurp("uid/seapp_contexts");
  sepal_uidmap* m = nullptr;
  size_t warnings = 0;
  REQUIRE(sepal_uid_infer(db, fc.c_str(), rc.c_str(), seapp.c_str(), nullptr, &m, &warnings) ==
          SEPAL_OK);
  CHECK(std::string(sepal_uidmap_lookup(m, "mediadrmserver")) == "media");
  CHECK(std::string(sepal_uidmap_lookup(m, "untrusted_app")) == "app");
  CHECK(std::string(sepal_uidmap_lookup(m, "never_seen")) == "unknown");
  char* tsv = nullptr;
  REQUIRE(sepal_uidmap_to_tsv(m, &tsv) == SEPAL_OK);
  const std::string text = take(tsv);
  sepal_uidmap* back = nullptr;
  REQUIRE(sepal_uidmap_from_tsv(text.data(), text.size(), &back) == SEPAL_OK);
  CHECK(std::string(sepal_uidmap_lookup(back, "isolated_app")) == "isolated");
  sepal_uidmap_free(back);
  sepal_uidmap_free(m);
  sepal_policy_free(db);
}

TEST_CASE("comments embed, train, classify, report") {
  sepal_embed_config ec;
  sepal_embed_config_default(&ec);
  ec.dim = 16;
  ec.epochs = 5;
  const std::string conllu = slurp("conllu/ten_sentences.conllu");
  sepal_docvecs* vecs = nullptr;
  double before = 0, after = 0;
  REQUIRE(sepal_comments_embed(conllu.data(), conllu.size(), nullptr, &ec, &vecs, &before, &after) ==
          SEPAL_OK);
  CHECK(sepal_docvecs_count(vecs) == 1);

  sepal_policy* db = parse(slurp("policy/aosp_like.cil"), "cil", "aosp_like.cil");
  sepal_atomics* train = nullptr;
  REQUIRE(sepal_training_set(db, -1, 1, &train, nullptr) == SEPAL_OK);
  sepal_train_config tc;
  sepal_train_config_default(&tc);
  tc.epochs = 10;
  tc.batch_size = 16;
  tc.hash_buckets = 1024;
  sepal_model* model = nullptr;
  sepal_metrics metrics{};
  REQUIRE(sepal_train(train, db, nullptr, vecs, &tc, &model, &metrics) == SEPAL_OK);
  CHECK(metrics.n > 0);

  unsigned char* bin = nullptr;
  size_t len = 0;
  REQUIRE(sepal_model_to_binary(model, &bin, &len) == SEPAL_OK);
  sepal_model* loaded = nullptr;
  REQUIRE(sepal_model_from_binary(bin, len, &loaded) == SEPAL_OK);
  unsigned char* bin2 = nullptr;
  size_t len2 = 0;
  REQUIRE(sepal_model_to_binary(loaded, &bin2, &len2) == SEPAL_OK);
  CHECK(len == len2);
  CHECK(std::memcmp(bin, bin2, len) == 0);
  CHECK(sepal_model_from_binary(bin, len / 3, &loaded) == SEPAL_ERR_PARSE);
  sepal_free(bin);
  sepal_free(bin2);

  double p = -1;
  REQUIRE(sepal_model_predict(model, "vold", "blk_dev_type", "blk_file", "read", &p) == SEPAL_OK);
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);

  unsigned char* sepf = nullptr;
  REQUIRE(sepal_encode_examples(model, train, &sepf, &len) == SEPAL_OK);
  CHECK(std::memcmp(sepf, "SEPF", 4) == 0);
  sepal_free(sepf);

  sepal_findings* findings = nullptr;
  REQUIRE(sepal_classify(model, train, db, "img", &findings) == SEPAL_OK);
  for (size_t i = 0; i < sepal_findings_size(findings); ++i) {
    sepal_finding_view v{};
    REQUIRE(sepal_findings_get(findings, i, &v) == SEPAL_OK);
    CHECK(v.probability < 0.5);
    CHECK(v.atomic.neverallow == 0);
  }
  sepal_findings_free(findings);
  sepal_model_free(loaded);
  sepal_model_free(model);
  sepal_atomics_free(train);
  sepal_policy_free(db);
  sepal_docvecs_free(vecs);
}

TEST_CASE("degenerate training data is reported") {
  sepal_policy* db = parse(slurp("policy/app_data.cil"), "cil");
  sepal_atomics* a = expand(db);
  sepal_train_config tc;
  sepal_train_config_default(&tc);
  sepal_model* model = nullptr;
  CHECK(sepal_train(a, db, nullptr, nullptr, &tc, &model, nullptr) == SEPAL_ERR_DEGENERATE);
  sepal_atomics_free(a);
  sepal_policy_free(db);
}

TEST_CASE("categorize the report fixture") {
  const std::string text = slurp("report/findings.jsonl");
  sepal_findings* f = nullptr;
  REQUIRE(sepal_findings_from_jsonl(text.data(), text.size(), &f) == SEPAL_OK);
  sepal_policy* db = parse(slurp("report/device.conf"), "flat", "device.conf");
  const std::string su = slurp("report/te/su.te");
  const std::string shell = slurp("report/te/shell.te");
  const char* names[] = {"su.te", "shell.te"};
  const char* texts[] = {su.c_str(), shell.c_str()};
  const std::string h51 = slurp("report/history/5.1.jsonl");
  const std::string h80 = slurp("report/history/8.0.jsonl");
  sepal_atomics* v51 = nullptr;
  sepal_atomics* v80 = nullptr;
  REQUIRE(sepal_atomics_from_jsonl(h51.data(), h51.size(), &v51) == SEPAL_OK);
  REQUIRE(sepal_atomics_from_jsonl(h80.data(), h80.size(), &v80) == SEPAL_OK);
  const char* versions[] = {"5.1", "8.0"};
  const sepal_atomics* hist[] = {v51, v80};
  REQUIRE(sepal_categorize(f, db, names, texts, 2, versions, hist, 2, 20) == SEPAL_OK);
  std::vector<unsigned> cats;
  for (size_t i = 0; i < sepal_findings_size(f); ++i) {
    sepal_finding_view v{};
    REQUIRE(sepal_findings_get(f, i, &v) == SEPAL_OK);
    cats.push_back(v.categories);
  }
  CHECK(cats == std::vector<unsigned>{SEPAL_CAT_DEBUG_RULE, SEPAL_CAT_DEPRECATED,
                                      SEPAL_CAT_UNTRUSTED_DOMAIN, SEPAL_CAT_DEBUG_RULE,
                                      SEPAL_CAT_UNCATEGORIZED, SEPAL_CAT_COARSE_ATTRIBUTE});
  sepal_atomics_free(v51);
  sepal_atomics_free(v80);
  sepal_policy_free(db);
  sepal_findings_free(f);
}

TEST_CASE("baseline and stats") {
  const std::string tr = slurp("baseline/six_of_ten.train.jsonl");
  const std::string tg = slurp("baseline/six_of_ten.target.jsonl");
  sepal_atomics* train = nullptr;
  sepal_atomics* target = nullptr;
  REQUIRE(sepal_atomics_from_jsonl(tr.data(), tr.size(), &train) == SEPAL_OK);
  REQUIRE(sepal_atomics_from_jsonl(tg.data(), tg.size(), &target) == SEPAL_OK);
  char* out = nullptr;
  sepal_baseline_summary s{};
  REQUIRE(sepal_baseline(train, target, 10, 0.55, &out, &s) == SEPAL_OK);
  CHECK(take(out).find("\"verdict\":\"allow\"") != std::string::npos);
  CHECK(s.total == 1);
  CHECK(s.unclassified == 0);
  sepal_atomics_free(train);
  sepal_atomics_free(target);

  sepal_image_counts images[] = {{"a", "9.0", "acme", 100, 10}};
  char* csv = nullptr;
  REQUIRE(sepal_stats_csv(images, 1, &csv) == SEPAL_OK);
  CHECK(take(csv).find("all,1,100.0000,10.0000,10.0000") != std::string::npos);
}

TEST_CASE("synth through the C API") {
  sepal_synth_config c;
  sepal_synth_config_default(&c);
  c.images = 1;
  c.extra_apps = 2;
  c.extra_daemons = 2;
  const auto dir = std::filesystem::temp_directory_path() / "sepal_capi_synth";
  std::filesystem::remove_all(dir);
  REQUIRE(sepal_synth(&c, dir.string().c_str()) == SEPAL_OK);
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  std::filesystem::remove_all(dir);
}
