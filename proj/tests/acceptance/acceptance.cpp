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


// Acceptance harness: one PASS/FAIL line per criterion, each with its
// pinned tolerance and time limit. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "atomic_engine.hpp"
#include "comment_nlp.hpp"
#include "features.hpp"
#include "model.hpp"
#include "parsers.hpp"
#include "pipeline.hpp"
#include "reporting.hpp"
#include "rng.hpp"
#include "serialization.hpp"
#include "synth.hpp"
#include "uid_inference.hpp"

using namespace sepal;

namespace {

std::string fx(const std::string& rel) { return read_file(std::string(SEPAL_FIXTURE_DIR) + "/" + rel); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome equivalence() {
  const PolicyDb cil = parse_cil(fx("policy/app_data.cil"));
  const PolicyDb neg = parse_cil(fx("policy/app_data_negated.cil"));
  const PolicyDb flat = parse_flat(fx("policy/app_data_flat.conf"));
  const AtomicSet a = expand(cil), b = expand(neg), c = expand(flat);
  const std::size_t members = resolve(SetExpr::named("base_typeattr_97"), cil).size();
  const std::size_t perms = cil.rules.at(0).permissions.size();
  const bool ok = a == c && b == c && a.size() == members * perms && a.size() == 18;
  return {ok, "atomics=" + std::to_string(a.size()) + " members*perms=" +
                  std::to_string(members * perms) + " cil==flat=" + (a == c ? "yes" : "no") +
                  " negated==flat=" + (b == c ? "yes" : "no")};
}

Outcome augmentation() {
  const PolicyDb db = parse_cil(fx("policy/base_typeattr_293.cil"));
  const AtomicSet got = augment_from_negations(db, 1000).atomics;
  const AtomicSet want{{"con_monitor_app", "con_monitor_app", "file", "read", Op::kAllow},
                       {"shell", "con_monitor_app", "file", "read", Op::kAllow}};
  const PolicyDb aosp = parse_cil(fx("policy/aosp_like.cil"));
  const AtomicSet never = with_label(expand(aosp), Op::kNeverallow);
  const auto res = augment_from_negations(aosp, 1000);
  std::size_t contradictions = 0;
  for (auto a : res.atomics) {
    a.label = Op::kNeverallow;
    contradictions += never.count(a);
  }
  const bool ok = got == want && contradictions == 0 && res.dropped_contradictions == 2 &&
                  res.atomics.size() + res.dropped_contradictions == res.candidates;
  return {ok, "293 exact=" + std::string(got == want ? "yes" : "no") +
                  " aosp candidates=" + std::to_string(res.candidates) +
                  " dropped=" + std::to_string(res.dropped_contradictions) +
                  " remaining_contradictions=" + std::to_string(contradictions)};
}

Outcome uid_chain() {
  const PolicyDb db = parse_cil(fx("uid/mediadrm.cil"));
  const auto r = infer_users(db, parse_file_contexts(fx("uid/file_contexts")).entries,
                             parse_rc(fx("uid/mediadrmserver.rc")).entries,
                             parse_seapp(fx("uid/seapp_contexts")).entries,
                             AidTable::load(data_dir() + "/aid_map.tsv"));
  const UidBucket b = lookup_bucket(r.buckets, "mediadrmserver");
  return {b == UidBucket::kMedia, std::string("mediadrmserver=") + uid_bucket_name(b)};
}

Outcome triplets() {
  const Corpus corpus = load_corpus(data_dir() + "/corpus");
  const auto gold = read_conllu(fx("conllu/dump_information.conllu"));
  const bool golden = gold.size() == 1 && extract_triplets(gold[0].tokens, corpus) ==
                                              std::set<KeywordTriplet>{{"send", "dump", "information"}};

  std::map<std::string, std::set<KeywordTriplet>> oracle;
  std::istringstream in(fx("conllu/ten_sentences.oracle"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      f.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (f.size() == 4) oracle[f[0]].insert({f[1], f[2], f[3]});
  }
  const std::string text = fx("conllu/ten_sentences.conllu");
  std::vector<std::string> ids;
  std::istringstream ids_in(text);
  while (std::getline(ids_in, line)) {
    if (line.rfind("# sent_id = ", 0) == 0) ids.push_back(line.substr(12));
  }
  const auto sentences = read_conllu(text);
  std::size_t matched = 0;
  for (std::size_t i = 0; i < sentences.size() && i < ids.size(); ++i) {
    matched += extract_triplets(sentences[i].tokens, corpus) == oracle[ids[i]];
  }
  const bool ok = golden && sentences.size() == 10 && matched == 10;
  return {ok, std::string("golden=") + (golden ? "yes" : "no") + " oracle_matches=" +
                  std::to_string(matched) + "/10"};
}

Outcome expansion_oracle() {
  Rng rng(20240611);
  std::size_t equal = 0;
  for (int i = 0; i < 200; ++i) {
    const auto p = sepal_test::random_policy(rng);
    equal += expand(parse_cil(sepal_test::to_cil(p))) == sepal_test::BruteForce(p).expand();
  }
  return {equal == 200, "identical=" + std::to_string(equal) + "/200"};
}

Outcome gradient() {
  ModelShape s;
  s.vocab_slots = {12, 20, 5, 9};
  s.hash_buckets = 512;
  s.vec_dim = kDefaultVecDim;
  s.wide_dim = 12 + 20 + 5 + 9 + 2 * kFlagCount + kUidBucketCount + s.hash_buckets;
  TrainConfig cfg;
  cfg.seed = 5;
  Model m = init_model(s, cfg);
  Rng rng(6);
  for (double& w : m.wide.w) w = rng.uniform(-0.5, 0.5);
  m.wide.b = -0.2;
  std::vector<EncodedExample> ex;
  for (int i = 0; i < 5; ++i) {
    EncodedExample e;
    for (int f = 0; f < 4; ++f) e.deep_ids[f] = static_cast<std::uint32_t>(rng.below(s.vocab_slots[f]));
    for (auto& w : e.wide) w = static_cast<std::uint32_t>(rng.below(s.wide_dim));
    e.flags = FlagSet::from_mask(static_cast<std::uint8_t>(rng.below(64)));
    e.uid = static_cast<UidBucket>(rng.below(kUidBucketCount));
    for (int k = 0; k < s.vec_dim; ++k) {
      e.allow_vec.push_back(rng.uniform(-0.1, 0.1));
      e.neverallow_vec.push_back(rng.uniform(-0.1, 0.1));
    }
    e.label = static_cast<std::uint8_t>(i % 2);
    ex.push_back(e);
  }
  const GradCheck g = gradient_check(m, ex);
  return {g.max_rel_error < 1e-4, fmt("max_rel_error=%.3g", g.max_rel_error) + " worst=" +
                                      g.worst_group + " coords=" + std::to_string(g.coordinates) +
                                      " (limit 1e-4)"};
}

// ---------------------------------------------------------------------------
// Planted corpus

struct Planted {
  SynthCorpus corpus;
  PolicyDb reference;
  TrainingSet train_set;
  std::map<Ident, UidBucket> uids;
  std::vector<DocVector> vectors;
  EncoderContext ctx;
  TrainResult result;
  AtomicSet pair_train, pair_test;  // unseen (subject, target) pairs
};

std::optional<Planted> g_planted;

EncoderContext planted_context(const Planted& p, const AtomicSet& train) {
  return make_context(train, p.reference, p.uids, index_doc_vectors(p.vectors));
}

Outcome end_to_end(const std::string& work) {
  Planted p;
  p.corpus = synthesize(SynthConfig{});  // seed 7
  write_synth(p.corpus, work + "/synth");
  p.reference = parse_cil(p.corpus.reference_cil);
  p.train_set = training_set(p.reference, std::nullopt);
  p.uids = infer_users(p.reference, parse_file_contexts(p.corpus.file_contexts).entries,
                       parse_rc(p.corpus.rc).entries, parse_seapp(p.corpus.seapp).entries,
                       AidTable::load(data_dir() + "/aid_map.tsv"))
               .buckets;
  const Corpus kw = load_corpus(data_dir() + "/corpus");
  p.vectors = embed_docs(build_triplet_docs(read_conllu(p.corpus.conllu), kw)).vectors;
  p.ctx = planted_context(p, p.train_set.atomics);
  const TrainConfig cfg;
  p.result = train(encode_all(p.train_set.atomics, p.ctx), ModelShape::of(p.ctx), cfg);
  const double acc = p.result.heldout.accuracy;

  // Flag recall over the injected violations of every image.
  const AtomicSet ref_allow = with_label(expand(p.reference), Op::kAllow);
  std::size_t planted = 0, caught = 0, flagged = 0, customized = 0;
  for (const auto& im : p.corpus.images) {
    ParseOptions opts;
    opts.source_name = im.name;
    const PolicyDb dev = parse_flat(im.policy, opts);
    SourceMap sources;
    const AtomicSet custom = diff(with_label(expand(dev, &sources), Op::kAllow), ref_allow);
    EncoderContext ctx = p.ctx;
    merge_type_info(&ctx, dev);
    const auto findings = flag_unregulated(p.result.model, custom, ctx, &sources, im.name);
    std::set<AtomicRule> hit;
    for (const auto& f : findings) hit.insert(f.atomic);
    planted += im.violations.size();
    for (const auto& v : im.violations) caught += hit.count(v);
    flagged += findings.size();
    customized += custom.size();
  }
  const double recall = planted ? static_cast<double>(caught) / planted : 0.0;

  // Unseen-pair holdout: 20% of (subject, target) pairs, seed 7.
  std::set<std::pair<Ident, Ident>> pairs;
  for (const auto& a : p.train_set.atomics) pairs.insert({a.subject, a.target});
  std::vector<std::pair<Ident, Ident>> order(pairs.begin(), pairs.end());
  Rng rng(7);
  rng.shuffle(order);
  const std::set<std::pair<Ident, Ident>> held(order.begin(), order.begin() + order.size() / 5);
  for (const auto& a : p.train_set.atomics) {
    (held.count({a.subject, a.target}) ? p.pair_test : p.pair_train).insert(a);
  }
  const EncoderContext pctx = planted_context(p, p.pair_train);
  TrainConfig pcfg;
  pcfg.test_fraction = 0.0;
  const TrainResult pr = train(encode_all(p.pair_train, pctx), ModelShape::of(pctx), pcfg);
  const double wd = evaluate(pr.model, encode_all(p.pair_test, pctx)).accuracy;
  const BaselineSummary base = score_baseline(p.pair_train, p.pair_test, 10, 0.55);
  const double gap = wd - base.accuracy_all;

  const bool ok = acc >= 0.95 && recall >= 0.90 && gap >= 0.05;
  std::string d = fmt("heldout_acc=%.4f (>=0.95)", acc) + fmt(" flag_recall=%.4f (>=0.90)", recall) +
                  " [" + std::to_string(caught) + "/" + std::to_string(planted) + ", flagged " +
                  std::to_string(flagged) + "/" + std::to_string(customized) + " customized]" +
                  fmt(" unseen_pair wd=%.4f", wd) + fmt(" baseline_all=%.4f", base.accuracy_all) +
                  fmt(" baseline_classified=%.4f", base.accuracy_classified) +
                  fmt(" gap=%.4f (>=0.05)", gap);
  g_planted = std::move(p);
  return {ok, d};
}

Outcome baseline_thresholds() {
  const AtomicSet six = atomics_from_jsonl(fx("baseline/six_of_ten.train.jsonl"));
  const AtomicRule six_t = *atomics_from_jsonl(fx("baseline/six_of_ten.target.jsonl")).begin();
  const AtomicSet nine = atomics_from_jsonl(fx("baseline/nine_neighbors.train.jsonl"));
  const AtomicRule nine_t = *atomics_from_jsonl(fx("baseline/nine_neighbors.target.jsonl")).begin();
  const Verdict v6 = nn_classify(six, six_t, 10, 0.55).verdict;
  const Verdict v9 = nn_classify(nine, nine_t, 10, 0.55).verdict;
  if (!g_planted) return {false, "planted corpus unavailable"};
  const auto& p = *g_planted;
  const auto lo = score_baseline(p.pair_train, p.pair_test, 10, 0.55);
  const auto hi = score_baseline(p.pair_train, p.pair_test, 10, 0.75);
  const bool ok = v6 == Verdict::kAllow && v9 == Verdict::kUnclassified && hi.unclassified >= lo.unclassified;
  return {ok, std::string("six_of_ten=") + verdict_name(v6) + " nine=" + verdict_name(v9) +
                  " unclassified@0.55=" + std::to_string(lo.unclassified) +
                  " unclassified@0.75=" + std::to_string(hi.unclassified) + " of " +
                  std::to_string(lo.total)};
}

Outcome determinism() {
  if (!g_planted) return {false, "planted corpus unavailable"};
  const auto& p = *g_planted;
  const TrainResult again = train(encode_all(p.train_set.atomics, p.ctx), ModelShape::of(p.ctx), TrainConfig{});
  const bool model_same = model_to_binary(again.model, p.ctx) == model_to_binary(p.result.model, p.ctx);
  const Corpus kw = load_corpus(data_dir() + "/corpus");
  const auto docs = build_triplet_docs(read_conllu(p.corpus.conllu), kw);
  const bool vecs_same = doc_vectors_to_text(embed_docs(docs).vectors) == doc_vectors_to_text(p.vectors);
  return {model_same && vecs_same, std::string("model_bytes_equal=") + (model_same ? "yes" : "no") +
                                       " doc_vectors_equal=" + (vecs_same ? "yes" : "no")};
}

Outcome report_categories() {
  ParseOptions opts;
  opts.source_name = "device.conf";
  const PolicyDb db = parse_flat(fx("report/device.conf"), opts);
  std::vector<TeSource> te{{"su.te", fx("report/te/su.te")}, {"shell.te", fx("report/te/shell.te")}};
  std::vector<ReferenceVersion> history{{"5.1", atomics_from_jsonl(fx("report/history/5.1.jsonl"))},
                                        {"8.0", atomics_from_jsonl(fx("report/history/8.0.jsonl"))}};
  const auto out = categorize(findings_from_jsonl(fx("report/findings.jsonl")), &db, te, history);
  std::map<std::string, std::set<Category>> got;
  for (const auto& f : out) got[f.atomic.subject.str() + ":" + f.atomic.permission.str()] = f.categories;
  const bool su = got["su:getattr"] == std::set<Category>{Category::kDebugRule};
  const bool init = got["init:load_policy"] == std::set<Category>{Category::kDeprecated};
  const bool untrusted = got["untrusted_app:read"] == std::set<Category>{Category::kUntrustedDomain};
  return {su && init && untrusted, std::string("su=") + (su ? "debug_rule" : "wrong") +
                                       " init_load_policy=" + (init ? "deprecated" : "wrong") +
                                       " untrusted_app_proc_stat=" +
                                       (untrusted ? "untrusted_domain" : "wrong")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string work = argc > 1 ? argv[1] : (std::filesystem::temp_directory_path() / "sepal_acceptance").string();
  std::filesystem::remove_all(work);
  std::filesystem::create_directories(work);

  const std::vector<Criterion> criteria{
      {"cil-flat-equivalence", 1, equivalence},
      {"negation-augmentation", 1, augmentation},
      {"uid-chain-media", 1, uid_chain},
      {"keyword-triplets", 1, triplets},
      {"expansion-vs-brute-force", 30, expansion_oracle},
      {"gradient-check", 10, gradient},
      {"planted-end-to-end", 300, [&] { return end_to_end(work); }},
      {"baseline-thresholds", 10, baseline_thresholds},
      {"determinism", 300, determinism},
      {"report-categories", 1, report_categories},
  };

  int failures = 0;
  std::string log;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    char head[160];
    std::snprintf(head, sizeof head, "%s %-26s %7.2fs (limit %gs%s) ", pass ? "PASS" : "FAIL",
                  c.name.c_str(), secs, c.limit_s, in_time ? "" : ", exceeded");
    const std::string line = head + o.detail + "\n";
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    log += line;
  }
  write_file(work + "/acceptance.txt", log);
  return failures;
}
