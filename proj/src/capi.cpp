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

#include "sepal/sepal.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "atomic_engine.hpp"
#include "comment_nlp.hpp"
#include "errors.hpp"
#include "features.hpp"
#include "json.hpp"
#include "model.hpp"
#include "parsers.hpp"
#include "pipeline.hpp"
#include "reporting.hpp"
#include "serialization.hpp"
#include "synth.hpp"
#include "uid_inference.hpp"

struct sepal_policy {
  sepal::PolicyDb db;
};

struct sepal_atomics {
  sepal::AtomicSet set;
  sepal::SourceMap sources;
  std::vector<const sepal::AtomicRule*> index;  // built lazily for random access

  void reindex() {
    index.clear();
    index.reserve(set.size());
    for (const auto& a : set) index.push_back(&a);
  }
};

struct sepal_uidmap {
  std::map<sepal::Ident, sepal::UidBucket> map;
};

struct sepal_docvecs {
  std::vector<sepal::DocVector> vectors;
};

struct sepal_model {
  sepal::Model model;
  sepal::EncoderContext ctx;
};

struct sepal_findings {
  std::vector<sepal::Finding> items;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_data_dir_buf;

sepal_status status_of(sepal::ErrorCode code) {
  using sepal::ErrorCode;
  switch (code) {
    case ErrorCode::kSyntax:
    case ErrorCode::kFormat:
      return SEPAL_ERR_PARSE;
    case ErrorCode::kUnknownName:
      return SEPAL_ERR_UNKNOWN_NAME;
    case ErrorCode::kMalformedTree:
      return SEPAL_ERR_MALFORMED_TREE;
    case ErrorCode::kEmptyCorpus:
      return SEPAL_ERR_EMPTY_CORPUS;
    case ErrorCode::kDegenerateData:
      return SEPAL_ERR_DEGENERATE;
    case ErrorCode::kIo:
      return SEPAL_ERR_IO;
    case ErrorCode::kInvalidArgument:
      return SEPAL_ERR_INVALID_ARG;
  }
  return SEPAL_ERR_INTERNAL;
}

sepal_status fail(sepal_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
sepal_status guarded(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const sepal::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(SEPAL_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SEPAL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SEPAL_ERR_INTERNAL, e.what());
  }
}

#define SEPAL_REQUIRE(cond)                                             \
  do {                                                                  \
    if (!(cond)) return fail(SEPAL_ERR_INVALID_ARG, "invalid argument: " #cond); \
  } while (0)

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size());
  p[s.size()] = '\0';
  return p;
}

unsigned char* dup_bytes(const std::string& s) {
  auto* p = static_cast<unsigned char*>(std::malloc(s.empty() ? 1 : s.size()));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size());
  return p;
}

std::string_view view(const char* text, size_t len) {
  return text ? std::string_view(text, len) : std::string_view();
}

sepal::ParseOptions parse_options(const char* source_name, int strict,
                                  const sepal::ClassPermTable* table) {
  sepal::ParseOptions o;
  if (source_name) o.source_name = source_name;
  o.strict = strict != 0;
  o.class_perms = table;
  return o;
}

// The bundled class table, loaded once per data directory.
const sepal::ClassPermTable* class_table() {
  static std::mutex mu;
  static std::map<std::string, sepal::ClassPermTable> cache;
  const std::string path = sepal::data_dir() + "/class_perms.tsv";
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(path);
  if (it == cache.end()) {
    std::error_code ec;
    sepal::ClassPermTable t;
    if (std::filesystem::exists(path, ec)) t = sepal::ClassPermTable::load(path);
    it = cache.emplace(path, std::move(t)).first;
  }
  return it->second.size() ? &it->second : nullptr;
}

void fill_view(const sepal::AtomicRule& a, const sepal::SourceMap& sources,
               sepal_atomic_view* v) {
  v->subject = a.subject.str().c_str();
  v->target = a.target.str().c_str();
  v->cls = a.cls.str().c_str();
  v->permission = a.permission.str().c_str();
  v->neverallow = a.label == sepal::Op::kNeverallow;
  auto it = sources.find(a);
  v->source = it == sources.end() ? "" : it->second.c_str();
}

const sepal::SourceMap& empty_sources() {
  static const sepal::SourceMap s;
  return s;
}

}  // namespace

extern "C" {

const char* sepal_version(void) { return "1.0.0"; }

const char* sepal_last_error(void) { return g_last_error.c_str(); }

const char* sepal_status_name(sepal_status s) {
  switch (s) {
    case SEPAL_OK: return "ok";
    case SEPAL_ERR_PARSE: return "parse error";
    case SEPAL_ERR_UNKNOWN_NAME: return "unknown name";
    case SEPAL_ERR_MALFORMED_TREE: return "malformed tree";
    case SEPAL_ERR_EMPTY_CORPUS: return "empty corpus";
    case SEPAL_ERR_DEGENERATE: return "degenerate data";
    case SEPAL_ERR_IO: return "i/o error";
    case SEPAL_ERR_INVALID_ARG: return "invalid argument";
    case SEPAL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void sepal_free(void* p) { std::free(p); }

void sepal_set_data_dir(const char* dir) { sepal::set_data_dir(dir ? dir : ""); }

const char* sepal_data_dir(void) {
  g_data_dir_buf = sepal::data_dir();
  return g_data_dir_buf.c_str();
}

// ---- policies --------------------------------------------------------------

sepal_status sepal_policy_parse(const char* text, size_t len, const char* format,
                                const char* source_name, int strict, sepal_policy** out) {
  return guarded([&] {
    SEPAL_REQUIRE(out && format && (text || len == 0));
    auto fmt = sepal::parse_policy_format(format);
    if (!fmt) return fail(SEPAL_ERR_INVALID_ARG, std::string("unknown policy format: ") + format);
    const auto opts = parse_options(source_name, strict, class_table());
    auto p = std::make_unique<sepal_policy>();
    p->db = *fmt == sepal::PolicyFormat::kCil ? sepal::parse_cil(view(text, len), opts)
                                              : sepal::parse_flat(view(text, len), opts);
    *out = p.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_policy_load(const char* const* paths, size_t n, const char* format,
                               int strict, sepal_policy** out) {
  return guarded([&] {
    SEPAL_REQUIRE(out && paths && n > 0);
    std::vector<std::string> files(paths, paths + n);
    sepal::PolicyFormat fmt = sepal::PolicyFormat::kFlat;
    if (format) {
      auto f = sepal::parse_policy_format(format);
      if (!f) return fail(SEPAL_ERR_INVALID_ARG, std::string("unknown policy format: ") + format);
      fmt = *f;
    } else if (std::filesystem::path(files.front()).extension() == ".cil") {
      fmt = sepal::PolicyFormat::kCil;
    }
    auto p = std::make_unique<sepal_policy>();
    p->db = sepal::parse_policy_files(files, fmt, parse_options(nullptr, strict, class_table()));
    *out = p.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_policy_load_any(const char* path, sepal_policy** out) {
  return guarded([&] {
    SEPAL_REQUIRE(out && path);
    const std::string text = sepal::read_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
      auto p = std::make_unique<sepal_policy>();
      p->db = sepal::policy_from_json(text);
      *out = p.release();
      return SEPAL_OK;
    }
    return sepal_policy_load(&path, 1, nullptr, 0, out);
  });
}

sepal_status sepal_policy_to_json(const sepal_policy* db, char** out) {
  return guarded([&] {
    SEPAL_REQUIRE(db && out);
    *out = dup_string(sepal::policy_to_json(db->db));
    return SEPAL_OK;
  });
}

sepal_status sepal_policy_to_flat(const sepal_policy* db, char** out) {
  return guarded([&] {
    SEPAL_REQUIRE(db && out);
    *out = dup_string(sepal::to_flat_text(db->db));
    return SEPAL_OK;
  });
}

size_t sepal_policy_warning_count(const sepal_policy* db) {
  return db ? db->db.warnings.size() : 0;
}

void sepal_policy_free(sepal_policy* db) { delete db; }

sepal_status sepal_table_to_json(const char* format, const char* text, size_t len, char** out,
                                 size_t* skipped) {
  return guarded([&] {
    SEPAL_REQUIRE(format && out && (text || len == 0));
    const std::string f = format;
    const auto v = view(text, len);
    std::size_t skip = 0;
    std::string json;
    if (f == "file-contexts") {
      auto t = sepal::parse_file_contexts(v);
      skip = t.skipped;
      json = sepal::file_contexts_to_json(t);
    } else if (f == "rc") {
      auto t = sepal::parse_rc(v);
      skip = t.skipped;
      json = sepal::rc_to_json(t);
    } else if (f == "seapp") {
      auto t = sepal::parse_seapp(v);
      skip = t.skipped;
      json = sepal::seapp_to_json(t);
    } else {
      return fail(SEPAL_ERR_INVALID_ARG, "unknown table format: " + f);
    }
    if (skipped) *skipped = skip;
    *out = dup_string(json);
    return SEPAL_OK;
  });
}

sepal_status sepal_te_comments(const char* const* units, const char* const* texts, size_t n,
                               char** out) {
  return guarded([&] {
    SEPAL_REQUIRE(out && (n == 0 || (units && texts)));
    std::vector<sepal::CommentDoc> docs;
    for (size_t i = 0; i < n; ++i) {
      SEPAL_REQUIRE(units[i] && texts[i]);
      auto d = sepal::parse_te_comments(texts[i], sepal::Ident(units[i]));
      docs.push_back(std::move(d.allow));
      docs.push_back(std::move(d.neverallow));
    }
    *out = dup_string(sepal::write_sentence_file(docs));
    return SEPAL_OK;
  });
}

// ---- atomics ---------------------------------------------------------------

sepal_status sepal_expand(const sepal_policy* db, int jobs, sepal_atomics** out) {
  return guarded([&] {
    SEPAL_REQUIRE(db && out);
    auto a = std::make_unique<sepal_atomics>();
    sepal::ExpandOptions eo;
    eo.jobs = jobs < 1 ? 1 : jobs;
    a->set = sepal::expand(db->db, &a->sources, eo);
    a->reindex();
    *out = a.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_training_set(const sepal_policy* db, long long augment_cap, int jobs,
                                sepal_atomics** out, size_t* augmented) {
  return guarded([&] {
    SEPAL_REQUIRE(db && out);
    std::optional<std::size_t> cap;
    if (augment_cap >= 0) cap = static_cast<std::size_t>(augment_cap);
    auto ts = sepal::training_set(db->db, cap, jobs < 1 ? 1 : jobs);
    auto a = std::make_unique<sepal_atomics>();
    a->set = std::move(ts.atomics);
    a->sources = std::move(ts.sources);
    a->reindex();
    if (augmented) *augmented = ts.augmented;
    *out = a.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_atomics_from_jsonl(const char* text, size_t len, sepal_atomics** out) {
  return guarded([&] {
    SEPAL_REQUIRE(out && (text || len == 0));
    auto a = std::make_unique<sepal_atomics>();
    a->set = sepal::atomics_from_jsonl(view(text, len), &a->sources);
    a->reindex();
    *out = a.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_atomics_to_jsonl(const sepal_atomics* a, char** out) {
  return guarded([&] {
    SEPAL_REQUIRE(a && out);
    *out = dup_string(sepal::atomics_to_jsonl(a->set, &a->sources));
    return SEPAL_OK;
  });
}

size_t sepal_atomics_size(const sepal_atomics* a) { return a ? a->set.size() : 0; }

sepal_status sepal_atomics_get(const sepal_atomics* a, size_t index, sepal_atomic_view* out) {
  return guarded([&] {
    SEPAL_REQUIRE(a && out && index < a->index.size());
    fill_view(*a->index[index], a->sources, out);
    return SEPAL_OK;
  });
}

sepal_status sepal_atomics_allow(const sepal_atomics* a, sepal_atomics** out) {
  return guarded([&] {
    SEPAL_REQUIRE(a && out);
    auto r = std::make_unique<sepal_atomics>();
    r->set = sepal::with_label(a->set, sepal::Op::kAllow);
    for (const auto& x : r->set) {
      if (auto it = a->sources.find(x); it != a->sources.end()) r->sources.insert(*it);
    }
    r->reindex();
    *out = r.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_diff(const sepal_atomics* device, const sepal_atomics* reference,
                        sepal_atomics** out) {
  return guarded([&] {
    SEPAL_REQUIRE(device && reference && out);
    auto r = std::make_unique<sepal_atomics>();
    r->set = sepal::diff(device->set, reference->set);
    for (const auto& x : r->set) {
      if (auto it = device->sources.find(x); it != device->sources.end()) r->sources.insert(*it);
    }
    r->reindex();
    *out = r.release();
    return SEPAL_OK;
  });
}

void sepal_atomics_free(sepal_atomics* a) { delete a; }

// ---- uid ---------------------------------------------------------------------

sepal_status sepal_uid_infer(const sepal_policy* db, const char* file_contexts, const char* rc,
                             const char* seapp, const char* aid_tsv, sepal_uidmap** out,
                             size_t* warnings) {
  return guarded([&] {
    SEPAL_REQUIRE(db && out);
    auto fc = sepal::parse_file_contexts(file_contexts ? file_contexts : "");
    auto services = sepal::parse_rc(rc ? rc : "");
    auto apps = sepal::parse_seapp(seapp ? seapp : "");
    const sepal::AidTable aid =
        aid_tsv ? sepal::AidTable::parse(aid_tsv) : sepal::AidTable::builtin();
    auto inf = sepal::infer_users(db->db, fc.entries, services.entries, apps.entries, aid);
    if (warnings) {
      *warnings = inf.warnings.size() + fc.skipped + services.skipped + apps.skipped;
    }
    auto m = std::make_unique<sepal_uidmap>();
    m->map = std::move(inf.buckets);
    *out = m.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_uidmap_from_tsv(const char* text, size_t len, sepal_uidmap** out) {
  return guarded([&] {
    SEPAL_REQUIRE(out && (text || len == 0));
    auto m = std::make_unique<sepal_uidmap>();
    m->map = sepal::uid_map_from_tsv(view(text, len));
    *out = m.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_uidmap_to_tsv(const sepal_uidmap* m, char** out) {
  return guarded([&] {
    SEPAL_REQUIRE(m && out);
    *out = dup_string(sepal::uid_map_to_tsv(m->map));
    return SEPAL_OK;
  });
}

const char* sepal_uidmap_lookup(const sepal_uidmap* m, const char* domain) {
  if (!m || !domain) return sepal::uid_bucket_name(sepal::UidBucket::kUnknown);
  return sepal::uid_bucket_name(sepal::lookup_bucket(m->map, sepal::Ident(domain)));
}

void sepal_uidmap_free(sepal_uidmap* m) { delete m; }

// ---- comments ----------------------------------------------------------------

void sepal_embed_config_default(sepal_embed_config* c) {
  if (!c) return;
  const sepal::EmbedConfig d;
  c->dim = d.dim;
  c->epochs = d.epochs;
  c->seed = d.seed;
  c->negative = d.negative;
  c->learning_rate = d.learning_rate;
}

sepal_status sepal_comments_embed(const char* conllu, size_t len, const char* corpus_dir,
                                  const sepal_embed_config* config, sepal_docvecs** out,
                                  double* loss_before, double* loss_after) {
  return guarded([&] {
    SEPAL_REQUIRE(out && (conllu || len == 0));
    sepal::EmbedConfig ec;
    if (config) {
      SEPAL_REQUIRE(config->dim > 0 && config->epochs >= 0 && config->negative > 0 &&
                    config->learning_rate > 0);
      ec.dim = config->dim;
      ec.epochs = config->epochs;
      ec.seed = config->seed;
      ec.negative = config->negative;
      ec.learning_rate = config->learning_rate;
    }
    const std::string dir = corpus_dir ? corpus_dir : sepal::data_dir() + "/corpus";
    const auto corpus = sepal::load_corpus(dir);
    const auto sentences = sepal::read_conllu(view(conllu, len));
    const auto docs = sepal::build_triplet_docs(sentences, corpus);
    auto res = sepal::embed_docs(docs, ec);
    if (loss_before) *loss_before = res.loss_before;
    if (loss_after) *loss_after = res.loss_after;
    auto v = std::make_unique<sepal_docvecs>();
    v->vectors = std::move(res.vectors);
    *out = v.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_docvecs_from_text(const char* text, size_t len, sepal_docvecs** out) {
  return guarded([&] {
    SEPAL_REQUIRE(out && (text || len == 0));
    auto v = std::make_unique<sepal_docvecs>();
    v->vectors = sepal::doc_vectors_from_text(view(text, len));
    *out = v.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_docvecs_to_text(const sepal_docvecs* v, char** out) {
  return guarded([&] {
    SEPAL_REQUIRE(v && out);
    *out = dup_string(sepal::doc_vectors_to_text(v->vectors));
    return SEPAL_OK;
  });
}

size_t sepal_docvecs_count(const sepal_docvecs* v) { return v ? v->vectors.size() : 0; }

void sepal_docvecs_free(sepal_docvecs* v) { delete v; }

// ---- model -------------------------------------------------------------------

void sepal_train_config_default(sepal_train_config* c) {
  if (!c) return;
  const sepal::TrainConfig d;
  c->seed = d.seed;
  c->wide_lr = d.wide_lr;
  c->deep_lr = d.deep_lr;
  c->epochs = d.epochs;
  c->batch_size = d.batch_size;
  c->test_fraction = d.test_fraction;
  c->threshold = d.threshold;
  c->hash_buckets = sepal::kDefaultHashBuckets;
}

sepal_status sepal_train(const sepal_atomics* train, const sepal_policy* reference,
                         const sepal_uidmap* uids, const sepal_docvecs* vecs,
                         const sepal_train_config* config, sepal_model** out,
                         sepal_metrics* heldout) {
  return guarded([&] {
    SEPAL_REQUIRE(train && reference && out);
    sepal_train_config c;
    sepal_train_config_default(&c);
    if (config) c = *config;
    SEPAL_REQUIRE(c.epochs >= 0 && c.batch_size > 0 && c.test_fraction >= 0 &&
                  c.test_fraction < 1 && c.hash_buckets > 0 && c.wide_lr > 0 && c.deep_lr > 0);
    sepal::TrainConfig tc;
    tc.seed = c.seed;
    tc.wide_lr = c.wide_lr;
    tc.deep_lr = c.deep_lr;
    tc.epochs = c.epochs;
    tc.batch_size = c.batch_size;
    tc.test_fraction = c.test_fraction;
    tc.threshold = c.threshold;
    auto ctx = sepal::make_context(train->set, reference->db,
                                   uids ? uids->map : std::map<sepal::Ident, sepal::UidBucket>{},
                                   vecs ? sepal::index_doc_vectors(vecs->vectors)
                                        : sepal::DocVectorMap{},
                                   c.hash_buckets);
    const auto examples = sepal::encode_all(train->set, ctx);
    auto result = sepal::train(examples, sepal::ModelShape::of(ctx), tc);
    if (heldout) {
      heldout->n = result.heldout.n;
      heldout->accuracy = result.heldout.accuracy;
      heldout->precision = result.heldout.precision;
      heldout->recall = result.heldout.recall;
    }
    auto m = std::make_unique<sepal_model>();
    m->model = std::move(result.model);
    m->ctx = std::move(ctx);
    *out = m.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_encode_examples(const sepal_model* m, const sepal_atomics* atomics,
                                   unsigned char** out, size_t* len) {
  return guarded([&] {
    SEPAL_REQUIRE(m && atomics && out && len);
    const auto ex = sepal::encode_all(atomics->set, m->ctx);
    const std::string bin = sepal::examples_to_binary(ex, m->ctx.hash_buckets, m->ctx.wide_dim());
    *out = dup_bytes(bin);
    *len = bin.size();
    return SEPAL_OK;
  });
}

sepal_status sepal_model_to_binary(const sepal_model* m, unsigned char** out, size_t* len) {
  return guarded([&] {
    SEPAL_REQUIRE(m && out && len);
    const std::string bin = sepal::model_to_binary(m->model, m->ctx);
    *out = dup_bytes(bin);
    *len = bin.size();
    return SEPAL_OK;
  });
}

sepal_status sepal_model_from_binary(const unsigned char* data, size_t len, sepal_model** out) {
  return guarded([&] {
    SEPAL_REQUIRE(out && (data || len == 0));
    auto m = std::make_unique<sepal_model>();
    m->model = sepal::model_from_binary(
        std::string_view(reinterpret_cast<const char*>(data), len), &m->ctx);
    *out = m.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_model_predict(const sepal_model* m, const char* subject, const char* target,
                                 const char* cls, const char* permission, double* out) {
  return guarded([&] {
    SEPAL_REQUIRE(m && subject && target && cls && permission && out);
    const sepal::AtomicRule a{sepal::Ident(subject), sepal::Ident(target), sepal::Ident(cls),
                              sepal::Ident(permission), sepal::Op::kAllow};
    *out = sepal::predict(m->model, sepal::encode(a, m->ctx));
    return SEPAL_OK;
  });
}

void sepal_model_free(sepal_model* m) { delete m; }

// ---- findings ----------------------------------------------------------------

sepal_status sepal_classify(const sepal_model* m, const sepal_atomics* customized,
                            const sepal_policy* device, const char* image,
                            sepal_findings** out) {
  return guarded([&] {
    SEPAL_REQUIRE(m && customized && out);
    const sepal::EncoderContext* ctx = &m->ctx;
    sepal::EncoderContext extended;
    if (device) {
      extended = m->ctx;
      sepal::merge_type_info(&extended, device->db);
      ctx = &extended;
    }
    auto f = std::make_unique<sepal_findings>();
    f->items = sepal::flag_unregulated(m->model, customized->set, *ctx, &customized->sources,
                                       image ? image : "");
    *out = f.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_findings_from_jsonl(const char* text, size_t len, sepal_findings** out) {
  return guarded([&] {
    SEPAL_REQUIRE(out && (text || len == 0));
    auto f = std::make_unique<sepal_findings>();
    f->items = sepal::findings_from_jsonl(view(text, len));
    *out = f.release();
    return SEPAL_OK;
  });
}

sepal_status sepal_findings_to_jsonl(const sepal_findings* f, char** out) {
  return guarded([&] {
    SEPAL_REQUIRE(f && out);
    *out = dup_string(sepal::findings_to_jsonl(f->items));
    return SEPAL_OK;
  });
}

size_t sepal_findings_size(const sepal_findings* f) { return f ? f->items.size() : 0; }

sepal_status sepal_findings_get(const sepal_findings* f, size_t index, sepal_finding_view* out) {
  return guarded([&] {
    SEPAL_REQUIRE(f && out && index < f->items.size());
    const sepal::Finding& x = f->items[index];
    fill_view(x.atomic, empty_sources(), &out->atomic);
    out->atomic.source = x.provenance.c_str();
    out->probability = x.probability;
    out->image = x.source_image.c_str();
    out->provenance = x.provenance.c_str();
    out->categories = 0;
    for (auto c : x.categories) out->categories |= 1u << static_cast<unsigned>(c);
    return SEPAL_OK;
  });
}

sepal_status sepal_categorize(sepal_findings* f, const sepal_policy* db,
                              const char* const* te_names, const char* const* te_texts,
                              size_t n_te, const char* const* versions,
                              const sepal_atomics* const* history, size_t n_history,
                              size_t coarse_threshold) {
  return guarded([&] {
    SEPAL_REQUIRE(f && (n_te == 0 || (te_names && te_texts)) &&
                  (n_history == 0 || (versions && history)));
    std::vector<sepal::TeSource> te;
    for (size_t i = 0; i < n_te; ++i) {
      SEPAL_REQUIRE(te_names[i] && te_texts[i]);
      te.push_back({te_names[i], te_texts[i]});
    }
    std::vector<sepal::ReferenceVersion> hist;
    for (size_t i = 0; i < n_history; ++i) {
      SEPAL_REQUIRE(versions[i] && history[i]);
      hist.push_back({versions[i], sepal::with_label(history[i]->set, sepal::Op::kAllow)});
    }
    sepal::CategorizeOptions opts;
    if (coarse_threshold > 0) opts.coarse_threshold = coarse_threshold;
    f->items = sepal::categorize(std::move(f->items), db ? &db->db : nullptr, te, hist, opts);
    return SEPAL_OK;
  });
}

void sepal_findings_free(sepal_findings* f) { delete f; }

// ---- baseline ----------------------------------------------------------------

sepal_status sepal_baseline(const sepal_atomics* train, const sepal_atomics* targets, size_t m,
                            double sigma, char** out, sepal_baseline_summary* summary) {
  return guarded([&] {
    SEPAL_REQUIRE(train && targets && m > 0 && sigma >= 0 && sigma <= 1);
    const sepal::NeighborIndex index(train->set);
    std::string lines;
    for (const auto& a : targets->set) {
      const auto v = sepal::nn_classify(index, a, m, sigma);
      nlohmann::ordered_json j;
      j["subject"] = a.subject.str();
      j["target"] = a.target.str();
      j["class"] = a.cls.str();
      j["permission"] = a.permission.str();
      j["label"] = sepal::op_name(a.label);
      j["verdict"] = sepal::verdict_name(v.verdict);
      j["neighbors"] = v.neighbor_count;
      j["majority"] = v.majority_fraction;
      lines += j.dump() + "\n";
    }
    if (summary) {
      const auto s = sepal::score_baseline(train->set, targets->set, m, sigma);
      summary->total = s.total;
      summary->unclassified = s.unclassified;
      summary->correct = s.correct;
      summary->accuracy_all = s.accuracy_all;
      summary->accuracy_classified = s.accuracy_classified;
    }
    if (out) *out = dup_string(lines);
    return SEPAL_OK;
  });
}

// ---- stats -------------------------------------------------------------------

sepal_status sepal_stats_csv(const sepal_image_counts* images, size_t n, char** out) {
  return guarded([&] {
    SEPAL_REQUIRE(out && (images || n == 0));
    std::vector<sepal::ImageCounts> counts;
    for (size_t i = 0; i < n; ++i) {
      const auto& x = images[i];
      SEPAL_REQUIRE(x.image && x.flagged <= x.customized);
      counts.push_back({{x.image, x.version ? x.version : "", x.manufacturer ? x.manufacturer : ""},
                        x.customized,
                        x.flagged});
    }
    *out = dup_string(sepal::stats_to_csv(sepal::stats(counts)));
    return SEPAL_OK;
  });
}

// ---- synth -------------------------------------------------------------------

void sepal_synth_config_default(sepal_synth_config* c) {
  if (!c) return;
  const sepal::SynthConfig d;
  c->seed = d.seed;
  c->extra_apps = d.extra_apps;
  c->extra_daemons = d.extra_daemons;
  c->rules_per_domain = d.rules_per_domain;
  c->images = d.images;
  c->benign_per_image = d.benign_per_image;
  c->violations_per_image = d.violations_per_image;
  c->vendor_domains_per_image = d.vendor_domains_per_image;
}

sepal_status sepal_synth(const sepal_synth_config* config, const char* out_dir) {
  return guarded([&] {
    SEPAL_REQUIRE(out_dir);
    sepal_synth_config c;
    sepal_synth_config_default(&c);
    if (config) c = *config;
    sepal::SynthConfig sc;
    sc.seed = c.seed;
    sc.extra_apps = c.extra_apps;
    sc.extra_daemons = c.extra_daemons;
    sc.rules_per_domain = c.rules_per_domain;
    sc.images = c.images;
    sc.benign_per_image = c.benign_per_image;
    sc.violations_per_image = c.violations_per_image;
    sc.vendor_domains_per_image = c.vendor_domains_per_image;
    sepal::write_synth(sepal::synthesize(sc), out_dir);
    return SEPAL_OK;
  });
}

}  // extern "C"
