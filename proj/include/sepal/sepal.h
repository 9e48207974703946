/*
 * Copyright (C) 2026 The sepal Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the sepal policy analysis library.
 *
 * Every fallible call returns a sepal_status. On failure the message is
 * available from sepal_last_error() on the calling thread until the next
 * call on that thread. Handles are opaque and owned by the caller; each
 * has a matching *_free. Strings and buffers returned through out
 * parameters are released with sepal_free().
 */

#ifndef SEPAL_SEPAL_H_
#define SEPAL_SEPAL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SEPAL_API __declspec(dllexport)
#else
#define SEPAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sepal_status {
  SEPAL_OK = 0,
  SEPAL_ERR_PARSE = 1,          /* syntax or file-format error */
  SEPAL_ERR_UNKNOWN_NAME = 2,   /* strict mode rejected an undeclared name */
  SEPAL_ERR_MALFORMED_TREE = 3, /* dependency tree invariants violated */
  SEPAL_ERR_EMPTY_CORPUS = 4,   /* no usable comment text */
  SEPAL_ERR_DEGENERATE = 5,     /* training data unusable */
  SEPAL_ERR_IO = 6,
  SEPAL_ERR_INVALID_ARG = 7,
  SEPAL_ERR_INTERNAL = 8
} sepal_status;

typedef struct sepal_policy sepal_policy;
typedef struct sepal_atomics sepal_atomics;
typedef struct sepal_uidmap sepal_uidmap;
typedef struct sepal_docvecs sepal_docvecs;
typedef struct sepal_model sepal_model;
typedef struct sepal_findings sepal_findings;

SEPAL_API const char* sepal_version(void);
SEPAL_API const char* sepal_last_error(void);
SEPAL_API const char* sepal_status_name(sepal_status status);
SEPAL_API void sepal_free(void* p);

/* Overrides SEPAL_DATA_DIR for this process. NULL or "" clears it. */
SEPAL_API void sepal_set_data_dir(const char* dir);
/* Directory holding class_perms.tsv, aid_map.tsv and corpus/. */
SEPAL_API const char* sepal_data_dir(void);

/* ---- policies ---------------------------------------------------------- */

/* format: "cil" or "flat". source_name is recorded in rule origins. */
SEPAL_API sepal_status sepal_policy_parse(const char* text, size_t len, const char* format,
                                          const char* source_name, int strict,
                                          sepal_policy** out);
/* Parses each file, then merges them in order. format NULL picks by extension
 * of the first path. */
SEPAL_API sepal_status sepal_policy_load(const char* const* paths, size_t n,
                                         const char* format, int strict, sepal_policy** out);
/* Policy JSON as written by sepal_policy_to_json, or policy source. */
SEPAL_API sepal_status sepal_policy_load_any(const char* path, sepal_policy** out);
SEPAL_API sepal_status sepal_policy_to_json(const sepal_policy* db, char** out);
SEPAL_API sepal_status sepal_policy_to_flat(const sepal_policy* db, char** out);
SEPAL_API size_t sepal_policy_warning_count(const sepal_policy* db);
SEPAL_API void sepal_policy_free(sepal_policy* db);

/* format: "file-contexts", "rc" or "seapp". Output is JSON. */
SEPAL_API sepal_status sepal_table_to_json(const char* format, const char* text, size_t len,
                                           char** out, size_t* skipped);
/* Sentence file built from TE sources; units are the given names. */
SEPAL_API sepal_status sepal_te_comments(const char* const* units, const char* const* texts,
                                         size_t n, char** out);

/* ---- atomic rules ------------------------------------------------------ */

typedef struct sepal_atomic_view {
  const char* subject;
  const char* target;
  const char* cls;
  const char* permission;
  int neverallow; /* 0 allow, 1 neverallow */
  const char* source; /* provenance or "" */
} sepal_atomic_view;

SEPAL_API sepal_status sepal_expand(const sepal_policy* db, int jobs, sepal_atomics** out);
/* Expansion plus augmentation. augment_cap < 0 balances the label share. */
SEPAL_API sepal_status sepal_training_set(const sepal_policy* db, long long augment_cap,
                                          int jobs, sepal_atomics** out,
                                          size_t* augmented);
SEPAL_API sepal_status sepal_atomics_from_jsonl(const char* text, size_t len,
                                                sepal_atomics** out);
SEPAL_API sepal_status sepal_atomics_to_jsonl(const sepal_atomics* a, char** out);
SEPAL_API size_t sepal_atomics_size(const sepal_atomics* a);
/* Views stay valid while the handle lives. Order is canonical. */
SEPAL_API sepal_status sepal_atomics_get(const sepal_atomics* a, size_t index,
                                         sepal_atomic_view* out);
/* Allow-labeled atomics only, keeping their sources. */
SEPAL_API sepal_status sepal_atomics_allow(const sepal_atomics* a, sepal_atomics** out);
/* device \ reference by four-tuple; device sources carried over. */
SEPAL_API sepal_status sepal_diff(const sepal_atomics* device, const sepal_atomics* reference,
                                  sepal_atomics** out);
SEPAL_API void sepal_atomics_free(sepal_atomics* a);

/* ---- UID inference ----------------------------------------------------- */

/* aid_tsv NULL uses the builtin table. warnings (optional) counts skipped lines. */
SEPAL_API sepal_status sepal_uid_infer(const sepal_policy* db, const char* file_contexts,
                                       const char* rc, const char* seapp, const char* aid_tsv,
                                       sepal_uidmap** out, size_t* warnings);
SEPAL_API sepal_status sepal_uidmap_from_tsv(const char* text, size_t len, sepal_uidmap** out);
SEPAL_API sepal_status sepal_uidmap_to_tsv(const sepal_uidmap* m, char** out);
/* Bucket name; "unknown" for unmapped domains. */
SEPAL_API const char* sepal_uidmap_lookup(const sepal_uidmap* m, const char* domain);
SEPAL_API void sepal_uidmap_free(sepal_uidmap* m);

/* ---- comment embeddings ------------------------------------------------ */

typedef struct sepal_embed_config {
  int dim;
  int epochs;
  uint64_t seed;
  int negative;
  double learning_rate;
} sepal_embed_config;

SEPAL_API void sepal_embed_config_default(sepal_embed_config* c);
/* corpus_dir NULL uses <data dir>/corpus. Losses may be NULL. */
SEPAL_API sepal_status sepal_comments_embed(const char* conllu, size_t len,
                                            const char* corpus_dir,
                                            const sepal_embed_config* config,
                                            sepal_docvecs** out, double* loss_before,
                                            double* loss_after);
SEPAL_API sepal_status sepal_docvecs_from_text(const char* text, size_t len,
                                               sepal_docvecs** out);
SEPAL_API sepal_status sepal_docvecs_to_text(const sepal_docvecs* v, char** out);
SEPAL_API size_t sepal_docvecs_count(const sepal_docvecs* v);
SEPAL_API void sepal_docvecs_free(sepal_docvecs* v);

/* ---- model ------------------------------------------------------------- */

typedef struct sepal_train_config {
  uint64_t seed;
  double wide_lr;
  double deep_lr;
  int epochs;
  int batch_size;
  double test_fraction;
  double threshold;
  uint32_t hash_buckets;
} sepal_train_config;

typedef struct sepal_metrics {
  size_t n;
  double accuracy;
  double precision; /* positive class: neverallow */
  double recall;
} sepal_metrics;

SEPAL_API void sepal_train_config_default(sepal_train_config* c);
/* uids and vecs may be NULL. reference supplies type attributes. */
SEPAL_API sepal_status sepal_train(const sepal_atomics* train, const sepal_policy* reference,
                                   const sepal_uidmap* uids, const sepal_docvecs* vecs,
                                   const sepal_train_config* config, sepal_model** out,
                                   sepal_metrics* heldout);
/* SEPF example file for `atomics` under the model's encoder. */
SEPAL_API sepal_status sepal_encode_examples(const sepal_model* m, const sepal_atomics* atomics,
                                             unsigned char** out, size_t* len);
SEPAL_API sepal_status sepal_model_to_binary(const sepal_model* m, unsigned char** out,
                                             size_t* len);
SEPAL_API sepal_status sepal_model_from_binary(const unsigned char* data, size_t len,
                                               sepal_model** out);
/* Probability that the tuple is allowed. */
SEPAL_API sepal_status sepal_model_predict(const sepal_model* m, const char* subject,
                                           const char* target, const char* cls,
                                           const char* permission, double* out);
SEPAL_API void sepal_model_free(sepal_model* m);

/* ---- findings ---------------------------------------------------------- */

enum {
  SEPAL_CAT_COARSE_ATTRIBUTE = 1 << 0,
  SEPAL_CAT_DEBUG_RULE = 1 << 1,
  SEPAL_CAT_DEPRECATED = 1 << 2,
  SEPAL_CAT_UNTRUSTED_DOMAIN = 1 << 3,
  SEPAL_CAT_UNCATEGORIZED = 1 << 4
};

typedef struct sepal_finding_view {
  sepal_atomic_view atomic;
  double probability;
  const char* image;
  const char* provenance;
  unsigned categories; /* SEPAL_CAT_* bits */
} sepal_finding_view;

/* Allow atomics of `customized` predicted neverallow. device may be NULL;
 * when given, its types extend the encoder's type table. */
SEPAL_API sepal_status sepal_classify(const sepal_model* m, const sepal_atomics* customized,
                                      const sepal_policy* device, const char* image,
                                      sepal_findings** out);
SEPAL_API sepal_status sepal_findings_from_jsonl(const char* text, size_t len,
                                                 sepal_findings** out);
SEPAL_API sepal_status sepal_findings_to_jsonl(const sepal_findings* f, char** out);
SEPAL_API size_t sepal_findings_size(const sepal_findings* f);
SEPAL_API sepal_status sepal_findings_get(const sepal_findings* f, size_t index,
                                          sepal_finding_view* out);
/* Annotates in place. db may be NULL; te and history arrays may be empty. */
SEPAL_API sepal_status sepal_categorize(sepal_findings* f, const sepal_policy* db,
                                        const char* const* te_names,
                                        const char* const* te_texts, size_t n_te,
                                        const char* const* versions,
                                        const sepal_atomics* const* history, size_t n_history,
                                        size_t coarse_threshold);
SEPAL_API void sepal_findings_free(sepal_findings* f);

/* ---- baseline ---------------------------------------------------------- */

typedef struct sepal_baseline_summary {
  size_t total;
  size_t unclassified;
  size_t correct;
  double accuracy_all;
  double accuracy_classified;
} sepal_baseline_summary;

/* JSON lines, one verdict per allow atomic of `targets`. */
SEPAL_API sepal_status sepal_baseline(const sepal_atomics* train, const sepal_atomics* targets,
                                      size_t m, double sigma, char** out,
                                      sepal_baseline_summary* summary);

/* ---- corpus statistics ------------------------------------------------- */

typedef struct sepal_image_counts {
  const char* image;
  const char* version;
  const char* manufacturer;
  size_t customized;
  size_t flagged;
} sepal_image_counts;

SEPAL_API sepal_status sepal_stats_csv(const sepal_image_counts* images, size_t n, char** out);

/* ---- synthetic corpus -------------------------------------------------- */

typedef struct sepal_synth_config {
  uint64_t seed;
  int extra_apps;
  int extra_daemons;
  int rules_per_domain;
  int images;
  int benign_per_image;
  int violations_per_image;
  int vendor_domains_per_image;
} sepal_synth_config;

SEPAL_API void sepal_synth_config_default(sepal_synth_config* c);
SEPAL_API sepal_status sepal_synth(const sepal_synth_config* config, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* SEPAL_SEPAL_H_ */
