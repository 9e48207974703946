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

#include "pipeline.hpp"

#include <cstdlib>
#include <mutex>

#include "serialization.hpp"

namespace sepal {

std::optional<PolicyFormat> parse_policy_format(std::string_view s) {
  if (s == "cil") return PolicyFormat::kCil;
  if (s == "flat" || s == "conf") return PolicyFormat::kFlat;
  return std::nullopt;
}

PolicyDb parse_policy_files(const std::vector<std::string>& paths, PolicyFormat format,
                            const ParseOptions& options) {
  PolicyDb db;
  for (const auto& p : paths) {
    ParseOptions opts = options;
    opts.finalize = false;
    opts.source_name = p;
    const std::string text = read_file(p);
    db.merge(format == PolicyFormat::kCil ? parse_cil(text, opts) : parse_flat(text, opts));
  }
  if (options.finalize) finalize(db, FinalizeOptions{options.strict});
  return db;
}

TrainingSet training_set(const PolicyDb& reference, std::optional<std::size_t> augment_cap,
                         int jobs) {
  TrainingSet out;
  ExpandOptions eo;
  eo.jobs = jobs;
  out.atomics = expand(reference, &out.sources, eo);
  SourceMap aug_sources;
  const AugmentResult aug = augment_from_negations(reference, SIZE_MAX, &aug_sources);
  // An augmented tuple already allowed explicitly adds nothing, so the cap
  // counts new atomics only.
  std::vector<const AtomicRule*> fresh;
  for (const auto& a : aug.atomics) {
    if (!out.atomics.count(a)) fresh.push_back(&a);
  }
  const std::size_t cap =
      augment_cap ? *augment_cap : balancing_cap(out.atomics, fresh.size());
  for (std::size_t i = 0; i < fresh.size() && i < cap; ++i) {
    out.atomics.insert(*fresh[i]);
    out.sources.emplace(*fresh[i], aug_sources.at(*fresh[i]));
    ++out.augmented;
  }
  return out;
}

EncoderContext make_context(const AtomicSet& train, const PolicyDb& reference,
                            std::map<Ident, UidBucket> uids, DocVectorMap doc_vecs,
                            std::uint32_t hash_buckets) {
  EncoderContext ctx;
  ctx.vocab = Vocabulary::build(train);
  ctx.types = build_type_info(reference);
  ctx.uids = std::move(uids);
  ctx.hash_buckets = hash_buckets;
  ctx.vec_dim = doc_vecs.empty() ? kDefaultVecDim
                                 : static_cast<int>(doc_vecs.begin()->second.size());
  ctx.doc_vecs = std::move(doc_vecs);
  return ctx;
}

void merge_type_info(EncoderContext* ctx, const PolicyDb& device) {
  for (auto& [name, info] : build_type_info(device)) ctx->types.emplace(name, std::move(info));
}

namespace {
std::mutex g_data_mu;
std::string g_data_override;
}  // namespace

std::string data_dir() {
  {
    std::lock_guard<std::mutex> lock(g_data_mu);
    if (!g_data_override.empty()) return g_data_override;
  }
  if (const char* env = std::getenv("SEPAL_DATA_DIR"); env && *env) return env;
  return SEPAL_DEFAULT_DATA_DIR;
}

void set_data_dir(const std::string& dir) {
  std::lock_guard<std::mutex> lock(g_data_mu);
  g_data_override = dir;
}

}  // namespace sepal
