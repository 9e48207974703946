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

// Glue shared by the C API, the CLI and the acceptance harness.

#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "atomic_engine.hpp"
#include "comment_nlp.hpp"
#include "features.hpp"
#include "parsers.hpp"
#include "uid_inference.hpp"

namespace sepal {

enum class PolicyFormat { kCil, kFlat };

std::optional<PolicyFormat> parse_policy_format(std::string_view s);

// Parses and merges several policy files of one format.
PolicyDb parse_policy_files(const std::vector<std::string>& paths, PolicyFormat format,
                            const ParseOptions& options);

struct TrainingSet {
  AtomicSet atomics;  // expansion plus augmentation
  SourceMap sources;
  std::size_t augmented = 0;
};

// `augment_cap` limits the augmented atomics that are not already explicit
// allows; unset picks balancing_cap.
TrainingSet training_set(const PolicyDb& reference, std::optional<std::size_t> augment_cap,
                         int jobs = 1);

EncoderContext make_context(const AtomicSet& train, const PolicyDb& reference,
                            std::map<Ident, UidBucket> uids, DocVectorMap doc_vecs,
                            std::uint32_t hash_buckets = kDefaultHashBuckets);

// Adds flag and attribute information for types the context has not seen,
// such as vendor domains of a device policy.
void merge_type_info(EncoderContext* ctx, const PolicyDb& device);

// The data directory: SEPAL_DATA_DIR, else the compiled-in default.
std::string data_dir();
void set_data_dir(const std::string& dir);

}  // namespace sepal
