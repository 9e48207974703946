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

#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "model.hpp"
#include "policy_model.hpp"

namespace sepal {

struct CategorizeOptions {
  std::size_t coarse_threshold = 20;  // resolved members, strictly more
  std::set<Ident> untrusted{"untrusted_app", "isolated_app"};
  std::set<Ident> debug_subjects{"su"};
};

struct TeSource {
  std::string name;
  std::string text;
};

struct ReferenceVersion {
  std::string version;
  AtomicSet atomics;
};

// Numeric-aware ordering: "5.1" < "8.0" < "10".
bool version_less(std::string_view a, std::string_view b);

// Adds category tags; never drops or reorders findings. Any input may be
// empty, in which case the categories depending on it are not assigned.
// `db` is the device policy the findings came from.
std::vector<Finding> categorize(std::vector<Finding> findings, const PolicyDb* db,
                                const std::vector<TeSource>& te_sources,
                                const std::vector<ReferenceVersion>& history,
                                const CategorizeOptions& options = {});

std::string findings_to_jsonl(const std::vector<Finding>& findings);
std::vector<Finding> findings_from_jsonl(std::string_view text);

struct ImageMeta {
  std::string image;
  std::string version;
  std::string manufacturer;
};

struct ImageCounts {
  ImageMeta meta;
  std::size_t customized = 0;
  std::size_t flagged = 0;
};

struct StatsRow {
  std::string group;  // "all", "version=<v>", "manufacturer=<m>", "image=<i>"
  std::size_t images = 0;
  double avg_customized = 0.0;
  double avg_flagged = 0.0;
  double pct_flagged = 0.0;  // 100 * sum flagged / sum customized
  bool empty = false;        // no customized rules in the group
};

struct CorpusStats {
  std::vector<StatsRow> rows;
};

CorpusStats stats(const std::vector<ImageCounts>& images);

struct ImageSets {
  ImageMeta meta;
  AtomicSet customized;
  AtomicSet flagged;
};

// Set form; flagged atomics must be customized atomics.
CorpusStats stats(const std::vector<ImageSets>& images);

// Header: group,images,avg_customized,avg_flagged,pct_flagged
std::string stats_to_csv(const CorpusStats& s);

}  // namespace sepal
