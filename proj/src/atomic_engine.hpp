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
#include <map>
#include <string>
#include <vector>

#include "policy_model.hpp"

namespace sepal {

// Atomic rule -> "file:line" of the first rule (in rule order) producing it.
using SourceMap = std::map<AtomicRule, std::string>;

struct ExpandOptions {
  int jobs = 1;
};

// One atomic per (subject type, target type, permission) of every rule;
// `self` binds to each expanded subject. Deduplicated, canonical order.
AtomicSet expand(const PolicyDb& db, SourceMap* sources = nullptr,
                 const ExpandOptions& options = {});

struct AugmentResult {
  AtomicSet atomics;                   // allow-labeled, at most `cap`
  std::size_t candidates = 0;          // before dropping and capping
  std::size_t dropped_contradictions = 0;
  std::size_t skipped_shapes = 0;      // neverallows with deeper negations
};

// Allow atomics inferred from neverallow subjects of the form
// And(..., Not(S)) (also one level inside an Or): every type the negation
// removes from the subject set is taken to hold the access. Candidates that
// equal a neverallow atomic of `db` are dropped; the rest are truncated to
// the canonically least `cap`.
AugmentResult augment_from_negations(const PolicyDb& db, std::size_t cap,
                                     SourceMap* sources = nullptr);

// Number of augmented atomics that brings the allow share of
// `expanded` + augmentation closest to one half, limited by `available`.
std::size_t balancing_cap(const AtomicSet& expanded, std::size_t available);

// device \ reference by four-tuple, labels ignored.
AtomicSet diff(const AtomicSet& device, const AtomicSet& reference);

struct DedupeResult {
  AtomicSet unique;
  std::map<AtomicRule, std::size_t> occurrence;  // number of images
};

DedupeResult dedupe_corpus(const std::vector<AtomicSet>& images);

// Keeps only atomics with the given label.
AtomicSet with_label(const AtomicSet& atomics, Op label);

}  // namespace sepal
