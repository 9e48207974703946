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

// Synthetic policy corpus with a planted allow/neverallow boundary. See
// docs/synth.md for the generator description.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "policy_model.hpp"

namespace sepal {

struct SynthConfig {
  std::uint64_t seed = 7;
  int extra_apps = 16;
  int extra_daemons = 20;
  int rules_per_domain = 8;
  int images = 3;
  int benign_per_image = 60;
  int violations_per_image = 40;
  int vendor_domains_per_image = 3;
};

struct SynthImage {
  std::string name;
  std::string version;
  std::string manufacturer;
  std::string policy;      // flat text
  std::string te_source;   // vendor TE with userdebug_or_eng blocks
  AtomicSet violations;    // customized allow atomics inside the boundary
  AtomicSet benign;        // customized allow atomics outside it
};

struct SynthCorpus {
  std::string reference_cil;
  std::map<std::string, std::string> te_files;  // "<unit>.te" -> text
  std::string conllu;                           // gold parses of every comment sentence
  std::string file_contexts;
  std::string rc;
  std::string seapp;
  std::vector<SynthImage> images;
  std::map<std::string, AtomicSet> history;  // version -> reference allow atomics
  std::string current_version;
  AtomicSet boundary;  // every planted-forbidden tuple over reference types, neverallow-labeled
};

SynthCorpus synthesize(const SynthConfig& config);

// Writes the corpus layout described in docs/synth.md under `dir`.
void write_synth(const SynthCorpus& corpus, const std::string& dir);

}  // namespace sepal
