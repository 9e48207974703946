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

#include <string>
#include <string_view>
#include <vector>

#include "atomic_engine.hpp"
#include "parsers.hpp"
#include "policy_model.hpp"

namespace sepal {

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

// Atomic corpus: one JSON object per line with fields subject, target,
// class, permission, label, source; lines in canonical order.
std::string atomics_to_jsonl(const AtomicSet& atomics, const SourceMap* sources = nullptr);
AtomicSet atomics_from_jsonl(std::string_view text, SourceMap* sources = nullptr);

// PolicyDb <-> JSON. Set expressions are nested arrays:
// "name" | ["all"] | ["and", ...] | ["or", ...] | ["not", x].
std::string policy_to_json(const PolicyDb& db);
PolicyDb policy_from_json(std::string_view text);

std::string file_contexts_to_json(const TableResult<FileContextEntry>& t);
std::string rc_to_json(const TableResult<RcServiceEntry>& t);
std::string seapp_to_json(const TableResult<SeappEntry>& t);

}  // namespace sepal
