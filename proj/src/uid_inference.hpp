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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parsers.hpp"
#include "policy_model.hpp"

namespace sepal {

enum class UidBucket : std::uint8_t {
  kRoot,
  kSystem,
  kShell,
  kRadio,
  kMedia,
  kOtherDaemon,
  kApp,
  kIsolated,
  kUnknown,
};

inline constexpr int kUidBucketCount = 9;

const char* uid_bucket_name(UidBucket b);
std::optional<UidBucket> parse_uid_bucket(std::string_view s);

// root > system > {shell, radio, media, other_daemon} > app > isolated > unknown
int privilege_rank(UidBucket b);

// Prefers the higher-privilege bucket; ties go to the earlier enumerator.
UidBucket more_privileged(UidBucket a, UidBucket b);

// Android user name -> bucket. Names not listed map to other_daemon.
class AidTable {
 public:
  static AidTable builtin();
  static AidTable parse(std::string_view tsv);  // `<user>\t<bucket>`
  static AidTable load(const std::string& path);

  UidBucket bucket_for(const std::string& user) const;

 private:
  std::map<std::string, UidBucket> map_;
};

struct UidInference {
  std::map<Ident, UidBucket> buckets;  // every candidate domain, unknown included
  std::vector<std::string> warnings;
};

// Apps take their bucket from seapp_contexts; daemons follow
// typetransition(init, X_exec, process, D) -> file_contexts paths labelled
// X_exec -> rc service with that executable -> its user.
UidInference infer_users(const PolicyDb& db,
                         const std::vector<FileContextEntry>& file_contexts,
                         const std::vector<RcServiceEntry>& rc_services,
                         const std::vector<SeappEntry>& seapp,
                         const AidTable& aid = AidTable::builtin());

UidBucket lookup_bucket(const std::map<Ident, UidBucket>& map, const Ident& domain);

// `<domain>\t<bucket>` lines, sorted by domain.
std::string uid_map_to_tsv(const std::map<Ident, UidBucket>& map);
std::map<Ident, UidBucket> uid_map_from_tsv(std::string_view text);

// Regex escapes removed (`\.` -> `.`); nullopt if regex syntax remains.
std::optional<std::string> literal_path(std::string_view pattern);

}  // namespace sepal
