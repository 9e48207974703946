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

#include "uid_inference.hpp"

#include <set>
#include <sstream>

#include "errors.hpp"
#include "serialization.hpp"

namespace sepal {

namespace {
constexpr const char* kBucketNames[kUidBucketCount] = {
    "root", "system", "shell", "radio", "media",
    "other_daemon", "app", "isolated", "unknown",
};
}  // namespace

const char* uid_bucket_name(UidBucket b) {
  return kBucketNames[static_cast<int>(b)];
}

std::optional<UidBucket> parse_uid_bucket(std::string_view s) {
  for (int i = 0; i < kUidBucketCount; ++i) {
    if (s == kBucketNames[i]) return static_cast<UidBucket>(i);
  }
  return std::nullopt;
}

int privilege_rank(UidBucket b) {
  switch (b) {
    case UidBucket::kRoot: return 5;
    case UidBucket::kSystem: return 4;
    case UidBucket::kShell:
    case UidBucket::kRadio:
    case UidBucket::kMedia:
    case UidBucket::kOtherDaemon: return 3;
    case UidBucket::kApp: return 2;
    case UidBucket::kIsolated: return 1;
    case UidBucket::kUnknown: return 0;
  }
  return 0;
}

UidBucket more_privileged(UidBucket a, UidBucket b) {
  const int ra = privilege_rank(a), rb = privilege_rank(b);
  if (ra != rb) return ra > rb ? a : b;
  return static_cast<int>(a) <= static_cast<int>(b) ? a : b;
}

AidTable AidTable::builtin() {
  AidTable t;
  t.map_ = {{"root", UidBucket::kRoot},   {"system", UidBucket::kSystem},
            {"shell", UidBucket::kShell}, {"radio", UidBucket::kRadio},
            {"media", UidBucket::kMedia}};
  return t;
}

AidTable AidTable::parse(std::string_view tsv) {
  AidTable t;
  std::istringstream in{std::string(tsv)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream f(line);
    std::string user, bucket;
    if (!(f >> user)) continue;
    if (!(f >> bucket)) throw SyntaxError("aid table", lineno, 0, "missing bucket");
    auto b = parse_uid_bucket(bucket);
    if (!b) throw SyntaxError("aid table", lineno, 0, "unknown bucket '" + bucket + "'");
    t.map_[user] = *b;
  }
  return t;
}

AidTable AidTable::load(const std::string& path) { return parse(read_file(path)); }

UidBucket AidTable::bucket_for(const std::string& user) const {
  auto it = map_.find(user);
  return it == map_.end() ? UidBucket::kOtherDaemon : it->second;
}

std::optional<std::string> literal_path(std::string_view pattern) {
  std::string out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    char c = pattern[i];
    if (c == '\\') {
      if (i + 1 >= pattern.size()) return std::nullopt;
      out.push_back(pattern[++i]);
      continue;
    }
    switch (c) {
      case '(': case ')': case '[': case ']': case '*': case '+':
      case '?': case '|': case '^': case '$': case '{': case '}':
        return std::nullopt;
      default:
        out.push_back(c);
    }
  }
  return out;
}

namespace {

UidBucket seapp_bucket(const std::string& user, const AidTable& aid) {
  if (user == "_app") return UidBucket::kApp;
  if (user == "_isolated") return UidBucket::kIsolated;
  if (user.empty()) return UidBucket::kUnknown;
  return aid.bucket_for(user);
}

}  // namespace

UidInference infer_users(const PolicyDb& db,
                         const std::vector<FileContextEntry>& file_contexts,
                         const std::vector<RcServiceEntry>& rc_services,
                         const std::vector<SeappEntry>& seapp,
                         const AidTable& aid) {
  UidInference out;
  std::map<Ident, std::set<UidBucket>> found;

  // Candidate domains: process transition results and seapp domains.
  for (const auto& tr : db.transitions) {
    if (tr.cls == Ident("process")) out.buckets.emplace(tr.result, UidBucket::kUnknown);
  }
  for (const auto& e : seapp) out.buckets.emplace(e.domain, UidBucket::kUnknown);

  for (const auto& e : seapp) {
    UidBucket b = seapp_bucket(e.assigned_user_class, aid);
    if (b != UidBucket::kUnknown) found[e.domain].insert(b);
  }

  std::map<Ident, std::vector<std::string>> paths_by_type;
  for (const auto& fc : file_contexts) {
    if (auto p = literal_path(fc.path_pattern)) paths_by_type[fc.label_type].push_back(*p);
  }
  std::map<std::string, std::vector<const RcServiceEntry*>> services_by_path;
  for (const auto& svc : rc_services) services_by_path[svc.executable_path].push_back(&svc);

  for (const auto& tr : db.transitions) {
    if (tr.source != Ident("init") || tr.cls != Ident("process")) continue;
    auto paths = paths_by_type.find(tr.exec_type);
    if (paths == paths_by_type.end()) continue;
    for (const auto& path : paths->second) {
      auto svcs = services_by_path.find(path);
      if (svcs == services_by_path.end()) continue;
      for (const RcServiceEntry* svc : svcs->second) {
        found[tr.result].insert(aid.bucket_for(svc->user));
      }
    }
  }

  for (const auto& [domain, buckets] : found) {
    UidBucket best = *buckets.begin();
    for (UidBucket b : buckets) best = more_privileged(best, b);
    if (buckets.size() > 1) {
      std::string list;
      for (UidBucket b : buckets) list += std::string(list.empty() ? "" : ",") + uid_bucket_name(b);
      out.warnings.push_back("domain '" + domain.str() + "' has several users (" + list +
                             "); using " + uid_bucket_name(best));
    }
    out.buckets[domain] = best;
  }
  return out;
}

UidBucket lookup_bucket(const std::map<Ident, UidBucket>& map, const Ident& domain) {
  auto it = map.find(domain);
  return it == map.end() ? UidBucket::kUnknown : it->second;
}

std::string uid_map_to_tsv(const std::map<Ident, UidBucket>& map) {
  std::string out;
  for (const auto& [d, b] : map) {
    out += d.str();
    out += '\t';
    out += uid_bucket_name(b);
    out += '\n';
  }
  return out;
}

std::map<Ident, UidBucket> uid_map_from_tsv(std::string_view text) {
  std::map<Ident, UidBucket> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream f(line);
    std::string d, b;
    if (!(f >> d)) continue;
    auto bucket = (f >> b) ? parse_uid_bucket(b) : std::nullopt;
    if (!bucket || !is_valid_ident(d)) {
      throw SyntaxError("uid map", lineno, 0, "expected '<domain> <bucket>'");
    }
    out[Ident(d)] = *bucket;
  }
  return out;
}

}  // namespace sepal
