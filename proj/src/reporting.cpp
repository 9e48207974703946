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

#include "reporting.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>

#include "errors.hpp"
#include "json.hpp"
#include "parsers.hpp"

namespace sepal {

bool version_less(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
    const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      std::size_t ei = i, ej = j;
      while (ei < a.size() && std::isdigit(static_cast<unsigned char>(a[ei]))) ++ei;
      while (ej < b.size() && std::isdigit(static_cast<unsigned char>(b[ej]))) ++ej;
      std::string_view na = a.substr(i, ei - i), nb = b.substr(j, ej - j);
      while (na.size() > 1 && na[0] == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb[0] == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ei;
      j = ej;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

namespace {

AtomicRule as_allow(AtomicRule a) {
  a.label = Op::kAllow;
  return a;
}

// Size of the resolved subject and target sets of the first allow rule in
// `db` that produces each atomic; the provenance origin is preferred.
class RuleSizes {
 public:
  explicit RuleSizes(const PolicyDb& db) : db_(db), resolver_(db) {
    for (std::size_t i = 0; i < db.rules.size(); ++i) {
      by_origin_.emplace(db.rules[i].origin.to_string(), i);
    }
  }

  std::optional<std::pair<std::size_t, std::size_t>> sizes(const Finding& f) {
    if (auto it = by_origin_.find(f.provenance); !f.provenance.empty() && it != by_origin_.end()) {
      if (produces(it->second, f.atomic)) return size_of(it->second, f.atomic);
    }
    for (std::size_t i = 0; i < db_.rules.size(); ++i) {
      if (produces(i, f.atomic)) return size_of(i, f.atomic);
    }
    return std::nullopt;
  }

 private:
  bool produces(std::size_t i, const AtomicRule& a) {
    const PolicyRule& r = db_.rules[i];
    if (r.op != Op::kAllow || r.cls != a.cls || !r.permissions.count(a.permission)) return false;
    auto si = resolver_.index_of(a.subject);
    auto ti = resolver_.index_of(a.target);
    if (!si || !ti) return false;
    try {
      if (!resolver_.eval(r.subject).contains(*si)) return false;
      return resolver_.eval(r.target, &a.subject).contains(*ti);
    } catch (const Error&) {
      return false;
    }
  }

  std::pair<std::size_t, std::size_t> size_of(std::size_t i, const AtomicRule& a) {
    const PolicyRule& r = db_.rules[i];
    return {resolver_.eval(r.subject).count(), resolver_.eval(r.target, &a.subject).count()};
  }

  const PolicyDb& db_;
  Resolver resolver_;
  std::multimap<std::string, std::size_t> by_origin_;
};

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

class DebugMatcher {
 public:
  DebugMatcher(const std::vector<TeSource>& sources, const PolicyDb* db) : db_(db) {
    for (const auto& src : sources) {
      for (auto& st : scan_debug_statements(src.text)) statements_.push_back(std::move(st));
    }
    if (db_) resolver_.emplace(*db_);
  }

  bool matches(const AtomicRule& a) const {
    for (const auto& st : statements_) {
      if (names_match(st.subjects, a.subject) && names_match(st.targets, a.target, &a.subject) &&
          words_match(st.classes, a.cls.str(), "_class_set") &&
          words_match(st.permissions, a.permission.str(), "_perms")) {
        return true;
      }
    }
    return false;
  }

 private:
  bool covers(const std::string& tok, const Ident& type) const {
    if (tok == "*" || tok == type.str()) return true;
    if (!resolver_ || !is_valid_ident(tok)) return false;
    const Ident name(tok);
    if (!db_->is_attribute(name)) return false;
    auto idx = resolver_->index_of(type);
    return idx && resolver_->members(name).contains(*idx);
  }

  bool names_match(const std::vector<std::string>& toks, const Ident& type,
                   const Ident* self_binding = nullptr) const {
    bool hit = false;
    for (const auto& t : toks) {
      if (!t.empty() && t[0] == '-') {
        if (covers(t.substr(1), type)) return false;
      } else if (t == "self") {
        if (self_binding && *self_binding == type) hit = true;
      } else if (covers(t, type)) {
        hit = true;
      }
    }
    return hit;
  }

  // Macros such as rw_file_perms or file_class_set are not expanded; they
  // match anything.
  static bool words_match(const std::vector<std::string>& toks, const std::string& word,
                          std::string_view macro_suffix) {
    for (const auto& t : toks) {
      if (t == word || t == "*" || ends_with(t, macro_suffix)) return true;
    }
    return false;
  }

  const PolicyDb* db_;
  std::optional<Resolver> resolver_;
  std::vector<DebugStatement> statements_;
};

}  // namespace

std::vector<Finding> categorize(std::vector<Finding> findings, const PolicyDb* db,
                                const std::vector<TeSource>& te_sources,
                                const std::vector<ReferenceVersion>& history,
                                const CategorizeOptions& options) {
  std::optional<RuleSizes> sizes;
  if (db) sizes.emplace(*db);
  const DebugMatcher debug(te_sources, db);

  std::vector<const ReferenceVersion*> versions;
  for (const auto& v : history) versions.push_back(&v);
  std::stable_sort(versions.begin(), versions.end(), [](const auto* x, const auto* y) {
    return version_less(x->version, y->version);
  });

  for (auto& f : findings) {
    f.categories.erase(Category::kUncategorized);
    const AtomicRule key = as_allow(f.atomic);

    if (sizes) {
      if (auto s = sizes->sizes(f);
          s && (s->first > options.coarse_threshold || s->second > options.coarse_threshold)) {
        f.categories.insert(Category::kCoarseAttribute);
      }
    }
    if (options.debug_subjects.count(f.atomic.subject) || debug.matches(f.atomic)) {
      f.categories.insert(Category::kDebugRule);
    }
    if (versions.size() >= 2 && !versions.back()->atomics.count(key)) {
      for (std::size_t i = 0; i + 1 < versions.size(); ++i) {
        if (versions[i]->atomics.count(key)) {
          f.categories.insert(Category::kDeprecated);
          break;
        }
      }
    }
    if (options.untrusted.count(f.atomic.subject)) {
      f.categories.insert(Category::kUntrustedDomain);
    }
    if (f.categories.empty()) f.categories.insert(Category::kUncategorized);
  }
  return findings;
}

using json = nlohmann::ordered_json;

std::string findings_to_jsonl(const std::vector<Finding>& findings) {
  std::string out;
  for (const auto& f : findings) {
    json j;
    j["subject"] = f.atomic.subject.str();
    j["target"] = f.atomic.target.str();
    j["class"] = f.atomic.cls.str();
    j["permission"] = f.atomic.permission.str();
    j["label"] = op_name(f.atomic.label);
    j["probability"] = f.probability;
    j["image"] = f.source_image;
    j["provenance"] = f.provenance;
    j["categories"] = json::array();
    for (Category c : f.categories) j["categories"].push_back(category_name(c));
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Finding> findings_from_jsonl(std::string_view text) {
  std::vector<Finding> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      Finding f;
      auto ident = [&](const char* k) {
        std::string s = j.at(k).get<std::string>();
        if (!is_valid_ident(s)) throw Error(ErrorCode::kFormat, std::string("bad ") + k);
        return Ident(std::move(s));
      };
      f.atomic.subject = ident("subject");
      f.atomic.target = ident("target");
      f.atomic.cls = ident("class");
      f.atomic.permission = ident("permission");
      auto op = parse_op(j.value("label", "allow"));
      if (!op) throw Error(ErrorCode::kFormat, "bad label");
      f.atomic.label = *op;
      f.probability = j.value("probability", 0.0);
      f.source_image = j.value("image", "");
      f.provenance = j.value("provenance", "");
      if (j.contains("categories")) {
        for (const auto& c : j["categories"]) {
          auto cat = parse_category(c.get<std::string>());
          if (!cat) throw Error(ErrorCode::kFormat, "unknown category");
          f.categories.insert(*cat);
        }
      }
      out.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, "findings line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kFormat, "findings line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

CorpusStats stats(const std::vector<ImageCounts>& images) {
  struct Acc {
    std::size_t images = 0, customized = 0, flagged = 0;
  };
  Acc all;
  std::map<std::string, Acc, bool (*)(const std::string&, const std::string&)> by_version(
      [](const std::string& a, const std::string& b) { return version_less(a, b); });
  std::map<std::string, Acc> by_manufacturer;
  std::map<std::string, Acc> by_image;
  for (const auto& im : images) {
    if (im.flagged > im.customized) {
      throw Error(ErrorCode::kInvalidArgument,
                  "image '" + im.meta.image + "' has more flagged than customized rules");
    }
    for (Acc* a : {&all, &by_version[im.meta.version], &by_manufacturer[im.meta.manufacturer],
                   &by_image[im.meta.image]}) {
      ++a->images;
      a->customized += im.customized;
      a->flagged += im.flagged;
    }
  }
  CorpusStats out;
  auto row = [&](std::string group, const Acc& a) {
    StatsRow r;
    r.group = std::move(group);
    r.images = a.images;
    if (a.images) {
      r.avg_customized = static_cast<double>(a.customized) / static_cast<double>(a.images);
      r.avg_flagged = static_cast<double>(a.flagged) / static_cast<double>(a.images);
    }
    r.empty = a.customized == 0;
    r.pct_flagged =
        r.empty ? 0.0 : 100.0 * static_cast<double>(a.flagged) / static_cast<double>(a.customized);
    out.rows.push_back(std::move(r));
  };
  row("all", all);
  for (const auto& [k, a] : by_version) row("version=" + k, a);
  for (const auto& [k, a] : by_manufacturer) row("manufacturer=" + k, a);
  for (const auto& [k, a] : by_image) row("image=" + k, a);
  return out;
}

CorpusStats stats(const std::vector<ImageSets>& images) {
  std::vector<ImageCounts> counts;
  for (const auto& im : images) {
    for (const auto& a : im.flagged) {
      if (!im.customized.count(a)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "flagged atomic " + a.to_string() + " is not customized");
      }
    }
    counts.push_back(ImageCounts{im.meta, im.customized.size(), im.flagged.size()});
  }
  return stats(counts);
}

std::string stats_to_csv(const CorpusStats& s) {
  std::string out = "group,images,avg_customized,avg_flagged,pct_flagged\n";
  char buf[128];
  for (const auto& r : s.rows) {
    std::string group = r.group;
    if (group.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char c : group) {
        if (c == '"') q += '"';
        q += c;
      }
      group = q + "\"";
    }
    std::snprintf(buf, sizeof buf, ",%zu,%.4f,%.4f,%.4f\n", r.images, r.avg_customized,
                  r.avg_flagged, r.pct_flagged);
    out += group;
    out += buf;
  }
  return out;
}

}  // namespace sepal
