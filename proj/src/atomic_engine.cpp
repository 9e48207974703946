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

#include "atomic_engine.hpp"

#include <algorithm>
#include <future>
#include <optional>

namespace sepal {
namespace {

bool mentions_self(const SetExpr& e) {
  if (e.is_name()) return e.name == kSelf;
  for (const auto& c : e.children) {
    if (mentions_self(c)) return true;
  }
  return false;
}

// Calls emit(atomic, rule) for every atomic of rules[begin, end).
template <typename Emit>
void expand_range(const PolicyDb& db, const Resolver& r, std::size_t begin,
                  std::size_t end, Emit&& emit) {
  const auto& types = r.types();
  for (std::size_t k = begin; k < end; ++k) {
    const PolicyRule& rule = db.rules[k];
    TypeSet subjects = r.eval(rule.subject);
    const bool per_subject = mentions_self(rule.target);
    std::optional<TypeSet> fixed_targets;
    if (!per_subject) fixed_targets = r.eval(rule.target);
    subjects.for_each([&](std::size_t si) {
      const Ident& s = types[si];
      TypeSet targets = per_subject ? r.eval(rule.target, &s) : *fixed_targets;
      targets.for_each([&](std::size_t ti) {
        for (const auto& p : rule.permissions) {
          emit(AtomicRule{s, types[ti], rule.cls, p, rule.op}, rule);
        }
      });
    });
  }
}

}  // namespace

AtomicSet expand(const PolicyDb& db, SourceMap* sources,
                 const ExpandOptions& options) {
  const Resolver r(db);
  const std::size_t n = db.rules.size();
  const std::size_t jobs =
      std::max<std::size_t>(1, std::min<std::size_t>(options.jobs, n == 0 ? 1 : n));

  struct Chunk {
    AtomicSet atomics;
    SourceMap sources;
  };
  auto run = [&](std::size_t begin, std::size_t end) {
    Chunk c;
    expand_range(db, r, begin, end, [&](AtomicRule a, const PolicyRule& rule) {
      if (sources) c.sources.emplace(a, rule.origin.to_string());
      c.atomics.insert(std::move(a));
    });
    return c;
  };

  std::vector<Chunk> chunks;
  if (jobs == 1) {
    chunks.push_back(run(0, n));
  } else {
    std::vector<std::future<Chunk>> futures;
    for (std::size_t j = 0; j < jobs; ++j) {
      std::size_t begin = n * j / jobs, end = n * (j + 1) / jobs;
      futures.push_back(std::async(std::launch::async, run, begin, end));
    }
    for (auto& f : futures) chunks.push_back(f.get());
  }

  // Chunks cover increasing rule ranges, so emplace keeps the earliest rule.
  AtomicSet out;
  for (auto& c : chunks) {
    out.merge(c.atomics);
    if (sources) {
      for (auto& [a, src] : c.sources) sources->emplace(a, std::move(src));
    }
  }
  return out;
}

namespace {

// Positions of negations we know how to invert: a Not child of the top-level
// And/Or, or a Not child of an And directly under a top-level Or.
using Site = std::vector<std::size_t>;

bool find_sites(const SetExpr& e, std::vector<Site>& sites) {
  auto has_not = [](const SetExpr& x, auto&& self) -> bool {
    if (x.kind == SetExpr::Kind::kNot) return true;
    for (const auto& c : x.children) {
      if (self(c, self)) return true;
    }
    return false;
  };
  if (!has_not(e, has_not)) return true;
  bool supported = true;
  if (e.kind == SetExpr::Kind::kAnd || e.kind == SetExpr::Kind::kOr) {
    for (std::size_t i = 0; i < e.children.size(); ++i) {
      const SetExpr& c = e.children[i];
      if (c.kind == SetExpr::Kind::kNot) {
        if (has_not(c.children[0], has_not)) supported = false;
        sites.push_back({i});
      } else if (e.kind == SetExpr::Kind::kOr && c.kind == SetExpr::Kind::kAnd) {
        for (std::size_t j = 0; j < c.children.size(); ++j) {
          const SetExpr& g = c.children[j];
          if (g.kind == SetExpr::Kind::kNot) {
            if (has_not(g.children[0], has_not)) supported = false;
            sites.push_back({i, j});
          } else if (has_not(g, has_not)) {
            supported = false;
          }
        }
      } else if (has_not(c, has_not)) {
        supported = false;
      }
    }
  } else {
    supported = false;
  }
  return supported;
}

SetExpr replaced_with_all(const SetExpr& e, const Site& site) {
  SetExpr copy = e;
  SetExpr* node = &copy;
  for (std::size_t idx : site) node = &node->children[idx];
  *node = SetExpr::all();
  return copy;
}

}  // namespace

AugmentResult augment_from_negations(const PolicyDb& db, std::size_t cap,
                                     SourceMap* sources) {
  const Resolver r(db);
  const auto& types = r.types();
  AugmentResult result;

  AtomicSet forbidden;
  for (const auto& a : expand(db)) {
    if (a.label == Op::kNeverallow) forbidden.insert(a);
  }

  AtomicSet candidates;
  SourceMap candidate_sources;
  for (const auto& rule : db.rules) {
    if (rule.op != Op::kNeverallow) continue;
    const SetExpr* subject = &rule.subject;
    if (subject->is_name()) {
      auto it = db.memberships.find(subject->name);
      if (it == db.memberships.end()) continue;
      subject = &it->second;
    }
    std::vector<Site> sites;
    if (!find_sites(*subject, sites)) {
      ++result.skipped_shapes;
      continue;
    }
    if (sites.empty()) continue;

    const TypeSet denoted = r.eval(*subject);
    TypeSet excluded(types.size());
    for (const auto& site : sites) {
      TypeSet widened = r.eval(replaced_with_all(*subject, site));
      widened.subtract(denoted);
      excluded |= widened;
    }

    const bool per_subject = mentions_self(rule.target);
    std::optional<TypeSet> fixed_targets;
    if (!per_subject) fixed_targets = r.eval(rule.target);
    excluded.for_each([&](std::size_t xi) {
      const Ident& x = types[xi];
      TypeSet targets = per_subject ? r.eval(rule.target, &x) : *fixed_targets;
      targets.for_each([&](std::size_t ti) {
        for (const auto& p : rule.permissions) {
          AtomicRule a{x, types[ti], rule.cls, p, Op::kAllow};
          candidate_sources.emplace(a, rule.origin.to_string());
          candidates.insert(std::move(a));
        }
      });
    });
  }

  result.candidates = candidates.size();
  for (const auto& a : candidates) {
    AtomicRule as_never = a;
    as_never.label = Op::kNeverallow;
    if (forbidden.count(as_never)) {
      ++result.dropped_contradictions;
      continue;
    }
    if (result.atomics.size() >= cap) continue;
    if (sources) sources->emplace(a, candidate_sources.at(a));
    result.atomics.insert(a);
  }
  return result;
}

std::size_t balancing_cap(const AtomicSet& expanded, std::size_t available) {
  std::size_t allow = 0, never = 0;
  for (const auto& a : expanded) (a.label == Op::kAllow ? allow : never)++;
  if (never <= allow) return 0;
  return std::min(available, never - allow);
}

AtomicSet diff(const AtomicSet& device, const AtomicSet& reference) {
  auto in_reference = [&](const AtomicRule& a) {
    AtomicRule probe = a;
    probe.label = Op::kAllow;
    if (reference.count(probe)) return true;
    probe.label = Op::kNeverallow;
    return reference.count(probe) != 0;
  };
  AtomicSet out;
  for (const auto& a : device) {
    if (!in_reference(a)) out.insert(a);
  }
  return out;
}

DedupeResult dedupe_corpus(const std::vector<AtomicSet>& images) {
  DedupeResult result;
  for (const auto& image : images) {
    for (const auto& a : image) {
      result.unique.insert(a);
      ++result.occurrence[a];
    }
  }
  return result;
}

AtomicSet with_label(const AtomicSet& atomics, Op label) {
  AtomicSet out;
  for (const auto& a : atomics) {
    if (a.label == label) out.insert(a);
  }
  return out;
}

}  // namespace sepal
