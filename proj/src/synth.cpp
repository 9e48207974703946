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

#include "synth.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

#include "atomic_engine.hpp"
#include "errors.hpp"
#include "json.hpp"
#include "parsers.hpp"
#include "rng.hpp"
#include "serialization.hpp"

namespace sepal {

namespace {

enum class Kind { kData, kSensitive, kChr, kBlk, kSysfs, kProc, kProcSensitive, kExec, kDomain };

struct Domain {
  std::string name;
  bool app = false;
  bool untrusted = false;
  bool privileged = false;
  bool core = true;
  bool net = false;
  bool mls = false;
  bool vendor = false;
  std::string user;        // rc user; empty when not started from an executable
  std::string seapp_user;  // apps only
  std::string exec_path;
};

struct ClassPool {
  const char* cls;
  std::vector<std::string> perms;
};

const std::map<Kind, std::vector<ClassPool>>& class_pools() {
  static const std::map<Kind, std::vector<ClassPool>> pools = {
      {Kind::kData,
       {{"file", {"read", "write", "open", "getattr", "create", "unlink", "append", "rename",
                  "setattr", "lock", "map", "ioctl"}},
        {"dir", {"search", "read", "open", "getattr", "write", "add_name", "remove_name"}}}},
      {Kind::kSensitive,
       {{"file", {"read", "write", "open", "getattr", "create", "unlink", "append", "rename",
                  "setattr", "lock", "map", "ioctl"}},
        {"dir", {"search", "read", "open", "getattr", "write", "add_name", "remove_name"}}}},
      {Kind::kChr, {{"chr_file", {"read", "write", "open", "ioctl", "getattr", "map"}}}},
      {Kind::kBlk, {{"blk_file", {"read", "write", "open", "ioctl", "getattr"}}}},
      {Kind::kSysfs,
       {{"file", {"read", "open", "getattr", "write"}}, {"dir", {"search", "read", "open"}}}},
      {Kind::kProc, {{"file", {"read", "open", "getattr"}}}},
      {Kind::kProcSensitive, {{"file", {"read", "open", "getattr"}}}},
      {Kind::kExec,
       {{"file", {"execute", "read", "open", "getattr", "map", "execute_no_trans"}}}},
      {Kind::kDomain,
       {{"binder", {"call", "transfer"}},
        {"fd", {"use"}},
        {"process", {"signal", "sigchld", "getattr"}}}},
  };
  return pools;
}

const std::set<std::string> kP1{"write", "append", "create", "unlink", "rename", "setattr"};
const std::set<std::string> kP2{"read", "write", "open", "ioctl"};
const std::set<std::string> kP3{"read", "open", "getattr"};
const std::set<std::string> kP4{"load_policy", "setenforce"};
const std::set<std::string> kP5{"read", "write", "open", "ioctl"};

class World {
 public:
  std::vector<Domain> domains;
  std::map<std::string, Kind> targets;  // object types and domains

  const Domain* domain(const std::string& n) const {
    auto it = index_.find(n);
    return it == index_.end() ? nullptr : &domains[it->second];
  }
  void add_domain(Domain d) {
    index_[d.name] = domains.size();
    targets[d.name] = Kind::kDomain;
    domains.push_back(std::move(d));
  }
  void add_target(const std::string& n, Kind k) { targets[n] = k; }
  std::vector<std::string> of_kind(Kind k) const {
    std::vector<std::string> out;
    for (const auto& [n, kk] : targets) {
      if (kk == k) out.push_back(n);
    }
    return out;
  }

  // The planted boundary; mirrors the neverallow rules of the reference.
  bool forbidden(const std::string& s, const std::string& t, const std::string& c,
                 const std::string& p) const {
    const Domain* d = domain(s);
    if (!d) return false;
    auto it = targets.find(t);
    if (it == targets.end()) return false;
    const Kind k = it->second;
    if (d->app && !d->privileged && k == Kind::kSensitive && c == "file" && kP1.count(p)) {
      return true;
    }
    if (s != "init" && s != "vold" && k == Kind::kBlk && c == "blk_file" && kP2.count(p)) {
      return true;
    }
    if (d->untrusted && k == Kind::kProcSensitive && c == "file" && kP3.count(p)) return true;
    if (s != "init" && t == "kernel" && c == "security" && kP4.count(p)) return true;
    if (s != "hal_audio_default" && t == "audio_device" && c == "chr_file" && kP5.count(p)) {
      return true;
    }
    return false;
  }

  std::vector<std::string> attributes_of(const Domain& d) const {
    std::vector<std::string> a{"domain"};
    if (d.app) a.push_back("appdomain");
    if (d.core) a.push_back("coredomain");
    if (d.net) a.push_back("netdomain");
    if (d.mls) a.push_back("mlstrustedsubject");
    if (d.untrusted) a.push_back("untrusted_app_all");
    return a;
  }

 private:
  std::map<std::string, std::size_t> index_;
};

const std::map<Kind, const char*> kTargetAttr = {
    {Kind::kData, "data_file_type"},     {Kind::kSensitive, "sensitive_data_type"},
    {Kind::kChr, "dev_type"},            {Kind::kBlk, "blk_dev_type"},
    {Kind::kSysfs, "sysfs_type"},        {Kind::kProc, "proc_type"},
    {Kind::kProcSensitive, "proc_sensitive_type"}, {Kind::kExec, "exec_type"},
};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

World build_world(const SynthConfig& cfg, Rng& rng) {
  World w;
  auto app = [&](std::string name, bool untrusted, bool privileged, bool net, bool mls,
                 std::string seapp_user) {
    Domain d;
    d.name = std::move(name);
    d.app = true;
    d.untrusted = untrusted;
    d.privileged = privileged;
    d.net = net;
    d.mls = mls;
    d.seapp_user = std::move(seapp_user);
    w.add_domain(std::move(d));
  };
  app("untrusted_app", true, false, true, false, "_app");
  app("untrusted_app_25", true, false, true, false, "_app");
  app("untrusted_app_27", true, false, true, false, "_app");
  app("ephemeral_app", false, false, true, false, "_app");
  app("isolated_app", false, false, false, false, "_isolated");
  app("platform_app", false, true, true, true, "_app");
  app("priv_app", false, true, true, false, "_app");
  app("system_app", false, true, true, true, "system");
  app("con_monitor_app", false, false, true, false, "_app");
  app("radio_app", false, false, true, false, "radio");
  for (int i = 0; i < cfg.extra_apps; ++i) {
    app("app_" + std::to_string(i), rng.bernoulli(0.5), false, rng.bernoulli(0.7), false, "_app");
  }

  auto daemon = [&](std::string name, std::string user, std::string path, bool net, bool mls) {
    Domain d;
    d.name = std::move(name);
    d.user = std::move(user);
    d.exec_path = std::move(path);
    d.net = net;
    d.mls = mls;
    w.add_domain(std::move(d));
  };
  daemon("init", "", "", false, true);
  daemon("kernel", "", "", false, true);
  daemon("vold", "root", "/system/bin/vold", false, true);
  daemon("system_server", "", "", true, true);
  daemon("mediadrmserver", "media", "/system/bin/mediadrmserver", false, false);
  daemon("mediaserver", "media", "/system/bin/mediaserver", true, false);
  daemon("surfaceflinger", "system", "/system/bin/surfaceflinger", false, true);
  daemon("netd", "root", "/system/bin/netd", true, true);
  daemon("installd", "root", "/system/bin/installd", false, true);
  daemon("logd", "logd", "/system/bin/logd", false, true);
  daemon("servicemanager", "system", "/system/bin/servicemanager", false, true);
  daemon("rild", "radio", "/vendor/bin/hw/rild", true, false);
  daemon("hal_audio_default", "audioserver",
         "/vendor/bin/hw/android.hardware.audio@2.0-service", false, false);
  daemon("hal_camera_default", "cameraserver",
         "/vendor/bin/hw/android.hardware.camera.provider@2.4-service", false, false);
  daemon("hal_wifi_default", "wifi", "/vendor/bin/hw/android.hardware.wifi@1.0-service", true,
         false);
  daemon("dumpstate", "root", "/system/bin/dumpstate", false, true);
  daemon("shell", "shell", "/system/bin/sh", true, true);
  daemon("su", "", "", true, true);
  const std::vector<std::string> users{"root", "system", "media", "radio", "shell",
                                       "logd", "wifi",   "nfc",   "gps",   "bluetooth"};
  for (int i = 0; i < cfg.extra_daemons; ++i) {
    const std::string name = "daemon_" + std::to_string(i);
    daemon(name, pick(rng, users), "/system/bin/" + name, rng.bernoulli(0.4), rng.bernoulli(0.3));
  }
  for (auto& d : w.domains) {
    if (d.name == "hal_audio_default" || d.name == "hal_camera_default" ||
        d.name == "hal_wifi_default" || d.name == "rild") {
      d.core = false;
    }
  }

  for (const char* t : {"app_data_file", "system_data_file", "media_data_file",
                        "vendor_data_file", "cache_file", "tmpfs"}) {
    w.add_target(t, Kind::kData);
  }
  for (int i = 0; i < cfg.extra_daemons; ++i) {
    w.add_target("daemon_" + std::to_string(i) + "_data_file", Kind::kData);
  }
  for (const char* t : {"keystore_data_file", "wifi_data_file", "radio_data_file",
                        "privapp_data_file", "shell_data_file", "vold_data_file"}) {
    w.add_target(t, Kind::kSensitive);
  }
  for (const char* t :
       {"gpu_device", "input_device", "video_device", "audio_device", "binder_device"}) {
    w.add_target(t, Kind::kChr);
  }
  for (const char* t : {"block_device", "userdata_block_device", "system_block_device"}) {
    w.add_target(t, Kind::kBlk);
  }
  for (const char* t : {"sysfs", "sysfs_net", "sysfs_power"}) w.add_target(t, Kind::kSysfs);
  for (const char* t : {"proc", "proc_meminfo", "proc_net"}) w.add_target(t, Kind::kProc);
  for (const char* t : {"proc_stat", "proc_kmsg", "proc_pagetypeinfo"}) {
    w.add_target(t, Kind::kProcSensitive);
  }
  for (const auto& d : w.domains) {
    if (!d.exec_path.empty()) w.add_target(d.name + "_exec", Kind::kExec);
  }
  return w;
}

struct Tuple {
  std::string s, t, c;
  std::vector<std::string> perms;
};

// One sampled allow statement for `d`, forbidden permissions removed.
std::optional<Tuple> sample_rule(const World& w, const Domain& d, Rng& rng) {
  static const std::vector<std::pair<Kind, int>> app_weights = {
      {Kind::kData, 4}, {Kind::kSensitive, 2}, {Kind::kChr, 2},  {Kind::kSysfs, 1},
      {Kind::kProc, 2}, {Kind::kProcSensitive, 1}, {Kind::kExec, 1}, {Kind::kDomain, 3}};
  static const std::vector<std::pair<Kind, int>> daemon_weights = {
      {Kind::kData, 4}, {Kind::kSensitive, 2}, {Kind::kChr, 2},  {Kind::kBlk, 1},
      {Kind::kSysfs, 2}, {Kind::kProc, 2}, {Kind::kProcSensitive, 1}, {Kind::kExec, 1},
      {Kind::kDomain, 2}};
  const auto& weights = d.app ? app_weights : daemon_weights;
  int total = 0;
  for (const auto& [k, wgt] : weights) total += wgt;
  int r = static_cast<int>(rng.below(total));
  Kind kind = weights.front().first;
  for (const auto& [k, wgt] : weights) {
    if (r < wgt) {
      kind = k;
      break;
    }
    r -= wgt;
  }

  std::string target;
  if (kind == Kind::kData && d.app && rng.bernoulli(0.5)) {
    target = "app_data_file";
  } else if (kind == Kind::kData && !d.app && rng.bernoulli(0.5) &&
             w.targets.count(d.name + "_data_file")) {
    target = d.name + "_data_file";
  } else if (kind == Kind::kDomain && d.app) {
    static const std::vector<std::string> services{"system_server", "servicemanager",
                                                   "surfaceflinger", "mediaserver"};
    target = pick(rng, services);
  } else {
    target = pick(rng, w.of_kind(kind));
  }

  const auto& pool = pick(rng, class_pools().at(kind));
  std::vector<std::string> perms = pool.perms;
  rng.shuffle(perms);
  perms.resize(1 + rng.below(std::min<std::size_t>(4, perms.size())));
  std::sort(perms.begin(), perms.end());
  std::vector<std::string> kept;
  for (const auto& p : perms) {
    if (!w.forbidden(d.name, target, pool.cls, p)) kept.push_back(p);
  }
  if (kept.empty()) return std::nullopt;
  return Tuple{d.name, target, pool.cls, kept};
}

std::string cil_rule(const char* op, const std::string& s, const std::string& t,
                     const std::string& c, const std::vector<std::string>& perms) {
  std::string out = std::string("(") + op + " " + s + " " + t + " (" + c + " (";
  for (std::size_t i = 0; i < perms.size(); ++i) out += (i ? " " : "") + perms[i];
  return out + ")))\n";
}

std::string flat_rule(const std::string& s, const std::string& t, const std::string& c,
                      const std::vector<std::string>& perms) {
  std::string out = "allow " + s + " " + t + ":" + c;
  if (perms.size() == 1) return out + " " + perms[0] + ";\n";
  out += " {";
  for (const auto& p : perms) out += " " + p;
  return out + " };\n";
}

bool tuple_in(const AtomicSet& set, const std::string& s, const std::string& t,
              const std::string& c, const std::string& p) {
  return set.count(AtomicRule{Ident(s), Ident(t), Ident(c), Ident(p), Op::kAllow}) != 0;
}

// ---------------------------------------------------------------------------
// Comments and their gold parses.

struct Phrase {
  const char* verb;
  const char* comp;
  const char* resource;
};

struct Sentence {
  std::string unit;
  Op polarity;
  bool app;
  Phrase phrase;
};

std::string sentence_text(const Sentence& s) {
  const std::string who = s.app ? "apps" : "daemons";
  if (s.polarity == Op::kAllow) {
    return "allow " + who + " to " + s.phrase.verb + " " + s.phrase.comp + " " + s.phrase.resource;
  }
  return who + " must not " + std::string(s.phrase.verb) + " " + s.phrase.comp + " " +
         s.phrase.resource;
}

// Two fixed tree shapes:
//   allow X to V C R   root=allow, X obj, to mark->V, V xcomp, C compound->R, R obj->V
//   X must not V C R   root=V, X nsubj, must aux, not advmod, C compound->R, R obj->V
std::string sentence_conllu(const Sentence& s) {
  const std::string who_form = s.app ? "apps" : "daemons";
  const std::string who_lemma = s.app ? "app" : "daemon";
  struct Row {
    std::string form, lemma, upos;
    int head;
    std::string rel;
  };
  std::vector<Row> rows;
  if (s.polarity == Op::kAllow) {
    rows = {{"allow", "allow", "VERB", 0, "root"},
            {who_form, who_lemma, "NOUN", 1, "obj"},
            {"to", "to", "PART", 4, "mark"},
            {s.phrase.verb, s.phrase.verb, "VERB", 1, "xcomp"},
            {s.phrase.comp, s.phrase.comp, "NOUN", 6, "compound"},
            {s.phrase.resource, s.phrase.resource, "NOUN", 4, "obj"}};
  } else {
    rows = {{who_form, who_lemma, "NOUN", 4, "nsubj"},
            {"must", "must", "AUX", 4, "aux"},
            {"not", "not", "PART", 4, "advmod"},
            {s.phrase.verb, s.phrase.verb, "VERB", 0, "root"},
            {s.phrase.comp, s.phrase.comp, "NOUN", 6, "compound"},
            {s.phrase.resource, s.phrase.resource, "NOUN", 4, "obj"}};
  }
  std::string out = "# unit = " + s.unit + "\n# polarity = " + op_name(s.polarity) +
                    "\n# text = " + sentence_text(s) + "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    out += std::to_string(i + 1) + "\t" + r.form + "\t" + r.lemma + "\t" + r.upos + "\t_\t_\t" +
           std::to_string(r.head) + "\t" + r.rel + "\t_\t_\n";
  }
  return out + "\n";
}

std::vector<Phrase> allow_phrases(const Domain& d) {
  std::vector<Phrase> p;
  if (d.app) {
    p = {{"read", "app", "data"},   {"use", "gpu", "device"},
         {"call", "system", "service"}, {"find", "binder", "service"},
         {"read", "proc", "information"}, {"open", "camera", "device"}};
    if (d.privileged) p.push_back({"write", "sensitive", "data"});
  } else {
    p = {{"write", "system", "data"},  {"send", "log", "message"},
         {"read", "sysfs", "state"},   {"manage", "network", "socket"},
         {"dump", "service", "state"}, {"create", "runtime", "file"}};
    if (d.name == "init" || d.name == "vold") p.push_back({"mount", "userdata", "partition"});
    if (d.name == "init") p.push_back({"load", "kernel", "policy"});
    if (d.name == "hal_audio_default") p.push_back({"access", "audio", "hardware"});
  }
  return p;
}

std::vector<Phrase> never_phrases(const Domain& d) {
  std::vector<Phrase> p;
  if (d.app && !d.privileged) p.push_back({"write", "sensitive", "data"});
  if (d.untrusted) p.push_back({"read", "kernel", "state"});
  if (d.name != "init" && d.name != "vold") p.push_back({"access", "block", "device"});
  if (d.name != "init") p.push_back({"load", "kernel", "policy"});
  if (d.name != "hal_audio_default") p.push_back({"access", "audio", "hardware"});
  return p;
}

}  // namespace

SynthCorpus synthesize(const SynthConfig& cfg) {
  if (cfg.extra_apps < 0 || cfg.extra_daemons < 0 || cfg.rules_per_domain < 1 ||
      cfg.images < 1 || cfg.benign_per_image < 0 || cfg.violations_per_image < 0 ||
      cfg.vendor_domains_per_image < 0) {
    throw Error(ErrorCode::kInvalidArgument, "bad synth configuration");
  }
  Rng rng(cfg.seed);
  World w = build_world(cfg, rng);
  SynthCorpus out;

  // Tuples that older releases allowed and the current one dropped.
  std::vector<Tuple> deprecated{{"init", "kernel", "security", {"load_policy"}}};
  for (int i = 0; i < 4; ++i) {
    const Domain& d = w.domains[rng.below(w.domains.size())];
    if (auto t = sample_rule(w, d, rng)) deprecated.push_back(*t);
  }
  std::set<std::tuple<std::string, std::string, std::string, std::string>> deprecated_keys;
  for (const auto& t : deprecated) {
    for (const auto& p : t.perms) deprecated_keys.insert({t.s, t.t, t.c, p});
  }

  // --- reference policy ----------------------------------------------------
  std::ostringstream cil;
  cil << "; Synthetic reference policy (seed " << cfg.seed << ").\n";
  std::set<std::string> attributes{"domain", "appdomain", "coredomain", "netdomain",
                                   "mlstrustedsubject", "untrusted_app_all", "file_type"};
  for (const auto& [k, a] : kTargetAttr) attributes.insert(a);
  for (const auto& a : attributes) cil << "(typeattribute " << a << ")\n";
  for (const auto& [name, kind] : w.targets) cil << "(type " << name << ")\n";

  std::map<std::string, std::vector<std::string>> members;
  for (const auto& d : w.domains) {
    for (const auto& a : w.attributes_of(d)) members[a].push_back(d.name);
  }
  for (const auto& [name, kind] : w.targets) {
    if (kind == Kind::kDomain) continue;
    members[kTargetAttr.at(kind)].push_back(name);
    members["file_type"].push_back(name);
    if (kind == Kind::kSensitive) members["data_file_type"].push_back(name);
  }
  for (const auto& [a, list] : members) {
    cil << "(typeattributeset " << a << " (";
    for (std::size_t i = 0; i < list.size(); ++i) cil << (i ? " " : "") << list[i];
    cil << "))\n";
  }
  for (int i = 1; i <= 5; ++i) cil << "(typeattribute base_typeattr_" << i << ")\n";
  cil << "(typeattributeset base_typeattr_1 (and (appdomain) (not (priv_app platform_app "
         "system_app))))\n"
         "(typeattributeset base_typeattr_2 (and (domain) (not (init vold))))\n"
         "(typeattributeset base_typeattr_3 (and (domain) (not (init))))\n"
         "(typeattributeset base_typeattr_4 (and (domain) (not (hal_audio_default))))\n"
         "(typeattributeset base_typeattr_5 (or (appdomain) (and (coredomain) (not (init)))))\n";

  for (const auto& d : w.domains) {
    if (!d.exec_path.empty()) {
      cil << "(typetransition init " << d.name << "_exec process " << d.name << ")\n";
    }
  }

  cil << "(allow appdomain app_data_file (file (read write open getattr create unlink)))\n"
         "(allow appdomain app_data_file (dir (search read open getattr write add_name "
         "remove_name)))\n"
         "(allow domain proc (file (read open getattr)))\n"
         "(allow coredomain sysfs (file (read open getattr)))\n"
         "(allow appdomain system_server (binder (call transfer)))\n"
         "(allow domain self (process (fork sigchld signal getattr)))\n"
         "(allow base_typeattr_5 gpu_device (chr_file (read write open ioctl)))\n";

  std::map<std::string, std::vector<Tuple>> rules_by_domain;
  for (const auto& d : w.domains) {
    for (int i = 0; i < cfg.rules_per_domain; ++i) {
      auto t = sample_rule(w, d, rng);
      if (!t) continue;
      std::vector<std::string> kept;
      for (const auto& p : t->perms) {
        if (!deprecated_keys.count({t->s, t->t, t->c, p})) kept.push_back(p);
      }
      if (kept.empty()) continue;
      t->perms = kept;
      cil << cil_rule("allow", t->s, t->t, t->c, t->perms);
      rules_by_domain[d.name].push_back(*t);
    }
  }

  cil << "(neverallow base_typeattr_1 sensitive_data_type (file (write append create unlink "
         "rename setattr)))\n"
         "(neverallow base_typeattr_2 blk_dev_type (blk_file (read write open ioctl)))\n"
         "(neverallow untrusted_app_all proc_sensitive_type (file (read open getattr)))\n"
         "(neverallow base_typeattr_3 kernel (security (load_policy setenforce)))\n"
         "(neverallow base_typeattr_4 audio_device (chr_file (read write open ioctl)))\n";
  out.reference_cil = cil.str();

  ParseOptions ref_opts;
  ref_opts.source_name = "reference.cil";
  const PolicyDb ref_db = parse_cil(out.reference_cil, ref_opts);
  const AtomicSet ref_atomics = expand(ref_db);
  const AtomicSet ref_allow = with_label(ref_atomics, Op::kAllow);

  for (const auto& d : w.domains) {
    for (const auto& [t, kind] : w.targets) {
      for (const auto& pool : class_pools().at(kind)) {
        for (const auto& p : pool.perms) {
          if (w.forbidden(d.name, t, pool.cls, p)) {
            out.boundary.insert(AtomicRule{Ident(d.name), Ident(t), Ident(pool.cls), Ident(p),
                                           Op::kNeverallow});
          }
        }
      }
      if (t == "kernel") {
        for (const auto& p : kP4) {
          if (w.forbidden(d.name, t, "security", p)) {
            out.boundary.insert(
                AtomicRule{Ident(d.name), Ident(t), Ident("security"), Ident(p), Op::kNeverallow});
          }
        }
      }
    }
  }

  // --- history ---------------------------------------------------------------
  out.current_version = "10.0";
  out.history["10.0"] = ref_allow;
  {
    AtomicSet older;
    for (const auto& a : ref_allow) {
      if (rng.bernoulli(0.97)) older.insert(a);
    }
    for (const auto& t : deprecated) {
      for (const auto& p : t.perms) {
        older.insert(AtomicRule{Ident(t.s), Ident(t.t), Ident(t.c), Ident(p), Op::kAllow});
      }
    }
    out.history["9.0"] = std::move(older);
  }

  // --- Android tables --------------------------------------------------------
  {
    std::ostringstream fc, rc, seapp;
    fc << "# path\tcontext\n/system/bin/init u:object_r:init_exec:s0\n";
    for (const auto& d : w.domains) {
      if (d.exec_path.empty()) continue;
      std::string escaped;
      for (char c : d.exec_path) {
        if (c == '.' || c == '@') escaped += '\\';
        escaped += c;
      }
      fc << escaped << "\tu:object_r:" << d.name << "_exec:s0\n";
      rc << "service " << d.name << " " << d.exec_path << "\n    class main\n";
      rc << "    user " << d.user << "\n    group " << d.user << "\n\n";
    }
    fc << "/data/app(/.*)?\tu:object_r:app_data_file:s0\n";
    for (const auto& d : w.domains) {
      if (!d.app) continue;
      seapp << "user=" << d.seapp_user << " seinfo="
            << (d.privileged ? "platform" : "default") << " domain=" << d.name
            << " type=app_data_file levelFrom=user\n";
    }
    out.file_contexts = fc.str();
    out.rc = rc.str();
    out.seapp = seapp.str();
  }

  // --- comments ----------------------------------------------------------------
  {
    std::map<std::string, std::vector<Sentence>> by_unit;
    for (const auto& d : w.domains) {
      for (Op pol : {Op::kAllow, Op::kNeverallow}) {
        auto pool = pol == Op::kAllow ? allow_phrases(d) : never_phrases(d);
        rng.shuffle(pool);
        const std::size_t n = std::min<std::size_t>(pool.size(), 2 + rng.below(2));
        for (std::size_t i = 0; i < n; ++i) by_unit[d.name].push_back({d.name, pol, d.app, pool[i]});
      }
    }
    std::string conllu;
    for (const auto& [unit, sentences] : by_unit) {
      std::ostringstream te;
      te << "# Policy for the " << unit << " domain.\n\n";
      const auto& rules = rules_by_domain[unit];
      std::size_t next_rule = 0;
      for (const auto& s : sentences) {
        std::string text = sentence_text(s);
        text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
        te << "# " << text << ".\n";
        if (s.polarity == Op::kAllow) {
          if (next_rule < rules.size()) {
            const Tuple& t = rules[next_rule++];
            te << flat_rule(t.s, t.t, t.c, t.perms);
          } else {
            te << "allow " << unit << " proc:file { read open getattr };\n";
          }
        } else {
          te << "neverallow " << unit << " kernel:security load_policy;\n";
        }
        te << "\n";
      }
      out.te_files[unit + ".te"] = te.str();
    }
    // CoNLL-U follows sentence-file order: unit, then allow before neverallow.
    for (const auto& [unit, sentences] : by_unit) {
      for (Op pol : {Op::kAllow, Op::kNeverallow}) {
        for (const auto& s : sentences) {
          if (s.polarity == pol) conllu += sentence_conllu(s);
        }
      }
    }
    out.conllu = conllu;
  }

  // --- device images -----------------------------------------------------------
  PolicyDb allow_only = ref_db;
  allow_only.rules.erase(std::remove_if(allow_only.rules.begin(), allow_only.rules.end(),
                                        [](const PolicyRule& r) { return r.op != Op::kAllow; }),
                         allow_only.rules.end());
  const std::string reference_flat = to_flat_text(allow_only);
  const std::vector<std::string> manufacturers{"acme", "globex", "initech"};
  const std::vector<AtomicRule> boundary_list(out.boundary.begin(), out.boundary.end());

  for (int img = 0; img < cfg.images; ++img) {
    SynthImage image;
    image.name = "img" + std::to_string(img);
    image.version = img % 3 == 2 ? "9.0" : "10.0";
    image.manufacturer = manufacturers[img % manufacturers.size()];

    World dw = w;  // device world gains vendor domains
    std::ostringstream extra;
    extra << "\n# --- vendor customizations ---\n";
    for (int v = 0; v < cfg.vendor_domains_per_image; ++v) {
      Domain d;
      d.name = "vendor_" + image.name + "_hal_" + std::to_string(v);
      d.core = false;
      d.net = rng.bernoulli(0.5);
      d.vendor = true;
      d.user = "system";
      dw.add_domain(d);
      extra << "type " << d.name;
      for (const auto& a : dw.attributes_of(d)) extra << ", " << a;
      extra << ";\n";
    }

    std::set<std::tuple<std::string, std::string, std::string, std::string>> custom;
    auto add_tuple = [&](const Tuple& t) {
      std::vector<std::string> fresh;
      for (const auto& p : t.perms) {
        if (tuple_in(ref_allow, t.s, t.t, t.c, p) || custom.count({t.s, t.t, t.c, p})) continue;
        fresh.push_back(p);
      }
      if (fresh.empty()) return std::size_t{0};
      for (const auto& p : fresh) custom.insert({t.s, t.t, t.c, p});
      extra << flat_rule(t.s, t.t, t.c, fresh);
      return fresh.size();
    };

    std::size_t benign = 0;
    for (int guard = 0; benign < static_cast<std::size_t>(cfg.benign_per_image) && guard < 10000;
         ++guard) {
      const Domain& d = dw.domains[rng.below(dw.domains.size())];
      if (auto t = sample_rule(dw, d, rng)) benign += add_tuple(*t);
    }
    if (image.version != out.current_version) {
      for (const auto& t : deprecated) add_tuple(t);
    }
    std::size_t bad = 0;
    for (int guard = 0;
         bad < static_cast<std::size_t>(cfg.violations_per_image) && guard < 10000; ++guard) {
      const AtomicRule& a = boundary_list[rng.below(boundary_list.size())];
      if (a.subject == Ident("su")) continue;  // su gets its debug block below
      bad += add_tuple(Tuple{a.subject.str(), a.target.str(), a.cls.str(), {a.permission.str()}});
    }
    add_tuple(Tuple{"su", "block_device", "blk_file", {"read", "write"}});

    image.policy = reference_flat + extra.str();
    image.te_source =
        "# Vendor debugging helpers.\n"
        "userdebug_or_eng(`\n"
        "  allow su block_device:blk_file { read write };\n"
        "')\n";

    ParseOptions dopts;
    dopts.source_name = image.name + ".conf";
    const AtomicSet customized = diff(expand(parse_flat(image.policy, dopts)), ref_allow);
    for (const auto& a : customized) {
      if (a.label != Op::kAllow) continue;
      if (dw.forbidden(a.subject.str(), a.target.str(), a.cls.str(), a.permission.str())) {
        image.violations.insert(a);
      } else {
        image.benign.insert(a);
      }
    }
    out.images.push_back(std::move(image));
  }
  return out;
}

void write_synth(const SynthCorpus& c, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"", "te", "devices", "history", "truth", "work"}) {
    fs::create_directories(fs::path(dir) / sub, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + (fs::path(dir) / sub).string());
  }
  auto put = [&](const std::string& rel, const std::string& text) {
    write_file((fs::path(dir) / rel).string(), text);
  };
  put("reference.cil", c.reference_cil);
  for (const auto& [name, text] : c.te_files) put("te/" + name, text);
  put("comments.conllu", c.conllu);
  put("file_contexts", c.file_contexts);
  put("init.rc", c.rc);
  put("seapp_contexts", c.seapp);
  for (const auto& [version, atomics] : c.history) {
    put("history/" + version + ".jsonl", atomics_to_jsonl(atomics));
  }
  put("truth/boundary.jsonl", atomics_to_jsonl(c.boundary));

  nlohmann::ordered_json manifest;
  manifest["reference"] = "reference.cil";
  manifest["current_version"] = c.current_version;
  manifest["images"] = nlohmann::ordered_json::array();
  for (const auto& im : c.images) {
    fs::create_directories(fs::path(dir) / "devices" / (im.name + "_te"), ec);
    put("devices/" + im.name + ".conf", im.policy);
    put("devices/" + im.name + "_te/vendor.te", im.te_source);
    put("truth/" + im.name + ".violations.jsonl", atomics_to_jsonl(im.violations));
    put("truth/" + im.name + ".benign.jsonl", atomics_to_jsonl(im.benign));
    manifest["images"].push_back({{"image", im.name},
                                  {"version", im.version},
                                  {"manufacturer", im.manufacturer},
                                  {"policy", "devices/" + im.name + ".conf"},
                                  {"te", "devices/" + im.name + "_te"},
                                  {"customized", "work/" + im.name + ".custom.jsonl"},
                                  {"findings", "work/" + im.name + ".findings.jsonl"}});
  }
  put("manifest.json", manifest.dump(1) + "\n");
}

}  // namespace sepal
