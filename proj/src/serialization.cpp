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

#include "serialization.hpp"

#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "json.hpp"

namespace sepal {

using json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
}

namespace {

Ident json_ident(const json& j, const char* field, int line) {
  if (!j.contains(field) || !j[field].is_string()) {
    throw Error(ErrorCode::kFormat, "line " + std::to_string(line) +
                                        ": missing string field '" + field + "'");
  }
  const std::string s = j[field].get<std::string>();
  if (!is_valid_ident(s)) {
    throw Error(ErrorCode::kFormat,
                "line " + std::to_string(line) + ": invalid name '" + s + "'");
  }
  return Ident(s);
}

json expr_to_json(const SetExpr& e) {
  switch (e.kind) {
    case SetExpr::Kind::kName: return e.name.str();
    case SetExpr::Kind::kAll: return json::array({"all"});
    case SetExpr::Kind::kAnd:
    case SetExpr::Kind::kOr:
    case SetExpr::Kind::kNot: {
      json a = json::array();
      a.push_back(e.kind == SetExpr::Kind::kAnd  ? "and"
                  : e.kind == SetExpr::Kind::kOr ? "or"
                                                 : "not");
      for (const auto& c : e.children) a.push_back(expr_to_json(c));
      return a;
    }
  }
  return nullptr;
}

SetExpr expr_from_json(const json& j) {
  if (j.is_string()) return SetExpr::named(Ident(j.get<std::string>()));
  if (!j.is_array() || j.empty() || !j[0].is_string()) {
    throw Error(ErrorCode::kFormat, "bad set expression " + j.dump());
  }
  const std::string op = j[0].get<std::string>();
  if (op == "all") return SetExpr::all();
  std::vector<SetExpr> kids;
  for (std::size_t i = 1; i < j.size(); ++i) kids.push_back(expr_from_json(j[i]));
  if (op == "and") return SetExpr::conj(std::move(kids));
  if (op == "or") return SetExpr::disj(std::move(kids));
  if (op == "not" && kids.size() == 1) return SetExpr::negate(std::move(kids[0]));
  throw Error(ErrorCode::kFormat, "bad set expression " + j.dump());
}

}  // namespace

std::string atomics_to_jsonl(const AtomicSet& atomics, const SourceMap* sources) {
  std::string out;
  for (const auto& a : atomics) {
    json j;
    j["subject"] = a.subject.str();
    j["target"] = a.target.str();
    j["class"] = a.cls.str();
    j["permission"] = a.permission.str();
    j["label"] = op_name(a.label);
    std::string src;
    if (sources) {
      auto it = sources->find(a);
      if (it != sources->end()) src = it->second;
    }
    j["source"] = src;
    out += j.dump();
    out += '\n';
  }
  return out;
}

AtomicSet atomics_from_jsonl(std::string_view text, SourceMap* sources) {
  AtomicSet out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kFormat,
                  "line " + std::to_string(lineno) + ": " + e.what());
    }
    AtomicRule a;
    a.subject = json_ident(j, "subject", lineno);
    a.target = json_ident(j, "target", lineno);
    a.cls = json_ident(j, "class", lineno);
    a.permission = json_ident(j, "permission", lineno);
    auto label = j.contains("label") && j["label"].is_string()
                     ? parse_op(j["label"].get<std::string>())
                     : std::nullopt;
    if (!label) {
      throw Error(ErrorCode::kFormat, "line " + std::to_string(lineno) + ": bad label");
    }
    a.label = *label;
    if (sources && j.contains("source") && j["source"].is_string()) {
      std::string src = j["source"].get<std::string>();
      if (!src.empty()) sources->emplace(a, std::move(src));
    }
    out.insert(std::move(a));
  }
  return out;
}

std::string policy_to_json(const PolicyDb& db) {
  json j;
  j["format"] = "sepal-policydb";
  j["version"] = 1;
  j["types"] = json::array();
  for (const auto& t : db.types) j["types"].push_back(t.str());
  j["attributes"] = json::array();
  for (const auto& a : db.attributes) j["attributes"].push_back(a.str());
  j["memberships"] = json::object();
  for (const auto& [a, e] : db.memberships) j["memberships"][a.str()] = expr_to_json(e);
  j["classes"] = json::object();
  for (const auto& [c, perms] : db.classes) {
    json p = json::array();
    for (const auto& x : perms) p.push_back(x.str());
    j["classes"][c.str()] = p;
  }
  j["rules"] = json::array();
  for (const auto& r : db.rules) {
    json jr;
    jr["op"] = op_name(r.op);
    jr["subject"] = expr_to_json(r.subject);
    jr["target"] = expr_to_json(r.target);
    jr["class"] = r.cls.str();
    jr["permissions"] = json::array();
    for (const auto& p : r.permissions) jr["permissions"].push_back(p.str());
    jr["file"] = r.origin.file;
    jr["line"] = r.origin.line;
    j["rules"].push_back(jr);
  }
  j["transitions"] = json::array();
  for (const auto& t : db.transitions) {
    j["transitions"].push_back({{"source", t.source.str()},
                                {"exec_type", t.exec_type.str()},
                                {"class", t.cls.str()},
                                {"result", t.result.str()},
                                {"file", t.origin.file},
                                {"line", t.origin.line}});
  }
  j["warnings"] = db.warnings;
  j["skipped_forms"] = db.skipped_forms;
  return j.dump(1) + "\n";
}

PolicyDb policy_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kFormat, std::string("policy db: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "sepal-policydb") {
    throw Error(ErrorCode::kFormat, "not a sepal policy db");
  }
  PolicyDb db;
  try {
    for (const auto& t : j.at("types")) db.types.insert(Ident(t.get<std::string>()));
    for (const auto& a : j.at("attributes")) db.attributes.insert(Ident(a.get<std::string>()));
    for (const auto& [a, e] : j.at("memberships").items()) {
      db.memberships.emplace(Ident(a), expr_from_json(e));
    }
    for (const auto& [c, perms] : j.at("classes").items()) {
      auto& set = db.classes[Ident(c)];
      for (const auto& p : perms) set.insert(Ident(p.get<std::string>()));
    }
    for (const auto& jr : j.at("rules")) {
      PolicyRule r;
      auto op = parse_op(jr.at("op").get<std::string>());
      if (!op) throw Error(ErrorCode::kFormat, "bad rule op");
      r.op = *op;
      r.subject = expr_from_json(jr.at("subject"));
      r.target = expr_from_json(jr.at("target"));
      r.cls = Ident(jr.at("class").get<std::string>());
      for (const auto& p : jr.at("permissions")) r.permissions.insert(Ident(p.get<std::string>()));
      if (r.permissions.empty()) throw Error(ErrorCode::kFormat, "rule without permissions");
      r.origin = Origin{jr.value("file", ""), jr.value("line", 0)};
      db.rules.push_back(std::move(r));
    }
    for (const auto& jt : j.at("transitions")) {
      db.transitions.push_back(TypeTransition{
          Ident(jt.at("source").get<std::string>()),
          Ident(jt.at("exec_type").get<std::string>()),
          Ident(jt.at("class").get<std::string>()),
          Ident(jt.at("result").get<std::string>()),
          Origin{jt.value("file", ""), jt.value("line", 0)}});
    }
    if (j.contains("warnings")) db.warnings = j["warnings"].get<std::vector<std::string>>();
    db.skipped_forms = j.value("skipped_forms", std::size_t{0});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("policy db: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kFormat, std::string("policy db: ") + e.what());
  }
  return db;
}

std::string file_contexts_to_json(const TableResult<FileContextEntry>& t) {
  json j;
  j["format"] = "sepal-file-contexts";
  j["skipped"] = t.skipped;
  j["entries"] = json::array();
  for (const auto& e : t.entries) {
    j["entries"].push_back({{"path", e.path_pattern}, {"type", e.label_type.str()}});
  }
  return j.dump(1) + "\n";
}

std::string rc_to_json(const TableResult<RcServiceEntry>& t) {
  json j;
  j["format"] = "sepal-rc-services";
  j["skipped"] = t.skipped;
  j["entries"] = json::array();
  for (const auto& e : t.entries) {
    j["entries"].push_back(
        {{"service", e.service_name}, {"path", e.executable_path}, {"user", e.user}});
  }
  return j.dump(1) + "\n";
}

std::string seapp_to_json(const TableResult<SeappEntry>& t) {
  json j;
  j["format"] = "sepal-seapp";
  j["skipped"] = t.skipped;
  j["entries"] = json::array();
  for (const auto& e : t.entries) {
    json sel = json::object();
    for (const auto& [k, v] : e.selector) sel[k] = v;
    j["entries"].push_back(
        {{"domain", e.domain.str()}, {"user", e.assigned_user_class}, {"selector", sel}});
  }
  return j.dump(1) + "\n";
}

}  // namespace sepal
