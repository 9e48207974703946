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


#include <string>
#include <vector>

#include "atomic_engine.hpp"
#include "doctest.h"
#include "errors.hpp"
#include "parsers.hpp"
#include "pipeline.hpp"
#include "test_util.hpp"

using namespace sepal;
using sepal_test::fixture;

TEST_CASE("cil: single allow with six permissions") {
  const PolicyDb db = parse_cil(
      "(allow base_typeattr_97 app_data_file (file (getattr open read ioctl lock map)))");
  REQUIRE(db.rules.size() == 1);
  const PolicyRule& r = db.rules[0];
  CHECK(r.op == Op::kAllow);
  CHECK(r.subject == SetExpr::named("base_typeattr_97"));
  CHECK(r.target == SetExpr::named("app_data_file"));
  CHECK(r.cls == Ident("file"));
  CHECK(r.permissions.size() == 6);
  CHECK(r.origin.line == 1);
}

TEST_CASE("cil: unparenthesized not in a membership") {
  const PolicyDb db = parse_cil(
      "(typeattributeset base_typeattr_293 (and (appdomain) not (shell con_monitor_app)))");
  const SetExpr want = SetExpr::conj(
      {SetExpr::named("appdomain"),
       SetExpr::negate(SetExpr::disj({SetExpr::named("shell"), SetExpr::named("con_monitor_app")}))});
  REQUIRE(db.memberships.count("base_typeattr_293"));
  CHECK(db.memberships.at("base_typeattr_293") == want);
}

TEST_CASE("cil: empty input, unknown forms, errors") {
  const PolicyDb empty = parse_cil("");
  CHECK(empty.rules.empty());
  CHECK(empty.types.empty());
  const PolicyDb skipped = parse_cil("(type a)(roletype object_r a)(mlsconstrain x y)");
  CHECK(skipped.skipped_forms == 2);
  CHECK_THROWS_AS(parse_cil("(allow a b (file (read))"), SyntaxError);
  CHECK_THROWS_AS(parse_cil("(type a)(allow a a (file ()))"), SyntaxError);
  try {
    parse_cil("(type a)\n(allow a a (file ()))");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("cil: blocks flatten with dots") {
  const PolicyDb db = parse_cil("(block vnd (type foo) (allow foo foo (file (read))))");
  CHECK(db.is_type("vnd.foo"));
  REQUIRE(db.rules.size() == 1);
  CHECK(db.rules[0].subject == SetExpr::named("vnd.foo"));
}

TEST_CASE("flat: statements and permission sets") {
  const PolicyDb a =
      parse_flat("allow untrusted_app app_data_file: file getattr open read ioctl lock map;");
  REQUIRE(a.rules.size() == 1);
  CHECK(a.rules[0].permissions.size() == 6);
  const PolicyDb b = parse_flat("allow init kernel:security load_policy;");
  REQUIRE(b.rules.size() == 1);
  CHECK(b.rules[0].permissions == std::set<Ident>{"load_policy"});
  const PolicyDb c = parse_flat("allow a b:c { p q };\nneverallow a b:c r;");
  REQUIRE(c.rules.size() == 2);
  CHECK(c.rules[1].op == Op::kNeverallow);
  CHECK(c.rules[1].origin.line == 2);
  CHECK_THROWS_AS(parse_flat("allow a b:c {};"), SyntaxError);
  CHECK_THROWS_AS(parse_flat("allow a b c;"), SyntaxError);
}

TEST_CASE("flat: star expands through the class table") {
  ClassPermTable table = ClassPermTable::parse("chr_file read write ioctl\n");
  ParseOptions opts;
  opts.class_perms = &table;
  const PolicyDb db = parse_flat("allow a b:chr_file *;", opts);
  REQUIRE(db.rules.size() == 1);
  CHECK(db.rules[0].permissions == std::set<Ident>{"ioctl", "read", "write"});
}

TEST_CASE("flat text round trip preserves the expansion") {
  for (const char* name : {"policy/aosp_like.cil", "policy/app_data_negated.cil",
                           "policy/base_typeattr_293.cil", "uid/mediadrm.cil"}) {
    CAPTURE(name);
    const PolicyDb db = parse_cil(fixture(name));
    const PolicyDb again = parse_flat(to_flat_text(db));
    CHECK(expand(db) == expand(again));
  }
}

TEST_CASE("te comments: routing by polarity") {
  const auto docs = parse_te_comments(
      "# Allow apps to send dump information to dumpstate:\nallow appdomain dumpstate:fd use;",
      "app");
  REQUIRE(docs.allow.sentences.size() == 1);
  CHECK(docs.allow.sentences[0] == "allow apps to send dump information to dumpstate");
  CHECK(docs.neverallow.sentences.empty());

  const auto nev = parse_te_comments(
      "# Only audio HAL may access the audio hardware\n"
      "neverallow { halserverdomain -hal_audio_server} audio_device:chr_file *;",
      "hal_audio");
  REQUIRE(nev.neverallow.sentences.size() == 1);
  CHECK(nev.neverallow.sentences[0] == "only audio hal may access the audio hardware");
  CHECK(nev.allow.sentences.empty());

  const auto none = parse_te_comments("allow a b:c d;\n", "a");
  CHECK(none.allow.sentences.empty());
  CHECK(none.neverallow.sentences.empty());
}

TEST_CASE("te comments: every block lands in exactly one doc") {
  const std::string te =
      "# First block. Two sentences\n"
      "allow a b:c d;\n"
      "\n"
      "# Never do this\n"
      "neverallow a b:c e;\n"
      "# Debug only\n"
      "userdebug_or_eng(`\n"
      "  allow a b:c f;\n"
      "')\n";
  const auto docs = parse_te_comments(te, "a");
  CHECK(docs.allow.sentences ==
        std::vector<std::string>{"first block", "two sentences", "debug only"});
  CHECK(docs.neverallow.sentences == std::vector<std::string>{"never do this"});
}

TEST_CASE("comment sentences are lowercased ascii") {
  CHECK(split_comment_sentences("Caf\xc3\xa9 Open. Read:Write\nX") ==
        std::vector<std::string>{"caf open", "read", "write", "x"});
}

TEST_CASE("sentence file round trip") {
  std::vector<CommentDoc> docs(2);
  docs[0].unit = "app";
  docs[0].sentences = {"allow apps to read", "second"};
  docs[1].unit = "app";
  docs[1].polarity = Op::kNeverallow;
  docs[1].sentences = {"never write"};
  const auto back = read_sentence_file(write_sentence_file(docs));
  REQUIRE(back.size() == 2);
  CHECK(back[0].unit == Ident("app"));
  CHECK(back[0].sentences == docs[0].sentences);
  CHECK(back[1].polarity == Op::kNeverallow);
  CHECK(back[1].sentences == docs[1].sentences);
}

TEST_CASE("debug statements inside userdebug_or_eng") {
  const auto st = scan_debug_statements(fixture("report/te/su.te"));
  REQUIRE(st.size() == 2);
  CHECK(st[0].macro == "userdebug_or_eng");
  CHECK(st[0].subjects == std::vector<std::string>{"su"});
  CHECK(st[1].targets == std::vector<std::string>{"domain"});
  CHECK(st[1].permissions == std::vector<std::string>{"*"});
  const auto shell = scan_debug_statements(fixture("report/te/shell.te"));
  REQUIRE(shell.size() == 1);
  CHECK(shell[0].permissions == std::vector<std::string>{"syslog_read"});
}

TEST_CASE("android tables") {
  const auto fc = parse_file_contexts(
      "/system/bin/mediadrmserver u:object_r:mediadrmserver_exec:s0\n");
  REQUIRE(fc.entries.size() == 1);
  CHECK(fc.entries[0].path_pattern == "/system/bin/mediadrmserver");
  CHECK(fc.entries[0].label_type == Ident("mediadrmserver_exec"));
  CHECK(parse_file_contexts("").entries.empty());

  const auto rc = parse_rc("service mediadrm /system/bin/mediadrmserver\n    user media\n");
  REQUIRE(rc.entries.size() == 1);
  CHECK(rc.entries[0].service_name == "mediadrm");
  CHECK(rc.entries[0].executable_path == "/system/bin/mediadrmserver");
  CHECK(rc.entries[0].user == "media");
  CHECK(parse_rc("").entries.empty());

  const auto seapp = parse_seapp("user=_app seinfo=platform domain=platform_app type=app_data_file\n");
  REQUIRE(seapp.entries.size() == 1);
  CHECK(seapp.entries[0].domain == Ident("platform_app"));
  CHECK(seapp.entries[0].assigned_user_class == "_app");

  const auto fixture_fc = parse_file_contexts(fixture("uid/file_contexts"));
  CHECK(fixture_fc.skipped == 1);
  for (const auto& e : fixture_fc.entries) CHECK_FALSE(e.path_pattern.empty());
  for (const auto& e : parse_rc(fixture("uid/mediadrmserver.rc")).entries)
    CHECK(e.executable_path.front() == '/');
}

TEST_CASE("policy files merge in order and keep their origins") {
  ParseOptions opts;
  const PolicyDb db = parse_policy_files(
      {sepal_test::fixture_path("policy/app_data.cil"),
       sepal_test::fixture_path("policy/base_typeattr_293.cil")},
      PolicyFormat::kCil, opts);
  REQUIRE(db.rules.size() == 2);
  CHECK(db.rules[0].origin.file.find("app_data.cil") != std::string::npos);
  CHECK(db.rules[1].origin.file.find("base_typeattr_293.cil") != std::string::npos);
}
