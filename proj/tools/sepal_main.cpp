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

// sepal command-line driver. Everything goes through the C API.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sepal/sepal.h"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kOther = 1, kParse = 2, kMissing = 3, kDegenerate = 4 };

struct Failure {
  int code;
  std::string message;
};

int exit_code(sepal_status s) {
  switch (s) {
    case SEPAL_OK:
      return kOk;
    case SEPAL_ERR_PARSE:
    case SEPAL_ERR_UNKNOWN_NAME:
    case SEPAL_ERR_MALFORMED_TREE:
      return kParse;
    case SEPAL_ERR_IO:
      return kMissing;
    case SEPAL_ERR_DEGENERATE:
    case SEPAL_ERR_EMPTY_CORPUS:
      return kDegenerate;
    default:
      return kOther;
  }
}

void check(sepal_status s) {
  if (s != SEPAL_OK) {
    throw Failure{exit_code(s), std::string(sepal_status_name(s)) + ": " + sepal_last_error()};
  }
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    std::swap(p, o.p);
    return *this;
  }
  ~Handle() {
    if (p) Free(p);
  }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Policy = Handle<sepal_policy, sepal_policy_free>;
using Atomics = Handle<sepal_atomics, sepal_atomics_free>;
using UidMap = Handle<sepal_uidmap, sepal_uidmap_free>;
using DocVecs = Handle<sepal_docvecs, sepal_docvecs_free>;
using ModelH = Handle<sepal_model, sepal_model_free>;
using Findings = Handle<sepal_findings, sepal_findings_free>;

// Takes ownership of a malloc'd string from the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  sepal_free(s);
  return out;
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), {});
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kMissing, "missing file: " + path};
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_output(const std::string& path, const std::string& data) {
  if (path.empty() || path == "-") {
    std::cout.write(data.data(), static_cast<std::streamsize>(data.size()));
    std::cout.flush();
    return;
  }
  const fs::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{kMissing, "cannot write: " + path};
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Failure{kOther, "write failed: " + path};
}

void require_file(const std::string& path) {
  if (path != "-" && !fs::exists(path)) throw Failure{kMissing, "missing file: " + path};
}

Atomics load_atomics(const std::string& path) {
  const std::string text = read_input(path);
  Atomics a;
  check(sepal_atomics_from_jsonl(text.data(), text.size(), a.out()));
  return a;
}

Policy load_policy(const std::string& path) {
  require_file(path);
  Policy p;
  check(sepal_policy_load_any(path.c_str(), p.out()));
  return p;
}

Atomics allow_only(const Atomics& a) {
  Atomics out;
  check(sepal_atomics_allow(a.get(), out.out()));
  return out;
}

// Regular files under `dir` matching `ext`, sorted for determinism.
std::vector<fs::path> files_under(const std::string& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw Failure{kMissing, "missing directory: " + dir};
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string optional_file(const std::string& path) {
  if (path.empty()) return {};
  return read_input(path);
}

// ---------------------------------------------------------------------------

struct Globals {
  int jobs = 1;
  std::string data_dir;
};

struct ParseArgs {
  std::string format;
  std::vector<std::string> inputs;
  std::string out = "-";
  bool strict = false;
};

void run_parse(const ParseArgs& a) {
  if (a.format == "cil" || a.format == "flat") {
    Policy p;
    if (a.inputs.size() == 1 && a.inputs[0] == "-") {
      const std::string text = read_input("-");
      check(sepal_policy_parse(text.data(), text.size(), a.format.c_str(), "<stdin>", a.strict,
                               p.out()));
    } else {
      std::vector<const char*> paths;
      for (const auto& i : a.inputs) {
        require_file(i);
        paths.push_back(i.c_str());
      }
      check(sepal_policy_load(paths.data(), paths.size(), a.format.c_str(), a.strict, p.out()));
    }
    char* json = nullptr;
    check(sepal_policy_to_json(p.get(), &json));
    write_output(a.out, take(json));
    if (const size_t w = sepal_policy_warning_count(p.get())) {
      std::cerr << "warnings: " << w << "\n";
    }
    return;
  }
  if (a.format == "te-comments") {
    std::vector<std::string> units, texts;
    for (const auto& in : a.inputs) {
      std::vector<fs::path> files;
      if (fs::is_directory(in)) {
        files = files_under(in, ".te");
      } else {
        files.push_back(in);
      }
      for (const auto& f : files) {
        units.push_back(f.stem().string());
        texts.push_back(read_input(f.string()));
      }
    }
    std::vector<const char*> u, t;
    for (std::size_t i = 0; i < units.size(); ++i) {
      u.push_back(units[i].c_str());
      t.push_back(texts[i].c_str());
    }
    char* out = nullptr;
    check(sepal_te_comments(u.data(), t.data(), u.size(), &out));
    write_output(a.out, take(out));
    return;
  }
  std::string text;
  for (const auto& in : a.inputs) text += read_input(in);
  char* out = nullptr;
  size_t skipped = 0;
  check(sepal_table_to_json(a.format.c_str(), text.data(), text.size(), &out, &skipped));
  write_output(a.out, take(out));
  if (skipped) std::cerr << "skipped lines: " << skipped << "\n";
}

struct ExpandArgs {
  std::string db;
  std::string out = "-";
  std::string augment_cap = "none";
};

void run_expand(const ExpandArgs& a, const Globals& g) {
  Policy p = load_policy(a.db);
  Atomics atoms;
  if (a.augment_cap == "none") {
    check(sepal_expand(p.get(), g.jobs, atoms.out()));
  } else {
    long long cap = -1;
    if (a.augment_cap != "balance") {
      try {
        std::size_t pos = 0;
        cap = std::stoll(a.augment_cap, &pos);
        if (pos != a.augment_cap.size() || cap < 0) throw std::invalid_argument("cap");
      } catch (const std::exception&) {
        throw Failure{kOther, "--augment-cap expects a count, 'balance' or 'none'"};
      }
    }
    size_t added = 0;
    check(sepal_training_set(p.get(), cap, g.jobs, atoms.out(), &added));
    std::cerr << "augmented: " << added << "\n";
  }
  char* out = nullptr;
  check(sepal_atomics_to_jsonl(atoms.get(), &out));
  write_output(a.out, take(out));
}

struct DiffArgs {
  std::string device, reference, out = "-";
};

void run_diff(const DiffArgs& a) {
  Atomics dev = allow_only(load_atomics(a.device));
  Atomics ref = allow_only(load_atomics(a.reference));
  Atomics d;
  check(sepal_diff(dev.get(), ref.get(), d.out()));
  char* out = nullptr;
  check(sepal_atomics_to_jsonl(d.get(), &out));
  write_output(a.out, take(out));
}

struct UidArgs {
  std::string db, fc, rc, seapp, aid, out = "-";
};

void run_uid(const UidArgs& a) {
  Policy p = load_policy(a.db);
  const std::string fc = optional_file(a.fc), rc = optional_file(a.rc),
                    seapp = optional_file(a.seapp);
  std::string aid = a.aid;
  if (aid.empty()) {
    const std::string bundled = std::string(sepal_data_dir()) + "/aid_map.tsv";
    if (fs::exists(bundled)) aid = bundled;
  }
  const std::string aid_text = optional_file(aid);
  UidMap m;
  size_t warnings = 0;
  check(sepal_uid_infer(p.get(), fc.c_str(), rc.c_str(), seapp.c_str(),
                        aid.empty() ? nullptr : aid_text.c_str(), m.out(), &warnings));
  if (warnings) std::cerr << "warnings: " << warnings << "\n";
  char* out = nullptr;
  check(sepal_uidmap_to_tsv(m.get(), &out));
  write_output(a.out, take(out));
}

struct CommentsArgs {
  std::string conllu, corpus, out = "-";
  sepal_embed_config config{};
};

void run_comments(const CommentsArgs& a) {
  const std::string text = read_input(a.conllu);
  if (!a.corpus.empty() && !fs::is_directory(a.corpus)) {
    throw Failure{kMissing, "missing directory: " + a.corpus};
  }
  DocVecs v;
  double before = 0, after = 0;
  check(sepal_comments_embed(text.data(), text.size(), a.corpus.empty() ? nullptr : a.corpus.c_str(),
                             &a.config, v.out(), &before, &after));
  std::fprintf(stderr, "docs: %zu loss: %.6f -> %.6f\n", sepal_docvecs_count(v.get()), before,
               after);
  char* out = nullptr;
  check(sepal_docvecs_to_text(v.get(), &out));
  write_output(a.out, take(out));
}

struct TrainArgs {
  std::string atomics, db, vecs, uid, out, examples;
  sepal_train_config config{};
};

void run_train(const TrainArgs& a) {
  Atomics train = load_atomics(a.atomics);
  Policy ref = load_policy(a.db);
  UidMap uids;
  DocVecs vecs;
  if (!a.uid.empty()) {
    const std::string t = read_input(a.uid);
    check(sepal_uidmap_from_tsv(t.data(), t.size(), uids.out()));
  }
  if (!a.vecs.empty()) {
    const std::string t = read_input(a.vecs);
    check(sepal_docvecs_from_text(t.data(), t.size(), vecs.out()));
  }
  ModelH m;
  sepal_metrics heldout{};
  check(sepal_train(train.get(), ref.get(), uids.get(), vecs.get(), &a.config, m.out(), &heldout));
  std::printf("heldout n=%zu accuracy=%.4f precision=%.4f recall=%.4f\n", heldout.n,
              heldout.accuracy, heldout.precision, heldout.recall);
  unsigned char* buf = nullptr;
  size_t len = 0;
  check(sepal_model_to_binary(m.get(), &buf, &len));
  std::string bin(reinterpret_cast<char*>(buf), len);
  sepal_free(buf);
  write_output(a.out, bin);
  if (!a.examples.empty()) {
    check(sepal_encode_examples(m.get(), train.get(), &buf, &len));
    std::string ex(reinterpret_cast<char*>(buf), len);
    sepal_free(buf);
    write_output(a.examples, ex);
  }
}

ModelH load_model(const std::string& path) {
  const std::string bin = read_input(path);
  ModelH m;
  check(sepal_model_from_binary(reinterpret_cast<const unsigned char*>(bin.data()), bin.size(),
                                m.out()));
  return m;
}

struct ClassifyArgs {
  std::string model, custom, db, image, out = "-";
};

void run_classify(const ClassifyArgs& a) {
  ModelH m = load_model(a.model);
  Atomics custom = load_atomics(a.custom);
  Policy dev;
  if (!a.db.empty()) dev = load_policy(a.db);
  Findings f;
  check(sepal_classify(m.get(), custom.get(), dev.get(), a.image.c_str(), f.out()));
  std::cerr << "flagged: " << sepal_findings_size(f.get()) << " of "
            << sepal_atomics_size(custom.get()) << "\n";
  char* out = nullptr;
  check(sepal_findings_to_jsonl(f.get(), &out));
  write_output(a.out, take(out));
}

struct BaselineArgs {
  std::string train, custom, out = "-";
  size_t m = 10;
  double sigma = 0.55;
  bool score = false;
};

void run_baseline(const BaselineArgs& a) {
  Atomics train = load_atomics(a.train);
  Atomics custom = load_atomics(a.custom);
  char* out = nullptr;
  sepal_baseline_summary s{};
  check(sepal_baseline(train.get(), custom.get(), a.m, a.sigma, &out, a.score ? &s : nullptr));
  const std::string lines = take(out);
  std::size_t counts[3] = {0, 0, 0};
  std::istringstream in(lines);
  for (std::string line; std::getline(in, line);) {
    const auto v = nlohmann::json::parse(line).value("verdict", "");
    counts[v == "allow" ? 0 : v == "neverallow" ? 1 : 2]++;
  }
  std::printf("verdicts allow=%zu neverallow=%zu unclassified=%zu\n", counts[0], counts[1],
              counts[2]);
  if (a.score) {
    std::printf("accuracy_all=%.4f accuracy_classified=%.4f unclassified=%zu total=%zu\n",
                s.accuracy_all, s.accuracy_classified, s.unclassified, s.total);
  }
  write_output(a.out, lines);
}

struct ReportArgs {
  std::string findings, db, te, history, out = "-", stats, manifest, custom;
  std::string image, version, manufacturer;
  size_t coarse_threshold = 20;
};

std::size_t count_allow_lines(const std::string& path) {
  Atomics a = allow_only(load_atomics(path));
  return sepal_atomics_size(a.get());
}

std::size_t count_lines(const std::string& path) {
  const std::string t = read_input(path);
  std::size_t n = 0;
  std::istringstream in(t);
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) ++n;
  }
  return n;
}

void run_report(const ReportArgs& a) {
  const std::string text = read_input(a.findings);
  Findings f;
  check(sepal_findings_from_jsonl(text.data(), text.size(), f.out()));
  Policy db;
  if (!a.db.empty()) db = load_policy(a.db);

  std::vector<std::string> te_names, te_texts;
  if (!a.te.empty()) {
    for (const auto& p : files_under(a.te, ".te")) {
      te_names.push_back(fs::relative(p, a.te).string());
      te_texts.push_back(read_input(p.string()));
    }
  }
  std::vector<std::string> versions;
  std::vector<Atomics> history;
  if (!a.history.empty()) {
    for (const auto& p : files_under(a.history, ".jsonl")) {
      versions.push_back(p.stem().string());
      history.push_back(load_atomics(p.string()));
    }
  }
  std::vector<const char*> tn, tt, vn;
  std::vector<const sepal_atomics*> hs;
  for (std::size_t i = 0; i < te_names.size(); ++i) {
    tn.push_back(te_names[i].c_str());
    tt.push_back(te_texts[i].c_str());
  }
  for (std::size_t i = 0; i < versions.size(); ++i) {
    vn.push_back(versions[i].c_str());
    hs.push_back(history[i].get());
  }
  check(sepal_categorize(f.get(), db.get(), tn.data(), tt.data(), tn.size(), vn.data(),
                         hs.data(), hs.size(), a.coarse_threshold));
  char* out = nullptr;
  check(sepal_findings_to_jsonl(f.get(), &out));
  write_output(a.out, take(out));

  if (a.stats.empty()) return;
  std::vector<std::string> keep;  // backing storage for the C strings
  std::vector<sepal_image_counts> images;
  if (!a.manifest.empty()) {
    const auto m = nlohmann::json::parse(read_input(a.manifest));
    const fs::path base = fs::path(a.manifest).parent_path();
    keep.reserve(3 * m.at("images").size());
    for (const auto& im : m.at("images")) {
      sepal_image_counts c{};
      keep.push_back(im.at("image").get<std::string>());
      c.image = keep.back().c_str();
      keep.push_back(im.value("version", ""));
      c.version = keep.back().c_str();
      keep.push_back(im.value("manufacturer", ""));
      c.manufacturer = keep.back().c_str();
      c.customized = count_allow_lines((base / im.at("customized").get<std::string>()).string());
      c.flagged = count_lines((base / im.at("findings").get<std::string>()).string());
      images.push_back(c);
    }
  } else {
    if (a.custom.empty()) throw Failure{kOther, "--stats needs --manifest or --custom"};
    sepal_image_counts c{};
    c.image = a.image.empty() ? "image" : a.image.c_str();
    c.version = a.version.c_str();
    c.manufacturer = a.manufacturer.c_str();
    c.customized = count_allow_lines(a.custom);
    c.flagged = sepal_findings_size(f.get());
    images.push_back(c);
  }
  char* csv = nullptr;
  check(sepal_stats_csv(images.data(), images.size(), &csv));
  write_output(a.stats, take(csv));
}

struct SynthArgs {
  std::string out;
  sepal_synth_config config{};
};

void run_synth(const SynthArgs& a) {
  check(sepal_synth(&a.config, a.out.c_str()));
  std::cerr << "wrote " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sepal: SEAndroid policy analysis"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file mirroring the flags; flags override it");
  app.set_version_flag("--version", std::string(sepal_version()));

  Globals g;
  app.add_option("--jobs,-j", g.jobs, "Parallel workers for parsing and expansion")
      ->check(CLI::PositiveNumber);
  app.add_option("--data-dir", g.data_dir, "Bundled data directory (default: $SEPAL_DATA_DIR)");

  ParseArgs pa;
  auto* parse = app.add_subcommand("parse", "Parse policy sources or Android tables");
  parse->add_option("--format", pa.format, "Input format")
      ->required()
      ->check(CLI::IsMember({"cil", "flat", "te-comments", "file-contexts", "rc", "seapp"}));
  parse->add_option("inputs", pa.inputs, "Input files ('-' for stdin)")->required();
  parse->add_option("--out,-o", pa.out, "Output file");
  parse->add_flag("--strict", pa.strict, "Reject undeclared names");

  ExpandArgs ea;
  auto* expand = app.add_subcommand("expand", "Expand a policy into atomic rules");
  expand->add_option("--db", ea.db, "Policy JSON or source")->required();
  expand->add_option("--out,-o", ea.out, "Output JSONL");
  expand->add_option("--augment-cap", ea.augment_cap,
                     "Augmentation from negated neverallow subjects: none, balance or a count");

  DiffArgs da;
  auto* diff = app.add_subcommand("diff", "Remove reference atomics from device atomics");
  diff->add_option("--device", da.device, "Device atomics JSONL")->required();
  diff->add_option("--reference", da.reference, "Reference atomics JSONL")->required();
  diff->add_option("--out,-o", da.out, "Output JSONL");

  UidArgs ua;
  auto* uid = app.add_subcommand("uid", "Infer the Linux user bucket of each domain");
  uid->add_option("--db", ua.db, "Policy JSON or source")->required();
  uid->add_option("--fc", ua.fc, "file_contexts");
  uid->add_option("--rc", ua.rc, "init rc file");
  uid->add_option("--seapp", ua.seapp, "seapp_contexts");
  uid->add_option("--aid", ua.aid, "User to bucket table (default: bundled aid_map.tsv)");
  uid->add_option("--out,-o", ua.out, "Output TSV");

  CommentsArgs ca;
  sepal_embed_config_default(&ca.config);
  auto* comments = app.add_subcommand("comments", "Embed parsed policy comments");
  comments->add_option("--conllu", ca.conllu, "CoNLL-U parses of the sentence file")->required();
  comments->add_option("--corpus", ca.corpus, "Keyword corpus directory");
  comments->add_option("--out,-o", ca.out, "Output vectors");
  comments->add_option("--dim", ca.config.dim, "Vector dimension")->capture_default_str();
  comments->add_option("--seed", ca.config.seed, "Random seed")->capture_default_str();
  comments->add_option("--epochs", ca.config.epochs, "Training epochs")->capture_default_str();
  comments->add_option("--negative", ca.config.negative, "Negative samples")
      ->capture_default_str();
  comments->add_option("--lr", ca.config.learning_rate, "Initial learning rate")
      ->capture_default_str();

  TrainArgs ta;
  sepal_train_config_default(&ta.config);
  auto* train = app.add_subcommand("train", "Train the wide and deep classifier");
  train->add_option("--atomics", ta.atomics, "Labeled reference atomics JSONL")->required();
  train->add_option("--db", ta.db, "Reference policy (type attributes)")->required();
  train->add_option("--vecs", ta.vecs, "Comment vectors");
  train->add_option("--uid", ta.uid, "UID map TSV");
  train->add_option("--out,-o", ta.out, "Model file")->required();
  train->add_option("--examples", ta.examples, "Also write encoded examples (SEPF)");
  train->add_option("--seed", ta.config.seed, "Random seed")->capture_default_str();
  train->add_option("--test-frac", ta.config.test_fraction, "Held-out fraction")
      ->capture_default_str();
  train->add_option("--epochs", ta.config.epochs, "Epochs")->capture_default_str();
  train->add_option("--batch", ta.config.batch_size, "Mini-batch size")->capture_default_str();
  train->add_option("--wide-lr", ta.config.wide_lr, "Wide learning rate")->capture_default_str();
  train->add_option("--deep-lr", ta.config.deep_lr, "Deep learning rate")->capture_default_str();
  train->add_option("--threshold", ta.config.threshold, "Allow threshold")->capture_default_str();
  train->add_option("--hash-buckets", ta.config.hash_buckets, "Cross feature buckets")
      ->capture_default_str();

  ClassifyArgs cla;
  auto* classify = app.add_subcommand("classify", "Flag customized rules predicted neverallow");
  classify->add_option("--model", cla.model, "Model file")->required();
  classify->add_option("--custom", cla.custom, "Customized atomics JSONL")->required();
  classify->add_option("--db", cla.db, "Device policy (types of vendor domains)");
  classify->add_option("--image", cla.image, "Image name recorded in findings");
  classify->add_option("--out,-o", cla.out, "Findings JSONL");

  BaselineArgs ba;
  auto* baseline = app.add_subcommand("baseline", "Nearest-neighbour baseline classifier");
  baseline->add_option("--train", ba.train, "Labeled reference atomics JSONL")->required();
  baseline->add_option("--custom", ba.custom, "Atomics to classify")->required();
  baseline->add_option("--m", ba.m, "Minimum neighbour count")->capture_default_str();
  baseline->add_option("--sigma", ba.sigma, "Majority threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  baseline->add_option("--out,-o", ba.out, "Verdicts JSONL");
  baseline->add_flag("--score", ba.score, "Score verdicts against the input labels");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Categorize findings and compute statistics");
  report->add_option("--findings", ra.findings, "Findings JSONL")->required();
  report->add_option("--db", ra.db, "Device policy");
  report->add_option("--te", ra.te, "Directory of device TE sources");
  report->add_option("--history", ra.history, "Directory of <version>.jsonl reference atomics");
  report->add_option("--out,-o", ra.out, "Categorized findings JSONL");
  report->add_option("--stats", ra.stats, "Statistics CSV");
  report->add_option("--manifest", ra.manifest, "Corpus manifest for statistics");
  report->add_option("--custom", ra.custom, "Customized atomics of this image for statistics");
  report->add_option("--image", ra.image, "Image name for statistics");
  report->add_option("--image-version", ra.version, "Android version for statistics");
  report->add_option("--manufacturer", ra.manufacturer, "Manufacturer for statistics");
  report->add_option("--coarse-threshold", ra.coarse_threshold,
                     "Resolved set size above which an attribute is coarse")
      ->capture_default_str();

  SynthArgs sa;
  sepal_synth_config_default(&sa.config);
  auto* synth = app.add_subcommand("synth", "Write the planted synthetic corpus");
  synth->add_option("--seed", sa.config.seed, "Random seed")->capture_default_str();
  synth->add_option("--out,-o", sa.out, "Output directory")->required();
  synth->add_option("--images", sa.config.images, "Device images")->capture_default_str();
  synth->add_option("--extra-apps", sa.config.extra_apps, "Extra app domains")
      ->capture_default_str();
  synth->add_option("--extra-daemons", sa.config.extra_daemons, "Extra daemon domains")
      ->capture_default_str();
  synth->add_option("--rules-per-domain", sa.config.rules_per_domain, "Sampled rules per domain")
      ->capture_default_str();
  synth->add_option("--benign", sa.config.benign_per_image, "Benign customizations per image")
      ->capture_default_str();
  synth->add_option("--violations", sa.config.violations_per_image, "Violations per image")
      ->capture_default_str();
  synth->add_option("--vendor-domains", sa.config.vendor_domains_per_image,
                    "Vendor domains per image")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (!g.data_dir.empty()) sepal_set_data_dir(g.data_dir.c_str());
    if (*parse) run_parse(pa);
    if (*expand) run_expand(ea, g);
    if (*diff) run_diff(da);
    if (*uid) run_uid(ua);
    if (*comments) run_comments(ca);
    if (*train) run_train(ta);
    if (*classify) run_classify(cla);
    if (*baseline) run_baseline(ba);
    if (*report) run_report(ra);
    if (*synth) run_synth(sa);
  } catch (const Failure& f) {
    std::cerr << "sepal: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "sepal: " << e.what() << "\n";
    return kOther;
  }
  return kOk;
}
