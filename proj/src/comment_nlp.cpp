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

#include "comment_nlp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "errors.hpp"
#include "rng.hpp"
#include "serialization.hpp"

namespace sepal {

namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_columns(const std::string& line) {
  std::vector<std::string> cols;
  if (line.find('\t') != std::string::npos) {
    std::string cur;
    for (char c : line) {
      if (c == '\t') {
        cols.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    cols.push_back(cur);
  } else {
    std::istringstream in(line);
    std::string f;
    while (in >> f) cols.push_back(f);
  }
  return cols;
}

bool parse_int(const std::string& s, int& out) {
  if (s.empty() || s.size() > 9) return false;
  int v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

// "obl:tmod" -> "obl"
std::string base_rel(const std::string& deprel) {
  return deprel.substr(0, deprel.find(':'));
}

}  // namespace

std::vector<ParsedSentence> read_conllu(std::string_view text, const std::string& source) {
  std::vector<ParsedSentence> out;
  Ident unit;
  Op polarity = Op::kAllow;
  ParsedSentence cur;
  bool in_sentence = false;
  int lineno = 0;

  auto finish = [&] {
    if (!cur.tokens.empty()) {
      try {
        validate_tree(cur.tokens);
      } catch (const Error& e) {
        throw Error(ErrorCode::kMalformedTree,
                    source + ":" + std::to_string(lineno) + ": " + e.what());
      }
      cur.unit = unit;
      cur.polarity = polarity;
      out.push_back(std::move(cur));
    }
    cur = ParsedSentence{};
    in_sentence = false;
  };

  for (const std::string& raw : split_lines(text)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty()) {
      finish();
      continue;
    }
    if (line[0] == '#') {
      std::string body = trim(std::string_view(line).substr(1));
      auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      std::string key = trim(std::string_view(body).substr(0, eq));
      std::string value = trim(std::string_view(body).substr(eq + 1));
      if (key == "unit") {
        if (!is_valid_ident(value)) throw SyntaxError(source, lineno, 0, "bad unit '" + value + "'");
        if (in_sentence) finish();
        unit = Ident(value);
      } else if (key == "polarity") {
        auto op = parse_op(value);
        if (!op) throw SyntaxError(source, lineno, 0, "bad polarity '" + value + "'");
        if (in_sentence) finish();
        polarity = *op;
      } else if (key == "text") {
        cur.text = value;
      }
      continue;
    }
    std::vector<std::string> cols = split_columns(line);
    if (cols.size() != 10) {
      throw SyntaxError(source, lineno, 0,
                        "expected 10 columns, got " + std::to_string(cols.size()));
    }
    if (cols[0].find_first_of("-.") != std::string::npos) continue;
    DepToken t;
    if (!parse_int(cols[0], t.index) || t.index < 1) {
      throw SyntaxError(source, lineno, 1, "bad token id '" + cols[0] + "'");
    }
    if (!parse_int(cols[6], t.head)) {
      throw SyntaxError(source, lineno, 7, "bad head '" + cols[6] + "'");
    }
    t.form = cols[1];
    t.lemma = lower(cols[2] == "_" ? cols[1] : cols[2]);
    t.upos = cols[3];
    t.deprel = cols[7];
    cur.tokens.push_back(std::move(t));
    in_sentence = true;
  }
  finish();
  return out;
}

void validate_tree(const std::vector<DepToken>& s) {
  const int n = static_cast<int>(s.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    if (s[i].index != i + 1) {
      throw Error(ErrorCode::kMalformedTree, "token ids are not 1.." + std::to_string(n));
    }
    if (s[i].head < 0 || s[i].head > n) {
      throw Error(ErrorCode::kMalformedTree,
                  "token " + std::to_string(i + 1) + " has head out of range");
    }
    if (s[i].head == 0) ++roots;
  }
  if (roots != 1) {
    throw Error(ErrorCode::kMalformedTree,
                "sentence has " + std::to_string(roots) + " roots");
  }
  for (int i = 0; i < n; ++i) {
    int cur = i + 1, steps = 0;
    while (cur != 0) {
      if (++steps > n) throw Error(ErrorCode::kMalformedTree, "cycle in dependency tree");
      cur = s[cur - 1].head;
    }
  }
}

namespace {

void add_words(std::set<std::string>& into, std::string_view text) {
  for (const std::string& raw : split_lines(text)) {
    std::string line = raw.substr(0, raw.find('#'));
    std::istringstream in(line);
    std::string w;
    while (in >> w) into.insert(lower(w));
  }
}

}  // namespace

Corpus make_corpus(std::string_view actions, std::string_view resources,
                   std::string_view synonyms) {
  Corpus c;
  add_words(c.actions, actions);
  add_words(c.actions, synonyms);
  add_words(c.resources, resources);
  if (c.actions.empty() || c.resources.empty()) {
    throw Error(ErrorCode::kFormat, "action and resource corpora must both be non-empty");
  }
  return c;
}

Corpus load_corpus(const std::string& dir) {
  std::string synonyms;
  try {
    synonyms = read_file(dir + "/synonyms.txt");
  } catch (const Error&) {
    // optional
  }
  return make_corpus(read_file(dir + "/actions.txt"), read_file(dir + "/resources.txt"),
                     synonyms);
}

std::set<KeywordTriplet> extract_triplets(const std::vector<DepToken>& sentence,
                                          const Corpus& corpus) {
  validate_tree(sentence);
  const int n = static_cast<int>(sentence.size());
  auto tok = [&](int id) -> const DepToken& { return sentence[id - 1]; };

  std::vector<std::vector<int>> children(n + 1);
  for (const auto& t : sentence) children[t.head].push_back(t.index);

  auto has_case_to = [&](int id) {
    for (int c : children[id]) {
      const DepToken& k = tok(c);
      if (base_rel(k.deprel) == "case" && (k.lemma == "to" || k.lemma == "into")) return true;
    }
    return false;
  };

  // getVO
  std::vector<int> verbs;
  std::vector<bool> is_object(n + 1, false);
  for (const auto& t : sentence) {
    if (t.upos == "VERB") verbs.push_back(t.index);
    const std::string rel = base_rel(t.deprel);
    if (rel == "obj" || rel == "dobj" || (rel == "obl" && !has_case_to(t.index))) {
      is_object[t.index] = true;
    }
  }
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& t : sentence) {
      if (!is_object[t.index] && base_rel(t.deprel) == "conj" && t.head != 0 &&
          is_object[t.head]) {
        is_object[t.index] = grew = true;
      }
    }
  }

  // A conjunct object shares the governor of the first conjunct.
  auto governor = [&](int obj) -> int {
    int cur = obj;
    while (base_rel(tok(cur).deprel) == "conj" && tok(cur).head != 0 &&
           is_object[tok(cur).head]) {
      cur = tok(cur).head;
    }
    const int h = tok(cur).head;
    return h != 0 && tok(h).upos == "VERB" ? h : 0;
  };

  auto get_comp = [&](int obj) {
    std::string comp;
    for (int c : children[obj]) {  // children are in token order
      const std::string rel = base_rel(tok(c).deprel);
      if (rel == "compound" || rel == "amod" || rel == "nmod") {
        if (!comp.empty()) comp += ' ';
        comp += tok(c).lemma;
      }
    }
    return comp;
  };

  std::set<KeywordTriplet> kt;
  for (int v : verbs) {
    if (!corpus.actions.count(tok(v).lemma)) continue;
    for (int o = 1; o <= n; ++o) {
      if (is_object[o] && governor(o) == v) {
        kt.insert(KeywordTriplet{tok(v).lemma, get_comp(o), tok(o).lemma});
      }
    }
  }
  for (int o = 1; o <= n; ++o) {
    if (!is_object[o] || !corpus.resources.count(tok(o).lemma)) continue;
    const int g = governor(o);
    kt.insert(KeywordTriplet{g ? tok(g).lemma : std::string(), get_comp(o), tok(o).lemma});
  }
  return kt;
}

std::vector<TripletDoc> build_triplet_docs(const std::vector<ParsedSentence>& sentences,
                                           const Corpus& corpus) {
  std::map<std::pair<Ident, Op>, TripletDoc> docs;
  for (const auto& s : sentences) {
    if (s.unit.empty()) {
      throw Error(ErrorCode::kFormat, "sentence without a '# unit =' header");
    }
    auto& d = docs[{s.unit, s.polarity}];
    d.unit = s.unit;
    d.polarity = s.polarity;
    for (const auto& t : extract_triplets(s.tokens, corpus)) d.triplets.push_back(t);
  }
  std::vector<TripletDoc> out;
  for (auto& [key, d] : docs) out.push_back(std::move(d));
  return out;
}

std::vector<std::string> triplet_words(const KeywordTriplet& t) {
  std::vector<std::string> words;
  if (!t.action.empty()) words.push_back(t.action);
  std::istringstream in(t.complement);
  std::string w;
  while (in >> w) words.push_back(w);
  if (!t.resource.empty()) words.push_back(t.resource);
  return words;
}

namespace {

double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Noise distribution: cumulative unigram^0.75 weights.
class NoiseSampler {
 public:
  explicit NoiseSampler(const std::vector<std::size_t>& counts) {
    double total = 0.0;
    for (std::size_t c : counts) {
      total += std::pow(static_cast<double>(c), 0.75);
      cdf_.push_back(total);
    }
    for (double& x : cdf_) x /= total;
  }
  int draw(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<int>(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

struct Sample {
  int doc;
  int word;
};

double dot(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

EmbedResult embed_docs(const std::vector<TripletDoc>& docs, const EmbedConfig& config) {
  if (config.dim <= 0 || config.epochs < 0 || config.negative < 0 ||
      !(config.learning_rate > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad embedding configuration");
  }
  const int dim = config.dim;

  std::map<std::string, int> vocab;
  std::vector<std::size_t> counts;
  std::vector<Sample> samples;
  std::vector<bool> has_words(docs.size(), false);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& t : docs[d].triplets) {
      for (const auto& w : triplet_words(t)) {
        auto [it, fresh] = vocab.emplace(w, static_cast<int>(counts.size()));
        if (fresh) counts.push_back(0);
        ++counts[it->second];
        samples.push_back(Sample{static_cast<int>(d), it->second});
        has_words[d] = true;
      }
    }
  }
  if (samples.empty()) throw Error(ErrorCode::kEmptyCorpus, "no document has any triplet");

  Rng rng(config.seed);
  std::vector<double> doc_vecs(docs.size() * dim);
  for (double& x : doc_vecs) x = (rng.uniform() - 0.5) / dim;
  std::vector<double> out_vecs(counts.size() * dim, 0.0);
  const NoiseSampler noise(counts);

  // Loss is measured with one fixed set of noise words so the before and
  // after numbers are comparable.
  std::vector<int> eval_noise;
  {
    Rng eval_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t i = 0; i < samples.size() * config.negative; ++i) {
      eval_noise.push_back(noise.draw(eval_rng));
    }
  }
  auto mean_loss = [&] {
    double total = 0.0;
    std::size_t k = 0;
    for (const auto& s : samples) {
      const double* dv = &doc_vecs[s.doc * dim];
      total -= log_sigmoid(dot(dv, &out_vecs[s.word * dim], dim));
      for (int j = 0; j < config.negative; ++j) {
        total -= log_sigmoid(-dot(dv, &out_vecs[eval_noise[k++] * dim], dim));
      }
    }
    return total / static_cast<double>(samples.size());
  };

  EmbedResult result;
  result.loss_before = mean_loss();

  const double total_steps = static_cast<double>(samples.size()) * config.epochs;
  double step = 0.0;
  std::vector<double> grad(dim);
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const Sample& s = samples[idx];
      const double lr =
          std::max(config.learning_rate * (1.0 - step / total_steps), config.learning_rate * 1e-4);
      step += 1.0;
      double* dv = &doc_vecs[s.doc * dim];
      std::fill(grad.begin(), grad.end(), 0.0);
      for (int j = 0; j <= config.negative; ++j) {
        int target;
        double label;
        if (j == 0) {
          target = s.word;
          label = 1.0;
        } else {
          target = noise.draw(rng);
          if (target == s.word) continue;
          label = 0.0;
        }
        double* ov = &out_vecs[target * dim];
        const double g = (label - sigmoid(dot(dv, ov, dim))) * lr;
        for (int i = 0; i < dim; ++i) grad[i] += g * ov[i];
        for (int i = 0; i < dim; ++i) ov[i] += g * dv[i];
      }
      for (int i = 0; i < dim; ++i) dv[i] += grad[i];
    }
  }
  result.loss_after = mean_loss();

  for (std::size_t d = 0; d < docs.size(); ++d) {
    DocVector v{docs[d].unit, docs[d].polarity, std::vector<double>(dim, 0.0)};
    if (has_words[d]) {
      std::copy(doc_vecs.begin() + d * dim, doc_vecs.begin() + (d + 1) * dim, v.vector.begin());
    }
    result.vectors.push_back(std::move(v));
  }
  return result;
}

std::string doc_vectors_to_text(const std::vector<DocVector>& vectors) {
  std::string out;
  char buf[32];
  for (const auto& v : vectors) {
    out += v.unit.str();
    out += ' ';
    out += op_name(v.polarity);
    for (double x : v.vector) {
      std::snprintf(buf, sizeof buf, " %.17g", x);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::vector<DocVector> doc_vectors_from_text(std::string_view text) {
  std::vector<DocVector> out;
  int lineno = 0;
  std::size_t dim = 0;
  for (const std::string& raw : split_lines(text)) {
    ++lineno;
    std::istringstream in(raw);
    std::string unit, pol;
    if (!(in >> unit)) continue;
    auto op = (in >> pol) ? parse_op(pol) : std::nullopt;
    if (!op || !is_valid_ident(unit)) {
      throw SyntaxError("vectors", lineno, 0, "expected '<unit> <polarity> values...'");
    }
    DocVector v{Ident(unit), *op, {}};
    std::string tok;
    while (in >> tok) {
      char* end = nullptr;
      const double x = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0' || !std::isfinite(x)) {
        throw SyntaxError("vectors", lineno, 0, "bad component '" + tok + "'");
      }
      v.vector.push_back(x);
    }
    if (v.vector.empty() || (dim != 0 && v.vector.size() != dim)) {
      throw SyntaxError("vectors", lineno, 0, "inconsistent vector length");
    }
    dim = v.vector.size();
    out.push_back(std::move(v));
  }
  return out;
}

DocVectorMap index_doc_vectors(const std::vector<DocVector>& vectors) {
  DocVectorMap m;
  for (const auto& v : vectors) m[{v.unit, v.polarity}] = v.vector;
  return m;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0 || bb == 0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

}  // namespace sepal
