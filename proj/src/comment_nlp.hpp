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

// Keyword triplets from dependency-parsed comment sentences, and the
// paragraph-vector embedding of each (unit, polarity) document.

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "policy_model.hpp"

namespace sepal {

struct DepToken {
  int index = 0;  // 1-based
  std::string form;
  std::string lemma;
  std::string upos;
  int head = 0;  // 0 = root
  std::string deprel;
};

struct ParsedSentence {
  Ident unit;
  Op polarity = Op::kAllow;
  std::string text;  // `# text = ...` when present
  std::vector<DepToken> tokens;
};

// CoNLL-U reader. `# unit = X` and `# polarity = P` comments apply to the
// sentence they precede and to every later sentence until overridden.
// Multiword-token and empty-node lines are ignored.
std::vector<ParsedSentence> read_conllu(std::string_view text,
                                        const std::string& source = "conllu");

// Throws Error(kMalformedTree) unless ids run 1..n, heads lie in [0, n],
// exactly one token has head 0 and every token reaches it.
void validate_tree(const std::vector<DepToken>& sentence);

struct Corpus {
  std::set<std::string> actions;
  std::set<std::string> resources;
};

// One lemma per line, `#` comments. Every word of every synonyms line is
// added to the actions.
Corpus make_corpus(std::string_view actions, std::string_view resources,
                   std::string_view synonyms = {});
Corpus load_corpus(const std::string& dir);  // actions.txt resources.txt synonyms.txt

struct KeywordTriplet {
  std::string action;      // may be empty
  std::string complement;  // may be empty; words joined by ' '
  std::string resource;

  friend auto operator<=>(const KeywordTriplet&, const KeywordTriplet&) = default;
  friend bool operator==(const KeywordTriplet&, const KeywordTriplet&) = default;
};

std::set<KeywordTriplet> extract_triplets(const std::vector<DepToken>& sentence,
                                          const Corpus& corpus);

struct TripletDoc {
  Ident unit;
  Op polarity = Op::kAllow;
  std::vector<KeywordTriplet> triplets;  // in sentence order, repeats kept
};

// Groups per-sentence triplets into documents, sorted by (unit, polarity).
std::vector<TripletDoc> build_triplet_docs(const std::vector<ParsedSentence>& sentences,
                                           const Corpus& corpus);

struct EmbedConfig {
  int dim = 300;
  int epochs = 40;
  std::uint64_t seed = 7;
  int negative = 5;
  double learning_rate = 0.025;
};

struct DocVector {
  Ident unit;
  Op polarity = Op::kAllow;
  std::vector<double> vector;
};

struct EmbedResult {
  std::vector<DocVector> vectors;  // same order as the input docs
  double loss_before = 0.0;        // mean negative-sampling loss, fixed draws
  double loss_after = 0.0;
};

// Distributed bag of words: each document vector predicts the words of its
// triplets against `negative` noise words drawn from the unigram^0.75
// distribution. Single-threaded; identical inputs give identical bits.
EmbedResult embed_docs(const std::vector<TripletDoc>& docs, const EmbedConfig& config = {});

// Words a triplet contributes to its document: action, each complement
// word, resource (empty parts skipped).
std::vector<std::string> triplet_words(const KeywordTriplet& t);

using DocVectorMap = std::map<std::pair<Ident, Op>, std::vector<double>>;

// `<unit> <polarity> v1 ... vdim`, one document per line, %.17g.
std::string doc_vectors_to_text(const std::vector<DocVector>& vectors);
std::vector<DocVector> doc_vectors_from_text(std::string_view text);
DocVectorMap index_doc_vectors(const std::vector<DocVector>& vectors);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace sepal
