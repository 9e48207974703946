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

// Wide & deep classifier over EncodedExamples, plus the nearest-neighbour
// baseline.
//
//   p = sigmoid(sum_i w[wide_i] + b + v . h4)
//   h_l = relu(W_l h_{l-1} + c_l),  h0 = [E_s[s] E_t[t] E_c[c] E_p[p] flags uid vecs]

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "atomic_engine.hpp"
#include "features.hpp"

namespace sepal {

inline constexpr std::array<int, 4> kEmbedDims{64, 64, 8, 8};
inline constexpr std::array<int, 4> kHiddenWidths{256, 128, 64, 32};

struct TrainConfig {
  std::uint64_t seed = 7;
  double wide_lr = 0.1;
  double deep_lr = 0.01;
  int epochs = 20;
  int batch_size = 256;
  double test_fraction = 0.10;
  double threshold = 0.5;
  // Refuse single-label data. Only a unit test memorizing one example
  // turns this off.
  bool require_both_labels = true;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct ModelShape {
  std::uint32_t wide_dim = 0;
  std::uint32_t hash_buckets = kDefaultHashBuckets;
  std::array<std::uint32_t, 4> vocab_slots{};
  int vec_dim = kDefaultVecDim;

  static ModelShape of(const EncoderContext& ctx);
  int deep_input_dim() const;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

struct WideWeights {
  std::vector<double> w;
  double b = 0.0;  // shared output bias
};

struct DeepParams {
  std::array<Eigen::MatrixXd, 4> embeddings;  // slot x dim
  std::array<Eigen::MatrixXd, 4> weights;     // out x in
  std::array<Eigen::VectorXd, 4> biases;
  Eigen::VectorXd output;                     // 32 -> logit
};

struct Model {
  TrainConfig config;
  ModelShape shape;
  WideWeights wide;
  DeepParams deep;
};

// Zero wide part; deep part drawn from Rng(config.seed).
Model init_model(const ModelShape& shape, const TrainConfig& config);

double wide_logit(const Model& m, const EncodedExample& ex);  // without bias
double deep_logit(const Model& m, const EncodedExample& ex);
double predict(const Model& m, const EncodedExample& ex);
Op classify(const Model& m, const EncodedExample& ex);

// Same layout as the model parameters.
struct Gradients {
  std::vector<double> wide;
  double bias = 0.0;
  DeepParams deep;
};

// Mean logistic loss over `examples`; fills `grad` when given.
double loss_and_gradients(const Model& m, const std::vector<const EncodedExample*>& examples,
                          Gradients* grad);
double mean_loss(const Model& m, const std::vector<EncodedExample>& examples);

struct Metrics {
  std::size_t n = 0;
  double accuracy = 0.0;
  double precision = 0.0;  // positive class = neverallow
  double recall = 0.0;
};

Metrics evaluate(const Model& m, const std::vector<EncodedExample>& examples);

struct TrainResult {
  Model model;
  Metrics heldout;
  std::vector<double> epoch_loss;  // epoch_loss[0] before any update
  std::size_t train_size = 0;
};

// Holds out test_fraction of the examples (seeded shuffle), then runs
// mini-batch updates: AdaGrad on the wide part and bias, plain SGD on the
// deep part. Throws Error(kDegenerateData) on single-label input.
TrainResult train(const std::vector<EncodedExample>& examples, const ModelShape& shape,
                  const TrainConfig& config);

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst_group;
  std::size_t coordinates = 0;
};

// Central differences against loss_and_gradients. Large parameter groups
// are sampled; the wide part checks every active index.
GradCheck gradient_check(const Model& m, const std::vector<EncodedExample>& examples,
                         double epsilon = 1e-5);

// ---------------------------------------------------------------------------
// Findings

enum class Category : std::uint8_t {
  kCoarseAttribute,
  kDebugRule,
  kDeprecated,
  kUntrustedDomain,
  kUncategorized,
};

const char* category_name(Category c);
std::optional<Category> parse_category(std::string_view s);

struct Finding {
  AtomicRule atomic;
  double probability = 0.0;
  std::string source_image;
  std::string provenance;  // file:line of the originating device rule
  std::set<Category> categories;
};

// Allow-labeled atomics of `customized` that the model classifies as
// neverallow.
std::vector<Finding> flag_unregulated(const Model& m, const AtomicSet& customized,
                                      const EncoderContext& ctx,
                                      const SourceMap* sources = nullptr,
                                      const std::string& image = {});

// ---------------------------------------------------------------------------
// Nearest-neighbour baseline

enum class Verdict : std::uint8_t { kAllow, kNeverallow, kUnclassified };

const char* verdict_name(Verdict v);

struct NeighborVerdict {
  Verdict verdict = Verdict::kUnclassified;
  std::size_t neighbor_count = 0;
  double majority_fraction = 0.0;
};

// Counts training atomics that agree with a query in exactly three of the
// four fields, by label.
class NeighborIndex {
 public:
  explicit NeighborIndex(const AtomicSet& train);

  // {allow, neverallow} neighbour counts.
  std::pair<std::size_t, std::size_t> counts(const AtomicRule& target) const;

 private:
  struct LabelCount {
    std::size_t allow = 0;
    std::size_t never = 0;
  };
  std::array<std::map<std::string, LabelCount>, 4> partial_;  // one field blanked
  std::map<std::string, LabelCount> exact_;
};

NeighborVerdict decide(std::size_t allow, std::size_t never, std::size_t m, double sigma);
NeighborVerdict nn_classify(const NeighborIndex& index, const AtomicRule& target,
                            std::size_t m = 10, double sigma = 0.55);
NeighborVerdict nn_classify(const AtomicSet& train, const AtomicRule& target,
                            std::size_t m = 10, double sigma = 0.55);

struct BaselineSummary {
  std::size_t total = 0;
  std::size_t unclassified = 0;
  std::size_t correct = 0;
  double accuracy_all = 0.0;         // unclassified counted as wrong
  double accuracy_classified = 0.0;  // over classified rules only
};

// Scores verdicts against the labels of `test`.
BaselineSummary score_baseline(const AtomicSet& train, const AtomicSet& test, std::size_t m,
                               double sigma);

// ---------------------------------------------------------------------------
// SEPM model file: config, shape, encoder context, then f32 parameters.

std::string model_to_binary(const Model& m, const EncoderContext& ctx);
Model model_from_binary(std::string_view data, EncoderContext* ctx);

}  // namespace sepal
