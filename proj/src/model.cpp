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

#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "binary_io.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace sepal {

namespace {

constexpr int kEmbedTotal = 64 + 64 + 8 + 8;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

using Batch = std::vector<const EncodedExample*>;

void check_example(const Model& m, const EncodedExample& ex) {
  for (int f = 0; f < 4; ++f) {
    if (ex.deep_ids[f] >= m.shape.vocab_slots[f]) {
      throw Error(ErrorCode::kInvalidArgument, "example vocabulary id out of range");
    }
  }
  for (std::uint32_t i : ex.wide) {
    if (i >= m.shape.wide_dim) throw Error(ErrorCode::kInvalidArgument, "wide index out of range");
  }
  if (static_cast<int>(ex.allow_vec.size()) != m.shape.vec_dim ||
      static_cast<int>(ex.neverallow_vec.size()) != m.shape.vec_dim) {
    throw Error(ErrorCode::kInvalidArgument, "comment vector dimension mismatch");
  }
}

Eigen::MatrixXd build_input(const Model& m, const Batch& batch) {
  const int d = m.shape.deep_input_dim();
  const int vd = m.shape.vec_dim;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const EncodedExample& ex = *batch[j];
    check_example(m, ex);
    auto col = x.col(static_cast<Eigen::Index>(j));
    int off = 0;
    for (int f = 0; f < 4; ++f) {
      col.segment(off, kEmbedDims[f]) = m.deep.embeddings[f].row(ex.deep_ids[f]).transpose();
      off += kEmbedDims[f];
    }
    for (int i = 0; i < kFlagCount; ++i) col(off + i) = ex.flags.bits[i] ? 1.0 : 0.0;
    off += kFlagCount;
    col(off + static_cast<int>(ex.uid)) = 1.0;
    off += kUidBucketCount;
    for (int i = 0; i < vd; ++i) col(off + i) = ex.allow_vec[i];
    off += vd;
    for (int i = 0; i < vd; ++i) col(off + i) = ex.neverallow_vec[i];
  }
  return x;
}

struct Forward {
  Eigen::MatrixXd x;
  std::array<Eigen::MatrixXd, 4> z;
  std::array<Eigen::MatrixXd, 4> a;
  Eigen::VectorXd deep;  // per example
  Eigen::VectorXd wide;  // per example, without bias
};

Forward forward(const Model& m, const Batch& batch) {
  Forward f;
  f.x = build_input(m, batch);
  const Eigen::MatrixXd* in = &f.x;
  for (int l = 0; l < 4; ++l) {
    f.z[l] = m.deep.weights[l] * *in;
    f.z[l].colwise() += m.deep.biases[l];
    f.a[l] = f.z[l].cwiseMax(0.0);
    in = &f.a[l];
  }
  f.deep = f.a[3].transpose() * m.deep.output;
  f.wide.resize(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    double s = 0.0;
    for (std::uint32_t i : batch[j]->wide) s += m.wide.w[i];
    f.wide(static_cast<Eigen::Index>(j)) = s;
  }
  return f;
}

void zero_deep_like(DeepParams& g, const DeepParams& p) {
  for (int i = 0; i < 4; ++i) {
    g.embeddings[i] = Eigen::MatrixXd::Zero(p.embeddings[i].rows(), p.embeddings[i].cols());
    g.weights[i] = Eigen::MatrixXd::Zero(p.weights[i].rows(), p.weights[i].cols());
    g.biases[i] = Eigen::VectorXd::Zero(p.biases[i].size());
  }
  g.output = Eigen::VectorXd::Zero(p.output.size());
}

// Mean loss of `batch`. When `g` is given, its wide vector must be zero on
// entry (only touched entries are written) and its deep part is overwritten.
double compute(const Model& m, const Batch& batch, Gradients* g) {
  if (batch.empty()) return 0.0;
  const Forward f = forward(m, batch);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  Eigen::RowVectorXd dz(n);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double z = f.wide(j) + f.deep(j) + m.wide.b;
    const double y = batch[j]->label ? 1.0 : 0.0;
    loss += softplus(z) - y * z;
    dz(j) = (sigmoid(z) - y) * inv_n;
  }
  if (!g) return loss * inv_n;

  for (Eigen::Index j = 0; j < n; ++j) {
    for (std::uint32_t i : batch[j]->wide) g->wide[i] += dz(j);
  }
  g->bias = dz.sum();

  zero_deep_like(g->deep, m.deep);
  g->deep.output = f.a[3] * dz.transpose();
  Eigen::MatrixXd delta = m.deep.output * dz;  // d loss / d a[3]
  for (int l = 3; l >= 0; --l) {
    delta = delta.cwiseProduct((f.z[l].array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd& in = l == 0 ? f.x : f.a[l - 1];
    g->deep.weights[l] = delta * in.transpose();
    g->deep.biases[l] = delta.rowwise().sum();
    delta = m.deep.weights[l].transpose() * delta;
  }
  // delta is now d loss / d x; scatter the embedding slices.
  for (Eigen::Index j = 0; j < n; ++j) {
    int off = 0;
    for (int fidx = 0; fidx < 4; ++fidx) {
      g->deep.embeddings[fidx].row(batch[j]->deep_ids[fidx]) +=
          delta.col(j).segment(off, kEmbedDims[fidx]).transpose();
      off += kEmbedDims[fidx];
    }
  }
  return loss * inv_n;
}

Batch pointers(const std::vector<EncodedExample>& v) {
  Batch b;
  b.reserve(v.size());
  for (const auto& e : v) b.push_back(&e);
  return b;
}

std::vector<double> predict_all(const Model& m, const Batch& all) {
  std::vector<double> out;
  out.reserve(all.size());
  constexpr std::size_t kChunk = 1024;
  for (std::size_t s = 0; s < all.size(); s += kChunk) {
    Batch b(all.begin() + s, all.begin() + std::min(all.size(), s + kChunk));
    const Forward f = forward(m, b);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(b.size()); ++j) {
      out.push_back(sigmoid(f.wide(j) + f.deep(j) + m.wide.b));
    }
  }
  return out;
}

}  // namespace

ModelShape ModelShape::of(const EncoderContext& ctx) {
  ModelShape s;
  s.wide_dim = ctx.wide_dim();
  s.hash_buckets = ctx.hash_buckets;
  s.vocab_slots = {ctx.vocab.slots(Field::kSubject), ctx.vocab.slots(Field::kTarget),
                   ctx.vocab.slots(Field::kClass), ctx.vocab.slots(Field::kPermission)};
  s.vec_dim = ctx.vec_dim;
  return s;
}

int ModelShape::deep_input_dim() const {
  return kEmbedTotal + kFlagCount + kUidBucketCount + 2 * vec_dim;
}

Model init_model(const ModelShape& shape, const TrainConfig& config) {
  Model m;
  m.config = config;
  m.shape = shape;
  m.wide.w.assign(shape.wide_dim, 0.0);
  m.wide.b = 0.0;
  Rng rng(config.seed);
  auto fill = [&](Eigen::MatrixXd& mat, double limit) {
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c) mat(r, c) = rng.uniform(-limit, limit);
    }
  };
  for (int f = 0; f < 4; ++f) {
    m.deep.embeddings[f].resize(shape.vocab_slots[f], kEmbedDims[f]);
    fill(m.deep.embeddings[f], 0.05);
  }
  int in = shape.deep_input_dim();
  for (int l = 0; l < 4; ++l) {
    m.deep.weights[l].resize(kHiddenWidths[l], in);
    fill(m.deep.weights[l], std::sqrt(6.0 / in));  // He uniform
    m.deep.biases[l] = Eigen::VectorXd::Zero(kHiddenWidths[l]);
    in = kHiddenWidths[l];
  }
  Eigen::MatrixXd out(in, 1);
  fill(out, std::sqrt(6.0 / (in + 1)));
  m.deep.output = out.col(0);
  return m;
}

double wide_logit(const Model& m, const EncodedExample& ex) {
  check_example(m, ex);
  double s = 0.0;
  for (std::uint32_t i : ex.wide) s += m.wide.w[i];
  return s;
}

double deep_logit(const Model& m, const EncodedExample& ex) {
  return forward(m, Batch{&ex}).deep(0);
}

double predict(const Model& m, const EncodedExample& ex) {
  const Forward f = forward(m, Batch{&ex});
  return sigmoid(f.wide(0) + f.deep(0) + m.wide.b);
}

Op classify(const Model& m, const EncodedExample& ex) {
  return predict(m, ex) >= m.config.threshold ? Op::kAllow : Op::kNeverallow;
}

double loss_and_gradients(const Model& m, const std::vector<const EncodedExample*>& examples,
                          Gradients* grad) {
  if (grad) {
    grad->wide.assign(m.shape.wide_dim, 0.0);
    grad->bias = 0.0;
  }
  return compute(m, examples, grad);
}

double mean_loss(const Model& m, const std::vector<EncodedExample>& examples) {
  const Batch all = pointers(examples);
  double total = 0.0;
  constexpr std::size_t kChunk = 1024;
  for (std::size_t s = 0; s < all.size(); s += kChunk) {
    Batch b(all.begin() + s, all.begin() + std::min(all.size(), s + kChunk));
    total += compute(m, b, nullptr) * static_cast<double>(b.size());
  }
  return all.empty() ? 0.0 : total / static_cast<double>(all.size());
}

Metrics evaluate(const Model& m, const std::vector<EncodedExample>& examples) {
  Metrics r;
  r.n = examples.size();
  if (examples.empty()) return r;
  const std::vector<double> p = predict_all(m, pointers(examples));
  std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const bool pred_never = p[i] < m.config.threshold;
    const bool is_never = examples[i].label == 0;
    if (pred_never == is_never) ++correct;
    if (pred_never && is_never) ++tp;
    if (pred_never && !is_never) ++fp;
    if (!pred_never && is_never) ++fn;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
  r.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return r;
}

TrainResult train(const std::vector<EncodedExample>& examples, const ModelShape& shape,
                  const TrainConfig& config) {
  if (examples.empty()) throw Error(ErrorCode::kDegenerateData, "no training examples");
  if (config.epochs < 0 || config.batch_size <= 0 || config.test_fraction < 0 ||
      config.test_fraction >= 1 || !(config.wide_lr > 0) || !(config.deep_lr >= 0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad training configuration");
  }
  std::size_t positives = 0;
  for (const auto& e : examples) positives += e.label ? 1 : 0;
  if (config.require_both_labels && (positives == 0 || positives == examples.size())) {
    throw Error(ErrorCode::kDegenerateData, "all examples carry the same label");
  }

  Rng rng(config.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::size_t n_test = static_cast<std::size_t>(
      std::llround(config.test_fraction * static_cast<double>(examples.size())));
  if (n_test >= examples.size()) n_test = examples.size() - 1;

  std::vector<EncodedExample> test;
  Batch train_set;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < n_test) {
      test.push_back(examples[order[i]]);
    } else {
      train_set.push_back(&examples[order[i]]);
    }
  }
  std::sort(train_set.begin(), train_set.end());  // fixed base order for epoch shuffles

  TrainResult result;
  result.train_size = train_set.size();
  result.model = init_model(shape, config);
  Model& m = result.model;

  {
    double total = 0.0;
    for (std::size_t s = 0; s < train_set.size(); s += 1024) {
      Batch b(train_set.begin() + s, train_set.begin() + std::min(train_set.size(), s + 1024));
      total += compute(m, b, nullptr) * static_cast<double>(b.size());
    }
    result.epoch_loss.push_back(total / static_cast<double>(train_set.size()));
  }

  std::vector<double> accum(shape.wide_dim, 0.1);
  double bias_accum = 0.1;
  Gradients g;
  g.wide.assign(shape.wide_dim, 0.0);
  std::vector<std::uint32_t> touched;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(train_set);
    double total = 0.0;
    for (std::size_t s = 0; s < train_set.size(); s += config.batch_size) {
      Batch b(train_set.begin() + s,
              train_set.begin() + std::min(train_set.size(), s + config.batch_size));
      total += compute(m, b, &g) * static_cast<double>(b.size());

      touched.clear();
      for (const auto* ex : b) touched.insert(touched.end(), ex->wide.begin(), ex->wide.end());
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      for (std::uint32_t i : touched) {
        const double gi = g.wide[i];
        accum[i] += gi * gi;
        m.wide.w[i] -= config.wide_lr * gi / std::sqrt(accum[i]);
        g.wide[i] = 0.0;
      }
      bias_accum += g.bias * g.bias;
      m.wide.b -= config.wide_lr * g.bias / std::sqrt(bias_accum);

      const double lr = config.deep_lr;
      for (int f = 0; f < 4; ++f) m.deep.embeddings[f] -= lr * g.deep.embeddings[f];
      for (int l = 0; l < 4; ++l) {
        m.deep.weights[l] -= lr * g.deep.weights[l];
        m.deep.biases[l] -= lr * g.deep.biases[l];
      }
      m.deep.output -= lr * g.deep.output;
    }
    result.epoch_loss.push_back(total / static_cast<double>(train_set.size()));
  }
  result.heldout = evaluate(m, test);
  return result;
}

GradCheck gradient_check(const Model& model, const std::vector<EncodedExample>& examples,
                         double epsilon) {
  Model m = model;
  const Batch batch = pointers(examples);
  Gradients g;
  loss_and_gradients(m, batch, &g);

  GradCheck report;
  auto check = [&](const std::string& group, double& param, double analytic) {
    const double old = param;
    param = old + epsilon;
    const double up = compute(m, batch, nullptr);
    param = old - epsilon;
    const double down = compute(m, batch, nullptr);
    param = old;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    const double rel = std::abs(analytic - numeric) / denom;
    ++report.coordinates;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_group = group;
    }
  };

  std::set<std::uint32_t> active;
  for (const auto* ex : batch) active.insert(ex->wide.begin(), ex->wide.end());
  for (std::uint32_t i : active) check("wide", m.wide.w[i], g.wide[i]);
  check("bias", m.wide.b, g.bias);

  Rng rng(m.config.seed ^ 0x5851f42d4c957f2dULL);
  constexpr int kSamples = 24;
  const char* emb_names[4] = {"embedding.subject", "embedding.target", "embedding.class",
                              "embedding.permission"};
  for (int f = 0; f < 4; ++f) {
    std::vector<std::uint32_t> rows;
    for (const auto* ex : batch) rows.push_back(ex->deep_ids[f]);
    for (int k = 0; k < kSamples; ++k) {
      const auto r = rows[rng.below(rows.size())];
      const auto c = static_cast<Eigen::Index>(rng.below(kEmbedDims[f]));
      check(emb_names[f], m.deep.embeddings[f](r, c), g.deep.embeddings[f](r, c));
    }
  }
  for (int l = 0; l < 4; ++l) {
    auto& w = m.deep.weights[l];
    const std::string wname = "layer" + std::to_string(l + 1) + ".weight";
    for (int k = 0; k < kSamples; ++k) {
      const auto r = static_cast<Eigen::Index>(rng.below(w.rows()));
      const auto c = static_cast<Eigen::Index>(rng.below(w.cols()));
      check(wname, w(r, c), g.deep.weights[l](r, c));
    }
    const std::string bname = "layer" + std::to_string(l + 1) + ".bias";
    for (int k = 0; k < kSamples; ++k) {
      const auto r = static_cast<Eigen::Index>(rng.below(m.deep.biases[l].size()));
      check(bname, m.deep.biases[l](r), g.deep.biases[l](r));
    }
  }
  for (Eigen::Index i = 0; i < m.deep.output.size(); ++i) {
    check("output", m.deep.output(i), g.deep.output(i));
  }
  return report;
}

// ---------------------------------------------------------------------------

namespace {
constexpr const char* kCategoryNames[] = {"coarse_attribute", "debug_rule", "deprecated",
                                          "untrusted_domain", "uncategorized"};
}  // namespace

const char* category_name(Category c) { return kCategoryNames[static_cast<int>(c)]; }

std::optional<Category> parse_category(std::string_view s) {
  for (int i = 0; i < 5; ++i) {
    if (s == kCategoryNames[i]) return static_cast<Category>(i);
  }
  return std::nullopt;
}

std::vector<Finding> flag_unregulated(const Model& m, const AtomicSet& customized,
                                      const EncoderContext& ctx, const SourceMap* sources,
                                      const std::string& image) {
  const AtomicSet allows = with_label(customized, Op::kAllow);
  const std::vector<EncodedExample> encoded = encode_all(allows, ctx);
  const std::vector<double> p = predict_all(m, pointers(encoded));
  std::vector<Finding> out;
  std::size_t i = 0;
  for (const auto& a : allows) {
    const double prob = p[i++];
    if (prob >= m.config.threshold) continue;
    Finding f;
    f.atomic = a;
    f.probability = prob;
    f.source_image = image;
    if (sources) {
      if (auto it = sources->find(a); it != sources->end()) f.provenance = it->second;
    }
    out.push_back(std::move(f));
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kAllow: return "allow";
    case Verdict::kNeverallow: return "neverallow";
    case Verdict::kUnclassified: return "unclassified";
  }
  return "unclassified";
}

namespace {

std::string key_without(const AtomicRule& a, int blank) {
  const std::string* parts[4] = {&a.subject.str(), &a.target.str(), &a.cls.str(),
                                 &a.permission.str()};
  std::string k;
  for (int i = 0; i < 4; ++i) {
    if (i) k.push_back('\x1f');
    if (i != blank) k += *parts[i];
  }
  return k;
}

}  // namespace

NeighborIndex::NeighborIndex(const AtomicSet& train) {
  for (const auto& a : train) {
    auto bump = [&](LabelCount& c) { (a.label == Op::kAllow ? c.allow : c.never)++; };
    for (int k = 0; k < 4; ++k) bump(partial_[k][key_without(a, k)]);
    bump(exact_[key_without(a, -1)]);
  }
}

std::pair<std::size_t, std::size_t> NeighborIndex::counts(const AtomicRule& target) const {
  std::size_t allow = 0, never = 0;
  for (int k = 0; k < 4; ++k) {
    auto it = partial_[k].find(key_without(target, k));
    if (it == partial_[k].end()) continue;
    allow += it->second.allow;
    never += it->second.never;
  }
  // A four-field match sits in every partial bucket.
  if (auto it = exact_.find(key_without(target, -1)); it != exact_.end()) {
    allow -= 4 * it->second.allow;
    never -= 4 * it->second.never;
  }
  return {allow, never};
}

NeighborVerdict decide(std::size_t allow, std::size_t never, std::size_t m, double sigma) {
  NeighborVerdict v;
  v.neighbor_count = allow + never;
  if (v.neighbor_count == 0) return v;
  v.majority_fraction =
      static_cast<double>(std::max(allow, never)) / static_cast<double>(v.neighbor_count);
  if (v.neighbor_count < m || allow == never || v.majority_fraction < sigma) return v;
  v.verdict = allow > never ? Verdict::kAllow : Verdict::kNeverallow;
  return v;
}

NeighborVerdict nn_classify(const NeighborIndex& index, const AtomicRule& target,
                            std::size_t m, double sigma) {
  auto [allow, never] = index.counts(target);
  return decide(allow, never, m, sigma);
}

NeighborVerdict nn_classify(const AtomicSet& train, const AtomicRule& target, std::size_t m,
                            double sigma) {
  return nn_classify(NeighborIndex(train), target, m, sigma);
}

BaselineSummary score_baseline(const AtomicSet& train, const AtomicSet& test, std::size_t m,
                               double sigma) {
  const NeighborIndex index(train);
  BaselineSummary s;
  for (const auto& a : test) {
    ++s.total;
    const NeighborVerdict v = nn_classify(index, a, m, sigma);
    if (v.verdict == Verdict::kUnclassified) {
      ++s.unclassified;
      continue;
    }
    const Verdict truth = a.label == Op::kAllow ? Verdict::kAllow : Verdict::kNeverallow;
    if (v.verdict == truth) ++s.correct;
  }
  if (s.total) s.accuracy_all = static_cast<double>(s.correct) / static_cast<double>(s.total);
  const std::size_t classified = s.total - s.unclassified;
  if (classified) {
    s.accuracy_classified = static_cast<double>(s.correct) / static_cast<double>(classified);
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kSepmMagic[4] = {'S', 'E', 'P', 'M'};
constexpr std::uint16_t kSepmVersion = 1;

void put_matrix(ByteWriter& w, const Eigen::MatrixXd& m) {
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f32(static_cast<float>(m(r, c)));
  }
}

Eigen::MatrixXd get_matrix(ByteReader& r, Eigen::Index rows, Eigen::Index cols) {
  if (r.u32() != rows || r.u32() != cols) {
    throw Error(ErrorCode::kFormat, "SEPM: parameter block has the wrong shape");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.f32();
  }
  return m;
}

Ident get_ident(ByteReader& r) {
  std::string s = r.str();
  if (!is_valid_ident(s)) throw Error(ErrorCode::kFormat, "SEPM: bad name");
  return Ident(std::move(s));
}

}  // namespace

std::string model_to_binary(const Model& m, const EncoderContext& ctx) {
  if (!(ModelShape::of(ctx) == m.shape)) {
    throw Error(ErrorCode::kInvalidArgument, "encoder context does not match model shape");
  }
  ByteWriter w;
  w.bytes(std::string_view(kSepmMagic, 4));
  w.u16(kSepmVersion);

  const TrainConfig& c = m.config;
  w.u64(c.seed);
  w.f64(c.wide_lr);
  w.f64(c.deep_lr);
  w.u32(static_cast<std::uint32_t>(c.epochs));
  w.u32(static_cast<std::uint32_t>(c.batch_size));
  w.f64(c.test_fraction);
  w.f64(c.threshold);
  w.u32(m.shape.hash_buckets);

  // Encoder context.
  for (int f = 0; f < 4; ++f) {
    const auto& entries = ctx.vocab.entries(static_cast<Field>(f));
    w.u32(static_cast<std::uint32_t>(entries.size()));
    for (const auto& [name, id] : entries) {
      w.str(name.str());
      w.u32(id);
    }
  }
  w.u32(static_cast<std::uint32_t>(ctx.types.size()));
  for (const auto& [name, info] : ctx.types) {
    w.str(name.str());
    w.u8(info.flags.mask());
    w.u32(static_cast<std::uint32_t>(info.attributes.size()));
    for (const auto& a : info.attributes) w.str(a.str());
  }
  w.u32(static_cast<std::uint32_t>(ctx.uids.size()));
  for (const auto& [name, b] : ctx.uids) {
    w.str(name.str());
    w.u8(static_cast<std::uint8_t>(b));
  }
  w.u32(static_cast<std::uint32_t>(ctx.vec_dim));
  w.u32(static_cast<std::uint32_t>(ctx.doc_vecs.size()));
  for (const auto& [key, vec] : ctx.doc_vecs) {
    w.str(key.first.str());
    w.u8(static_cast<std::uint8_t>(key.second));
    if (static_cast<int>(vec.size()) != ctx.vec_dim) {
      throw Error(ErrorCode::kInvalidArgument, "comment vector dimension mismatch");
    }
    for (double x : vec) w.f64(x);
  }
  w.u32(static_cast<std::uint32_t>(ctx.unit_map.size()));
  for (const auto& [s, u] : ctx.unit_map) {
    w.str(s.str());
    w.str(u.str());
  }

  // Parameters.
  w.u32(m.shape.wide_dim);
  for (double x : m.wide.w) w.f32(static_cast<float>(x));
  w.f32(static_cast<float>(m.wide.b));
  for (int f = 0; f < 4; ++f) put_matrix(w, m.deep.embeddings[f]);
  for (int l = 0; l < 4; ++l) {
    put_matrix(w, m.deep.weights[l]);
    put_matrix(w, m.deep.biases[l]);
  }
  put_matrix(w, m.deep.output);
  return w.take();
}

Model model_from_binary(std::string_view data, EncoderContext* out_ctx) {
  ByteReader r(data, "SEPM");
  if (r.bytes(4) != std::string_view(kSepmMagic, 4)) throw Error(ErrorCode::kFormat, "not an SEPM file");
  if (r.u16() != kSepmVersion) throw Error(ErrorCode::kFormat, "unsupported SEPM version");

  TrainConfig c;
  c.seed = r.u64();
  c.wide_lr = r.f64();
  c.deep_lr = r.f64();
  c.epochs = static_cast<int>(r.u32());
  c.batch_size = static_cast<int>(r.u32());
  c.test_fraction = r.f64();
  c.threshold = r.f64();

  EncoderContext ctx;
  ctx.hash_buckets = r.u32();
  if (ctx.hash_buckets == 0) throw Error(ErrorCode::kFormat, "SEPM: zero hash buckets");
  for (int f = 0; f < 4; ++f) {
    std::map<Ident, std::uint32_t> entries;
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
      Ident name = get_ident(r);
      entries[name] = r.u32();
    }
    ctx.vocab.set_entries(static_cast<Field>(f), std::move(entries));
  }
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) {
    Ident name = get_ident(r);
    TypeInfo info;
    info.flags = FlagSet::from_mask(r.u8());
    for (std::uint32_t k = 0, na = r.u32(); k < na; ++k) info.attributes.push_back(get_ident(r));
    ctx.types.emplace(std::move(name), std::move(info));
  }
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) {
    Ident name = get_ident(r);
    const std::uint8_t b = r.u8();
    if (b >= kUidBucketCount) throw Error(ErrorCode::kFormat, "SEPM: bad uid bucket");
    ctx.uids[name] = static_cast<UidBucket>(b);
  }
  ctx.vec_dim = static_cast<int>(r.u32());
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) {
    Ident unit = get_ident(r);
    const std::uint8_t p = r.u8();
    if (p > 1) throw Error(ErrorCode::kFormat, "SEPM: bad polarity");
    std::vector<double> vec(ctx.vec_dim);
    for (double& x : vec) x = r.f64();
    ctx.doc_vecs[{unit, static_cast<Op>(p)}] = std::move(vec);
  }
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) {
    Ident s = get_ident(r);
    ctx.unit_map[s] = get_ident(r);
  }

  Model m;
  m.config = c;
  m.shape = ModelShape::of(ctx);
  if (r.u32() != m.shape.wide_dim) throw Error(ErrorCode::kFormat, "SEPM: wide size mismatch");
  m.wide.w.resize(m.shape.wide_dim);
  for (double& x : m.wide.w) x = r.f32();
  m.wide.b = r.f32();
  for (int f = 0; f < 4; ++f) {
    m.deep.embeddings[f] = get_matrix(r, m.shape.vocab_slots[f], kEmbedDims[f]);
  }
  int in = m.shape.deep_input_dim();
  for (int l = 0; l < 4; ++l) {
    m.deep.weights[l] = get_matrix(r, kHiddenWidths[l], in);
    m.deep.biases[l] = get_matrix(r, kHiddenWidths[l], 1).col(0);
    in = kHiddenWidths[l];
  }
  m.deep.output = get_matrix(r, in, 1).col(0);
  if (!r.done()) throw Error(ErrorCode::kFormat, "SEPM: trailing bytes");
  if (out_ctx) *out_ctx = std::move(ctx);
  return m;
}

}  // namespace sepal
