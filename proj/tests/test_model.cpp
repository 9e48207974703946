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


#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "errors.hpp"
#include "model.hpp"
#include "oracles.hpp"
#include "parsers.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "serialization.hpp"
#include "test_util.hpp"

using namespace sepal;
using sepal_test::fixture;

namespace {

ModelShape small_shape() {
  ModelShape s;
  s.vocab_slots = {6, 7, 3, 5};
  s.hash_buckets = 64;
  s.vec_dim = 5;
  s.wide_dim = 6 + 7 + 3 + 5 + 2 * kFlagCount + kUidBucketCount + s.hash_buckets;
  return s;
}

EncodedExample random_example(const ModelShape& s, Rng& rng) {
  EncodedExample ex;
  for (int f = 0; f < 4; ++f) ex.deep_ids[f] = static_cast<std::uint32_t>(rng.below(s.vocab_slots[f]));
  for (auto& w : ex.wide) w = static_cast<std::uint32_t>(rng.below(s.wide_dim));
  ex.flags = FlagSet::from_mask(static_cast<std::uint8_t>(rng.below(64)));
  ex.uid = static_cast<UidBucket>(rng.below(kUidBucketCount));
  for (int i = 0; i < s.vec_dim; ++i) {
    ex.allow_vec.push_back(rng.uniform(-1, 1));
    ex.neverallow_vec.push_back(rng.uniform(-1, 1));
  }
  ex.label = static_cast<std::uint8_t>(rng.below(2));
  return ex;
}

Model random_model(const ModelShape& s, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  Model m = init_model(s, cfg);
  Rng rng(seed + 1);
  for (double& w : m.wide.w) w = rng.uniform(-0.5, 0.5);
  m.wide.b = 0.1;
  for (int l = 0; l < 4; ++l) {
    for (Eigen::Index i = 0; i < m.deep.biases[l].size(); ++i) m.deep.biases[l](i) = rng.uniform(-0.1, 0.1);
  }
  return m;
}

struct Fixture {
  PolicyDb db;
  TrainingSet train;
  EncoderContext ctx;
  std::vector<EncodedExample> examples;
};

const Fixture& aosp() {
  static const Fixture f = [] {
    Fixture x;
    x.db = parse_cil(fixture("policy/aosp_like.cil"));
    x.train = training_set(x.db, std::nullopt);
    x.ctx = make_context(x.train.atomics, x.db, {}, {}, 4096);
    x.ctx.vec_dim = 4;
    x.examples = encode_all(x.train.atomics, x.ctx);
    return x;
  }();
  return f;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.epochs = 30;
  c.batch_size = 16;
  return c;
}

}  // namespace

TEST_CASE("all-zero weights predict one half") {
  const ModelShape s = small_shape();
  Model m = init_model(s, {});
  for (int f = 0; f < 4; ++f) m.deep.embeddings[f].setZero();
  for (int l = 0; l < 4; ++l) {
    m.deep.weights[l].setZero();
    m.deep.biases[l].setZero();
  }
  m.deep.output.setZero();
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const auto ex = random_example(s, rng);
    CHECK(predict(m, ex) == 0.5);
    CHECK(classify(m, ex) == Op::kAllow);
  }
}

TEST_CASE("probability rises with an active wide weight") {
  const ModelShape s = small_shape();
  Model m = random_model(s, 4);
  Rng rng(2);
  const auto ex = random_example(s, rng);
  double prev = predict(m, ex);
  for (int k = 0; k < 5; ++k) {
    m.wide.w[ex.wide[0]] += 0.3;
    const double p = predict(m, ex);
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("forward pass agrees with a scalar reimplementation") {
  const ModelShape s = small_shape();
  const Model m = random_model(s, 9);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto ex = random_example(s, rng);
    CHECK(std::abs(predict(m, ex) - sepal_test::reference_probability(m, ex)) < 1e-10);
  }
}

TEST_CASE("wide and deep logits add up") {
  const ModelShape s = small_shape();
  Rng rng(5);
  const auto ex = random_example(s, rng);
  Model m = random_model(s, 6);
  Model wide_only = m;
  wide_only.deep.output.setZero();
  CHECK(std::abs(predict(wide_only, ex) - 1.0 / (1.0 + std::exp(-(wide_logit(m, ex) + m.wide.b)))) <
        1e-12);
  Model deep_only = m;
  std::fill(deep_only.wide.w.begin(), deep_only.wide.w.end(), 0.0);
  CHECK(std::abs(predict(deep_only, ex) - 1.0 / (1.0 + std::exp(-(deep_logit(m, ex) + m.wide.b)))) <
        1e-12);
  CHECK(std::abs(predict(m, ex) -
                 1.0 / (1.0 + std::exp(-(wide_logit(m, ex) + deep_logit(m, ex) + m.wide.b)))) < 1e-12);
}

TEST_CASE("gradient check on five random examples") {
  const ModelShape s = small_shape();
  const Model m = random_model(s, 12);
  Rng rng(7);
  std::vector<EncodedExample> ex;
  for (int i = 0; i < 5; ++i) ex.push_back(random_example(s, rng));
  const GradCheck g = gradient_check(m, ex);
  CAPTURE(g.worst_group);
  CHECK(g.max_rel_error < 1e-4);
  CHECK(g.coordinates > 0);
}

TEST_CASE("wide gradient is the logistic residual") {
  const ModelShape s = small_shape();
  const Model m = random_model(s, 13);
  Rng rng(8);
  EncodedExample ex = random_example(s, rng);
  std::sort(ex.wide.begin(), ex.wide.end());
  if (std::adjacent_find(ex.wide.begin(), ex.wide.end()) != ex.wide.end()) {
    for (int k = 0; k < kWideActive; ++k) ex.wide[k] = static_cast<std::uint32_t>(k * 3);
  }
  Gradients g;
  g.wide.assign(s.wide_dim, 0.0);
  loss_and_gradients(m, {&ex}, &g);
  const double residual = predict(m, ex) - ex.label;
  for (auto i : ex.wide) CHECK(std::abs(g.wide[i] - residual) < 1e-12);
  CHECK(std::abs(g.bias - residual) < 1e-12);
  double others = 0.0;
  for (std::uint32_t i = 0; i < s.wide_dim; ++i) {
    if (std::find(ex.wide.begin(), ex.wide.end(), i) == ex.wide.end()) others += std::abs(g.wide[i]);
  }
  CHECK(others == 0.0);
}

TEST_CASE("embedding rows of inactive ids get no gradient") {
  const ModelShape s = small_shape();
  const Model m = random_model(s, 14);
  EncodedExample ex;
  ex.deep_ids = {0, 0, 0, 0};
  ex.wide.fill(0);
  ex.allow_vec.assign(s.vec_dim, 0.0);
  ex.neverallow_vec.assign(s.vec_dim, 0.0);
  Gradients g;
  g.wide.assign(s.wide_dim, 0.0);
  loss_and_gradients(m, {&ex}, &g);
  for (int f = 0; f < 4; ++f) {
    for (Eigen::Index r = 1; r < g.deep.embeddings[f].rows(); ++r) {
      CHECK(g.deep.embeddings[f].row(r).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("training memorizes a single example") {
  const ModelShape s = small_shape();
  Rng rng(15);
  EncodedExample ex = random_example(s, rng);
  ex.label = 1;
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.test_fraction = 0.0;
  cfg.require_both_labels = false;
  const TrainResult r = train({ex}, s, cfg);
  CHECK(predict(r.model, ex) > 0.9);
}

TEST_CASE("single-label data is refused") {
  const ModelShape s = small_shape();
  Rng rng(16);
  std::vector<EncodedExample> ex;
  for (int i = 0; i < 10; ++i) {
    ex.push_back(random_example(s, rng));
    ex.back().label = 0;
  }
  try {
    train(ex, s, {});
    FAIL("expected degenerate data");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateData);
  }
}

TEST_CASE("training lowers the loss") {
  const Fixture& f = aosp();
  const TrainResult r = train(f.examples, ModelShape::of(f.ctx), quick_config());
  REQUIRE(r.epoch_loss.size() == static_cast<std::size_t>(quick_config().epochs) + 1);
  CHECK(r.epoch_loss.back() < r.epoch_loss.front());
  CHECK(r.model.config == quick_config());
  for (const auto& wd : r.model.wide.w) CHECK(std::isfinite(wd));
}

TEST_CASE("training allow atomics are not flagged after convergence") {
  const Fixture& f = aosp();
  TrainConfig cfg = quick_config();
  cfg.epochs = 300;
  cfg.test_fraction = 0.0;
  const TrainResult r = train(f.examples, ModelShape::of(f.ctx), cfg);
  const AtomicSet allows = with_label(f.train.atomics, Op::kAllow);
  CHECK(flag_unregulated(r.model, allows, f.ctx).empty());
}

TEST_CASE("training is bitwise deterministic") {
  const Fixture& f = aosp();
  const TrainResult a = train(f.examples, ModelShape::of(f.ctx), quick_config());
  const TrainResult b = train(f.examples, ModelShape::of(f.ctx), quick_config());
  CHECK(model_to_binary(a.model, f.ctx) == model_to_binary(b.model, f.ctx));
  CHECK(a.epoch_loss == b.epoch_loss);
}

TEST_CASE("model file round trip") {
  const Fixture& f = aosp();
  const TrainResult r = train(f.examples, ModelShape::of(f.ctx), quick_config());
  const std::string bin = model_to_binary(r.model, f.ctx);
  CHECK(bin.substr(0, 4) == "SEPM");
  EncoderContext ctx;
  const Model back = model_from_binary(bin, &ctx);
  CHECK(model_to_binary(back, ctx) == bin);
  CHECK(ctx.vocab == f.ctx.vocab);
  CHECK(back.config == r.model.config);
  for (const auto& ex : f.examples) CHECK(std::abs(predict(back, ex) - predict(r.model, ex)) < 1e-4);
  CHECK_THROWS(model_from_binary(bin.substr(0, bin.size() / 2), &ctx));
}

TEST_CASE("flagging is exactly neverallow-classified allow atomics") {
  const Fixture& f = aosp();
  const TrainResult r = train(f.examples, ModelShape::of(f.ctx), quick_config());
  CHECK(flag_unregulated(r.model, {}, f.ctx).empty());
  const auto findings = flag_unregulated(r.model, f.train.atomics, f.ctx, &f.train.sources, "img");
  std::set<AtomicRule> flagged;
  for (const auto& x : findings) {
    flagged.insert(x.atomic);
    CHECK(x.probability < 0.5);
    CHECK(x.source_image == "img");
    CHECK_FALSE(x.provenance.empty());
  }
  std::set<AtomicRule> want;
  for (const auto& a : f.train.atomics) {
    if (a.label == Op::kAllow && classify(r.model, encode(a, f.ctx)) == Op::kNeverallow) want.insert(a);
  }
  CHECK(flagged == want);
}

TEST_CASE("held-out metrics match a recount") {
  const Fixture& f = aosp();
  const TrainResult r = train(f.examples, ModelShape::of(f.ctx), quick_config());
  const Metrics m = evaluate(r.model, f.examples);
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (const auto& ex : f.examples) {
    const bool pred_never = predict(r.model, ex) < 0.5;
    const bool never = ex.label == 0;
    correct += pred_never == never;
    tp += pred_never && never;
    fp += pred_never && !never;
    fn += !pred_never && never;
  }
  CHECK(m.n == f.examples.size());
  CHECK(m.accuracy == doctest::Approx(double(correct) / f.examples.size()));
  CHECK(m.precision == doctest::Approx(tp + fp ? double(tp) / (tp + fp) : 0.0));
  CHECK(m.recall == doctest::Approx(tp + fn ? double(tp) / (tp + fn) : 0.0));
}

// ---------------------------------------------------------------------------
// Baseline

TEST_CASE("baseline fixtures") {
  const AtomicSet six = atomics_from_jsonl(fixture("baseline/six_of_ten.train.jsonl"));
  const AtomicSet six_t = atomics_from_jsonl(fixture("baseline/six_of_ten.target.jsonl"));
  REQUIRE(six_t.size() == 1);
  const auto v = nn_classify(six, *six_t.begin(), 10, 0.55);
  CHECK(v.verdict == Verdict::kAllow);
  CHECK(v.neighbor_count == 10);
  CHECK(v.majority_fraction == doctest::Approx(0.6));

  const AtomicSet nine = atomics_from_jsonl(fixture("baseline/nine_neighbors.train.jsonl"));
  const AtomicSet nine_t = atomics_from_jsonl(fixture("baseline/nine_neighbors.target.jsonl"));
  const auto u = nn_classify(nine, *nine_t.begin(), 10, 0.55);
  CHECK(u.verdict == Verdict::kUnclassified);
  CHECK(u.neighbor_count == 9);
}

TEST_CASE("neighbor counts match a direct scan") {
  Rng rng(41);
  AtomicSet train;
  auto rnd = [&] {
    return AtomicRule{Ident("s" + std::to_string(rng.below(4))), Ident("t" + std::to_string(rng.below(4))),
                      Ident("c" + std::to_string(rng.below(3))), Ident("p" + std::to_string(rng.below(4))),
                      rng.bernoulli(0.5) ? Op::kAllow : Op::kNeverallow};
  };
  for (int i = 0; i < 150; ++i) train.insert(rnd());
  const NeighborIndex index(train);
  for (int q = 0; q < 200; ++q) {
    const AtomicRule t = rnd();
    std::size_t allow = 0, never = 0;
    for (const auto& a : train) {
      const int same = (a.subject == t.subject) + (a.target == t.target) + (a.cls == t.cls) +
                       (a.permission == t.permission);
      if (same == 3) (a.label == Op::kAllow ? allow : never)++;
    }
    CHECK(index.counts(t) == std::make_pair(allow, never));
  }
}

TEST_CASE("verdict rule") {
  for (std::size_t a = 0; a <= 12; ++a) {
    for (std::size_t n = 0; n <= 12; ++n) {
      for (double sigma : {0.5, 0.55, 0.75}) {
        const auto v = decide(a, n, 10, sigma);
        const std::size_t total = a + n;
        const double frac = total ? double(std::max(a, n)) / total : 0.0;
        const bool unclassified = total < 10 || frac < sigma || a == n;
        CHECK(v.neighbor_count == total);
        CHECK((v.verdict == Verdict::kUnclassified) == unclassified);
        if (!unclassified) CHECK(v.verdict == (a > n ? Verdict::kAllow : Verdict::kNeverallow));
      }
    }
  }
}

TEST_CASE("baseline ignores training order") {
  const std::vector<AtomicRule> base = [] {
    const AtomicSet s = atomics_from_jsonl(fixture("baseline/six_of_ten.train.jsonl"));
    return std::vector<AtomicRule>(s.begin(), s.end());
  }();
  const AtomicRule target = *atomics_from_jsonl(fixture("baseline/six_of_ten.target.jsonl")).begin();
  Rng rng(3);
  const auto want = nn_classify(AtomicSet(base.begin(), base.end()), target);
  for (int i = 0; i < 10; ++i) {
    auto v = base;
    rng.shuffle(v);
    AtomicSet s;
    for (const auto& a : v) s.insert(a);
    const auto got = nn_classify(s, target);
    CHECK(got.verdict == want.verdict);
    CHECK(got.majority_fraction == want.majority_fraction);
  }
}

TEST_CASE("baseline scoring counts unclassified as wrong in the overall accuracy") {
  const AtomicSet train = atomics_from_jsonl(fixture("baseline/six_of_ten.train.jsonl"));
  AtomicSet test = atomics_from_jsonl(fixture("baseline/six_of_ten.target.jsonl"));
  test.insert(*atomics_from_jsonl(fixture("baseline/nine_neighbors.target.jsonl")).begin());
  const auto s = score_baseline(train, test, 10, 0.55);
  CHECK(s.total == 2);
  CHECK(s.unclassified == 1);
  CHECK(s.correct == 1);
  CHECK(s.accuracy_all == doctest::Approx(0.5));
  CHECK(s.accuracy_classified == doctest::Approx(1.0));
}
