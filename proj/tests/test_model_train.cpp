// Copyright 2026  The adpit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "adpit/train.hpp"
#include "oracles.hpp"

using namespace adpit;

namespace {

SceneConfig small_scene() {
  SceneConfig cfg;
  cfg.n_classes = 4;
  cfg.n_frames = 40;
  cfg.feature_dim = 32;
  cfg.n_events = 6;
  return cfg;
}

// Scalar objective sum_o w_o * y_o(x) of one frame.
double weighted_output(const ToyModel& m, std::span<const double> x, std::span<const double> w) {
  ToyModel::Activations a;
  m.forward(x, a);
  double s = 0.0;
  for (std::size_t o = 0; o < w.size(); ++o) s += w[o] * a.y[o];
  return s;
}

}  // namespace

TEST(Model, OutputsBoundedAndNearZeroAtInit) {
  ToyModel m(ModelShape{16, 32, 3, 4});
  m.initialize(1);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> x(16);
  for (auto& v : x) v = g(rng);
  ToyModel::Activations a;
  m.forward(x, a);
  ASSERT_EQ(a.y.size(), 36u);
  for (double y : a.y) {
    EXPECT_GT(y, -1.0);
    EXPECT_LT(y, 1.0);
    EXPECT_LT(std::abs(y), 0.5);
  }
}

TEST(Model, BackpropMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    ToyModel m(ModelShape{8, 12, 2, 3});
    m.initialize(static_cast<std::uint64_t>(trial), 1.0);
    for (auto& p : m.parameters()) p += 0.1 * g(rng);  // non-zero biases too
    std::vector<double> x(8), w(m.shape().output_dim());
    for (auto& v : x) v = g(rng);
    for (auto& v : w) v = g(rng);

    std::vector<double> grad(m.parameters().size(), 0.0);
    ToyModel::Activations a;
    m.forward(x, a);
    m.backward(x, a, w, grad);

    const double h = 1e-5;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double keep = m.parameters()[i];
      m.parameters()[i] = keep + h;
      const double up = weighted_output(m, x, w);
      m.parameters()[i] = keep - h;
      const double down = weighted_output(m, x, w);
      m.parameters()[i] = keep;
      const double fd = (up - down) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
      EXPECT_LT(std::abs(fd - grad[i]) / denom, 1e-4) << "parameter " << i;
    }
  }
}

TEST(Model, LossGradientThroughPitMatchesFiniteDifferences) {
  const SceneConfig sc = small_scene();
  const Scene scene = generate_scene(sc);
  TrainConfig cfg;
  cfg.hidden = 10;
  ToyModel m = make_model(cfg, sc.feature_dim, sc.n_classes);
  for (auto& p : m.parameters()) p *= 3.0;  // leave the near-zero regime
  const std::vector<Scene> scenes{scene};
  const auto pool = detail::pool_frames(scenes, sc.n_classes, cfg);
  const std::vector<int> frames{3, 8, 12, 20, 21};
  std::vector<double> grad(m.parameters().size(), 0.0);
  batch_loss_and_gradient(m, pool, frames, cfg, grad);
  const double h = 1e-6;
  std::vector<double> scratch(grad.size());
  for (std::size_t i = 0; i < grad.size(); i += 7) {
    const double keep = m.parameters()[i];
    m.parameters()[i] = keep + h;
    const double up = batch_loss_and_gradient(m, pool, frames, cfg, scratch);
    m.parameters()[i] = keep - h;
    const double down = batch_loss_and_gradient(m, pool, frames, cfg, scratch);
    m.parameters()[i] = keep;
    const double fd = (up - down) / (2 * h);
    EXPECT_LT(std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-7}), 1e-4) << i;
  }
}

TEST(Model, CheckpointRoundTrip) {
  ToyModel m(ModelShape{6, 5, 3, 2});
  m.initialize(9);
  std::stringstream buf;
  save_checkpoint(buf, m);
  EXPECT_EQ(buf.str().substr(0, 11), "ADPITCKPT1\n");
  const ToyModel back = load_checkpoint(buf);
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.shape(), m.shape());

  std::istringstream junk("NOTACHECKPOINT");
  EXPECT_THROW(load_checkpoint(junk), DataError);
  std::string bytes;
  {
    std::stringstream b2;
    save_checkpoint(b2, m);
    bytes = b2.str();
  }
  std::istringstream cut(bytes.substr(0, bytes.size() - 10));
  EXPECT_THROW(load_checkpoint(cut), DataError);
}

TEST(Adam, ZeroLearningRateKeepsParameters) {
  const SceneConfig sc = small_scene();
  const std::vector<Scene> scenes{generate_scene(sc)};
  TrainConfig cfg;
  cfg.hidden = 16;
  cfg.epochs = 3;
  cfg.learning_rate = 0.0;
  ToyModel m = make_model(cfg, sc.feature_dim, sc.n_classes);
  const ToyModel before = m;
  train(m, scenes, {}, cfg);
  EXPECT_EQ(m, before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // bias correction makes the first update exactly lr * sign(g) (up to eps)
  Adam adam(3, 0.01);
  std::vector<double> p{1.0, 2.0, 3.0}, g{0.5, -2.0, 0.0};
  adam.step(p, g);
  EXPECT_NEAR(p[0], 0.99, 1e-9);
  EXPECT_NEAR(p[1], 2.01, 1e-9);
  EXPECT_EQ(p[2], 3.0);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(Train, OverfitsOneSceneWithAdpit) {
  SceneConfig sc = small_scene();
  sc.same_class_overlap_prob = 0.5;
  const std::vector<Scene> scenes{generate_scene(sc)};
  TrainConfig cfg;
  cfg.hidden = 64;
  cfg.batch_size = sc.n_frames;  // one step per epoch
  cfg.epochs = 5000;
  cfg.learning_rate = 3e-3;
  cfg.validate_each_epoch = false;
  ToyModel m = make_model(cfg, sc.feature_dim, sc.n_classes);
  const auto log = train(m, scenes, {}, cfg);
  double best = log.epochs.front().train_loss;
  for (const auto& e : log.epochs) best = std::min(best, e.train_loss);
  EXPECT_LT(best, 1e-3);
}

TEST(Train, DeterministicTrajectory) {
  const SceneConfig sc = small_scene();
  const std::vector<Scene> scenes{generate_scene(sc)};
  TrainConfig cfg;
  cfg.hidden = 16;
  cfg.epochs = 4;
  cfg.seed = 5;
  ToyModel a = make_model(cfg, sc.feature_dim, sc.n_classes);
  ToyModel b = make_model(cfg, sc.feature_dim, sc.n_classes);
  const auto la = train(a, scenes, scenes, cfg);
  const auto lb = train(b, scenes, scenes, cfg);
  EXPECT_EQ(a, b);
  std::ostringstream oa, ob;
  write_training_log(oa, cfg, la);
  write_training_log(ob, cfg, lb);
  EXPECT_EQ(oa.str(), ob.str());
  EXPECT_NE(oa.str().find("epoch=4 loss="), std::string::npos);
}

TEST(Train, RejectsMismatchedModel) {
  const SceneConfig sc = small_scene();
  const std::vector<Scene> scenes{generate_scene(sc)};
  TrainConfig cfg;
  cfg.format = OutputFormat::Single;
  ToyModel m(ModelShape{sc.feature_dim, 8, 3, sc.n_classes});
  EXPECT_THROW(train(m, scenes, {}, cfg), ContractError);
}

TEST(Compare, UntrainedModelRecallsNothingAndSingleBoundHolds) {
  const SceneConfig sc = small_scene();
  const std::vector<Scene> scenes{generate_scene(sc)};
  TrainConfig cfg;
  cfg.hidden = 16;
  const ToyModel m = make_model(cfg, sc.feature_dim, sc.n_classes);
  const auto s = evaluate_model(m, scenes, cfg.inference, cfg.match);
  EXPECT_LT(s.overall.lr_cd.value_or(0.0), 0.05);

  CompareConfig cc;
  cc.scene = sc;
  cc.scene.same_class_overlap_prob = 0.6;
  cc.n_train_scenes = 3;
  cc.n_val_scenes = 2;
  cc.train.hidden = 16;
  cc.train.epochs = 2;
  cc.seeds = {0};
  const auto report = compare_formats(cc);
  ASSERT_EQ(report.seeds.size(), 1u);
  ASSERT_EQ(report.seeds[0].formats.size(), 4u);
  const auto& single = report.seeds[0].formats[0];
  EXPECT_EQ(single.label, "single");
  EXPECT_TRUE(single.recall_bound_holds);
  if (single.lr_exactly_two) {
    EXPECT_LE(*single.lr_exactly_two, 0.5);
  }
  std::ostringstream a, b;
  write_compare_report(a, report);
  write_compare_report(b, compare_formats(cc));
  EXPECT_EQ(a.str(), b.str());
}
