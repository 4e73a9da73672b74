// Copyright 2026 The trajcast Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trajcast/error.hpp"
#include "trajcast/io/checkpoint.hpp"
#include "trajcast/train/metrics.hpp"
#include "trajcast/train/synth.hpp"
#include "trajcast/train/trainer.hpp"

#include <fmt/core.h>
#include <gtest/gtest.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

using namespace trajcast::train;
using trajcast::model::Mode;
using trajcast::scene::Point2;
namespace fs = std::filesystem;
namespace nd = trajcast::ndgrad;

namespace
{

ModelConfig tiny(Mode mode = Mode::DAtt)
{
  ModelConfig cfg;
  cfg.mode = mode;
  cfg.hidden_dim = 8;
  cfg.window = 3;
  cfg.t_obs = 4;
  cfg.n_pred = 3;
  cfg.pos_embed = 4;
  cfg.social_embed = 4;
  cfg.reach_embed = 3;
  cfg.attention_dim = 4;
  cfg.social_grid = 2;
  cfg.neighborhood = 0.4;
  return cfg;
}

trajcast::scene::Scene small_scene(std::uint64_t seed, std::size_t subjects = 4)
{
  SynthSpec spec;
  spec.subjects = subjects;
  spec.length = 9;
  spec.frames = 4;
  spec.seed = seed;
  return generate_synth(spec);
}

std::string bytes_of(const trajcast::io::Checkpoint & cp)
{
  std::ostringstream out;
  trajcast::io::write_checkpoint(out, cp);
  return out.str();
}

fs::path temp_path(const std::string & name)
{
  return fs::temp_directory_path() / fmt::format("trajcast_test_{}_{}", ::getpid(), name);
}

trajcast::scene::Scene from_paths(const std::string & name, const std::vector<std::vector<Point2>> & paths,
                                  std::int64_t start = 0)
{
  trajcast::scene::Scene s;
  s.name = name;
  s.image = trajcast::scene::Raster(3, 16, 16);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    trajcast::scene::Trajectory t;
    t.subject_id = static_cast<std::int64_t>(i + 1);
    for (std::size_t k = 0; k < paths[i].size(); ++k) {
      t.points.push_back({start + static_cast<std::int64_t>(k), paths[i][k]});
    }
    s.trajectories.push_back(t);
  }
  return s;
}

}  // namespace

TEST(Synth, NoiseFreeConstantVelocityIsLinear)
{
  SynthSpec spec;
  spec.noise = 0.0;
  spec.seed = 3;
  auto s = generate_synth(spec);
  ASSERT_EQ(s.trajectories.size(), spec.subjects);
  for (const auto & t : s.trajectories) {
    ASSERT_EQ(t.points.size(), spec.length);
    for (std::size_t k = 2; k < t.points.size(); ++k) {
      const auto & a = t.points[k - 2].position;
      const auto & b = t.points[k - 1].position;
      const auto & c = t.points[k].position;
      EXPECT_NEAR(c.x - 2.0 * b.x + a.x, 0.0, 1e-12);
      EXPECT_NEAR(c.y - 2.0 * b.y + a.y, 0.0, 1e-12);
      EXPECT_EQ(t.points[k].frame, t.points[k - 1].frame + 1);
    }
  }
}

TEST(Synth, SameSeedSameScene)
{
  for (auto kind : {SynthKind::ConstantVelocity, SynthKind::CrossingGroups, SynthKind::ObstacleField,
                    SynthKind::RingRoad}) {
    SynthSpec spec;
    spec.kind = kind;
    spec.seed = 42;
    EXPECT_EQ(generate_synth(spec), generate_synth(spec)) << to_string(kind);
    auto other = spec;
    other.seed = 43;
    EXPECT_NE(generate_synth(spec).trajectories, generate_synth(other).trajectories) << to_string(kind);
  }
}

TEST(Synth, ObstacleFieldAvoidsZones)
{
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthSpec spec;
    spec.kind = SynthKind::ObstacleField;
    spec.zones = 1 + seed % 4;
    spec.noise = 0.02;
    spec.seed = seed;
    auto s = generate_synth(spec);
    ASSERT_EQ(s.forbidden_zones.size(), spec.zones);
    std::vector<Point2> all;
    for (const auto & t : s.trajectories) {
      for (const auto & p : t.points) all.push_back(p.position);
    }
    EXPECT_EQ(count_inside(all, s.forbidden_zones), 0u);
    s.validate();
  }
}

TEST(Synth, ImageEncodesZones)
{
  SynthSpec spec;
  spec.kind = SynthKind::ObstacleField;
  spec.seed = 1;
  auto s = generate_synth(spec);
  const auto & z = s.forbidden_zones.front();
  const auto W = static_cast<double>(s.width());
  auto px = [&](double x, double y) {
    const auto r = static_cast<std::size_t>(y * W);
    const auto c = static_cast<std::size_t>(x * W);
    return s.image(0, r, c) + s.image(1, r, c) + s.image(2, r, c);
  };
  const double inside = px((z.x0 + z.x1) / 2, (z.y0 + z.y1) / 2);
  const double outside = px(0.05, 0.05);
  EXPECT_GT(std::abs(inside - outside), 0.2);
}

TEST(Synth, ConfigRoundTripAndErrors)
{
  SynthSpec spec;
  spec.kind = SynthKind::RingRoad;
  spec.noise = 0.0;
  spec.seed = 9;
  auto back = SynthSpec::from_json(spec.to_json());
  EXPECT_EQ(back.to_json(), spec.to_json());
  EXPECT_THROW(SynthSpec::from_json({{"subjectz", 3}}), trajcast::ConfigError);
  EXPECT_THROW(parse_synth_kind("zigzag"), trajcast::ConfigError);
  SynthSpec bad;
  bad.subjects = 0;
  EXPECT_THROW(generate_synth(bad), trajcast::ContractError);
}

TEST(Metrics, Identity)
{
  Paths p{{{0.1, 0.2}, {0.3, 0.4}}, {{0.5, 0.5}, {0.6, 0.6}}};
  EXPECT_EQ(ade(p, p), 0.0);
  EXPECT_EQ(fde(p, p), 0.0);
}

TEST(Metrics, ConstantOffset)
{
  Paths truth{{{0.1, 0.1}, {0.2, 0.1}, {0.3, 0.1}}};
  Paths pred = truth;
  for (auto & q : pred[0]) q.x += 0.1;
  EXPECT_NEAR(ade(pred, truth), 0.1, 1e-12);
  EXPECT_NEAR(fde(pred, truth), 0.1, 1e-12);
}

TEST(Metrics, GrowingOffset)
{
  Paths truth{{{0.5, 0.5}, {0.5, 0.5}}};
  Paths pred{{{0.5, 0.5}, {0.5, 0.7}}};
  EXPECT_NEAR(ade(pred, truth), 0.1, 1e-12);
  EXPECT_NEAR(fde(pred, truth), 0.2, 1e-12);
}

TEST(Metrics, PooledMeanAndBounds)
{
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Paths pred(5), truth(5);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t k = 0; k < 6; ++k) {
      pred[i].push_back({u(rng), u(rng)});
      truth[i].push_back({u(rng), u(rng)});
    }
  }
  double sum = 0.0, max = 0.0, last = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t k = 0; k < 6; ++k) {
      const double d = std::hypot(pred[i][k].x - truth[i][k].x, pred[i][k].y - truth[i][k].y);
      sum += d;
      max = std::max(max, d);
      if (k == 5) last += d;
    }
  }
  EXPECT_NEAR(ade(pred, truth), sum / 30.0, 1e-12);
  EXPECT_LE(ade(pred, truth), max);
  EXPECT_NEAR(fde(pred, truth), last / 5.0, 1e-12);
}

TEST(Metrics, MismatchIsContractError)
{
  Paths a{{{0, 0}, {1, 1}}};
  Paths b{{{0, 0}}};
  Paths c{{{0, 0}, {1, 1}}, {{0, 0}, {1, 1}}};
  EXPECT_THROW(ade(a, b), trajcast::ContractError);
  EXPECT_THROW(fde(a, c), trajcast::ContractError);
  EXPECT_THROW(ade({}, {}), trajcast::ContractError);
  EXPECT_THROW(ade({{}}, {{}}), trajcast::ContractError);
}

TEST(Train, ZeroLearningRateKeepsLoss)
{
  TrainOptions opts;
  opts.learning_rate = 0.0;
  opts.epochs = 3;
  opts.seed = 2;
  auto res = train_model({{small_scene(1), std::nullopt}}, tiny(), opts);
  ASSERT_EQ(res.epoch_nll.size(), 3u);
  // Window order is reshuffled each epoch, so only the summation order changes.
  EXPECT_DOUBLE_EQ(res.epoch_nll[0], res.epoch_nll[1]);
  EXPECT_DOUBLE_EQ(res.epoch_nll[1], res.epoch_nll[2]);
  EXPECT_EQ(res.params, trajcast::model::init_model(tiny(), 2));
}

TEST(Train, SameSeedSameCheckpointBytes)
{
  TrainOptions opts;
  opts.epochs = 2;
  opts.seed = 5;
  auto cfg = tiny();
  std::vector<TrainingScene> scenes{{small_scene(1), std::nullopt}, {small_scene(2), std::nullopt}};
  auto a = train_model(scenes, cfg, opts);
  auto b = train_model(scenes, cfg, opts);
  EXPECT_EQ(bytes_of(model_checkpoint(cfg, opts.to_json(), a.params)),
            bytes_of(model_checkpoint(cfg, opts.to_json(), b.params)));
  opts.seed = 6;
  auto c = train_model(scenes, cfg, opts);
  EXPECT_NE(a.params, c.params);
}

TEST(Train, LossDecreasesAndCallbackIsOneBased)
{
  TrainOptions opts;
  opts.epochs = 4;
  opts.seed = 1;
  opts.learning_rate = 0.01;
  std::vector<std::size_t> seen;
  auto res = train_model({{small_scene(3, 8), std::nullopt}}, tiny(), opts, nullptr,
                         [&](std::size_t e, double) { seen.push_back(e); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3, 4}));
  EXPECT_LT(res.epoch_nll.back(), res.epoch_nll.front());
}

TEST(Train, TeacherForcedEvalMatchesTrainingLoss)
{
  // One window per scene, so both sides evaluate the same expression.
  auto cfg = tiny();
  auto s = from_paths("one", {{{0.1, 0.1}, {0.12, 0.11}, {0.14, 0.12}, {0.16, 0.13}, {0.18, 0.14}, {0.2, 0.15}, {0.22, 0.16}},
                              {{0.6, 0.3}, {0.6, 0.32}, {0.61, 0.34}, {0.6, 0.36}, {0.6, 0.38}, {0.61, 0.4}, {0.6, 0.42}}});
  TrainOptions opts;
  opts.learning_rate = 0.0;
  opts.epochs = 1;
  opts.seed = 8;
  auto res = train_model({{s, std::nullopt}}, cfg, opts);
  auto report = evaluate({s, std::nullopt}, cfg, res.params);
  EXPECT_EQ(report.nll, res.epoch_nll[0]);
}

TEST(Train, NonFiniteLossAbortsWithLastGoodCheckpoint)
{
  const auto path = temp_path("nan.ckpt");
  TrainOptions opts;
  opts.learning_rate = 1e300;
  opts.epochs = 3;
  opts.seed = 1;
  opts.checkpoint = path;
  EXPECT_THROW(train_model({{small_scene(1, 6), std::nullopt}}, tiny(), opts), trajcast::TrainingError);
  ASSERT_TRUE(fs::exists(path));
  auto cp = trajcast::io::load_checkpoint(path);
  for (const auto & [name, t] : cp.params) {
    for (double v : t.data()) ASSERT_TRUE(std::isfinite(v)) << name;
  }
  EXPECT_EQ(checkpoint_model_config(cp).to_json(), tiny().to_json());
  fs::remove(path);
}

TEST(Train, CheckpointRoundTripReproducesPredictions)
{
  auto cfg = tiny();
  auto s = small_scene(4, 5);
  TrainOptions opts;
  opts.epochs = 1;
  opts.seed = 3;
  auto res = train_model({{s, std::nullopt}}, cfg, opts);
  const auto path = temp_path("round.ckpt");
  trajcast::io::save_checkpoint(path, model_checkpoint(cfg, opts.to_json(), res.params));
  auto cp = trajcast::io::load_checkpoint(path);
  fs::remove(path);
  auto cfg2 = checkpoint_model_config(cp);
  auto windows = trajcast::model::extract_windows(s, cfg.sequence_length());
  ASSERT_FALSE(windows.empty());
  nd::Graph g1, g2;
  auto a = trajcast::model::run_window(g1, cfg, res.params, windows[0], nullptr, trajcast::model::Feed::Mean);
  auto b = trajcast::model::run_window(g2, cfg2, cp.params, windows[0], nullptr, trajcast::model::Feed::Mean);
  ASSERT_EQ(a.theta.size(), b.theta.size());
  for (std::size_t i = 0; i < a.theta.size(); ++i) {
    EXPECT_EQ(a.theta[i][0].mu.x, b.theta[i][0].mu.x);
    EXPECT_EQ(a.theta[i][0].mu.y, b.theta[i][0].mu.y);
    EXPECT_EQ(a.theta[i][0].sigma_x, b.theta[i][0].sigma_x);
    EXPECT_EQ(a.theta[i][0].rho, b.theta[i][0].rho);
    EXPECT_EQ(a.predicted[i], b.predicted[i]);
  }
}

TEST(Train, StationarySubjectStaysPut)
{
  auto cfg = tiny();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.2, 0.8);
  std::normal_distribution<double> jitter(0.0, 0.002);
  std::vector<TrainingScene> scenes;
  for (int k = 0; k < 6; ++k) {
    std::vector<std::vector<Point2>> paths;
    for (int i = 0; i < 3; ++i) {
      const Point2 at{u(rng), u(rng)};
      std::vector<Point2> p;
      for (int t = 0; t < 12; ++t) p.push_back({at.x + jitter(rng), at.y + jitter(rng)});
      paths.push_back(p);
    }
    scenes.push_back({from_paths(fmt::format("still-{}", k), paths), std::nullopt});
  }
  TrainOptions opts;
  opts.epochs = 15;
  opts.learning_rate = 0.01;
  opts.seed = 2;
  auto res = train_model(scenes, cfg, opts);

  const Point2 at{0.45, 0.55};
  auto probe = from_paths("probe", {std::vector<Point2>(cfg.sequence_length(), at)});
  auto report = evaluate({probe, std::nullopt}, cfg, res.params);
  ASSERT_EQ(report.predictions.size(), 1u);
  double disp = 0.0;
  for (const auto & q : report.predictions[0].predicted) disp += std::hypot(q.x - at.x, q.y - at.y);
  disp /= static_cast<double>(cfg.n_pred);
  EXPECT_LT(disp, 0.05);
}

TEST(Eval, PerfectPredictionReport)
{
  auto cfg = tiny();
  auto s = small_scene(6, 3);
  auto report = evaluate({s, std::nullopt}, cfg, trajcast::model::zero_model(cfg));
  EXPECT_GE(report.ade, 0.0);
  EXPECT_GE(report.fde, 0.0);
  EXPECT_FALSE(report.predictions.empty());
  for (const auto & p : report.predictions) {
    EXPECT_EQ(p.observed.size(), cfg.t_obs);
    EXPECT_EQ(p.truth.size(), cfg.n_pred);
    EXPECT_EQ(p.predicted.size(), cfg.n_pred);
  }
  auto j = report.to_json();
  EXPECT_EQ(j.at("scene"), s.name);
  EXPECT_TRUE(j.contains("per_trajectory"));
}

TEST(Eval, ThreadCountInvariant)
{
  auto cfg = tiny();
  auto s = small_scene(7, 6);
  auto params = trajcast::model::init_model(cfg, 4);
  EvalOptions one, many;
  one.threads = 1;
  many.threads = 3;
  one.feed = many.feed = trajcast::model::Feed::Sample;
  EXPECT_EQ(evaluate({s, std::nullopt}, cfg, params, one).to_json(),
            evaluate({s, std::nullopt}, cfg, params, many).to_json());
}

TEST(Eval, SceneWithoutWindowsIsDataError)
{
  auto s = from_paths("short", {{{0.1, 0.1}, {0.2, 0.2}}});
  EXPECT_THROW(evaluate({s, std::nullopt}, tiny(), trajcast::model::zero_model(tiny())), trajcast::DataError);
}

TEST(LeaveOneOut, OneReportPerScene)
{
  std::vector<trajcast::scene::Scene> scenes{small_scene(1), small_scene(2), small_scene(3)};
  LooOptions opts;
  opts.train.epochs = 1;
  opts.train.seed = 4;
  auto reports = leave_one_out(scenes, tiny(), opts);
  ASSERT_EQ(reports.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(reports[i].scene, scenes[i].name);
}

TEST(LeaveOneOut, IndependentOfSceneOrder)
{
  std::vector<trajcast::scene::Scene> scenes{small_scene(1), small_scene(2), small_scene(3)};
  LooOptions opts;
  opts.train.epochs = 1;
  opts.train.seed = 4;
  auto a = leave_one_out(scenes, tiny(), opts);
  std::reverse(scenes.begin(), scenes.end());
  auto b = leave_one_out(scenes, tiny(), opts);
  std::vector<std::string> ja, jb;
  for (const auto & r : a) ja.push_back(r.to_json().dump());
  for (const auto & r : b) jb.push_back(r.to_json().dump());
  std::sort(ja.begin(), ja.end());
  std::sort(jb.begin(), jb.end());
  EXPECT_EQ(ja, jb);
}

TEST(LeaveOneOut, NeedsTwoScenes)
{
  EXPECT_THROW(leave_one_out({small_scene(1)}, tiny(), {}), trajcast::ContractError);
}

TEST(LeaveOneOut, SdAttWithGroundTruthMaps)
{
  SynthSpec spec;
  spec.kind = SynthKind::ObstacleField;
  spec.subjects = 6;
  spec.length = 9;
  spec.frames = 4;
  std::vector<trajcast::scene::Scene> scenes;
  for (std::uint64_t seed : {1, 2}) {
    spec.seed = seed;
    scenes.push_back(generate_synth(spec));
  }
  LooOptions opts;
  opts.train.epochs = 1;
  opts.maps.source = MapSource::GroundTruth;
  auto reports = leave_one_out(scenes, tiny(Mode::SdAtt), opts);
  ASSERT_EQ(reports.size(), 2u);
  for (const auto & r : reports) {
    EXPECT_TRUE(std::isfinite(r.ade));
    EXPECT_GE(r.forbidden_rate, 0.0);
    EXPECT_LE(r.forbidden_rate, 1.0);
  }
}

TEST(Svg, WritesOverlay)
{
  auto s = small_scene(1, 2);
  auto report = evaluate({s, std::nullopt}, tiny(), trajcast::model::zero_model(tiny()));
  std::ostringstream out;
  write_svg(out, s, report.predictions);
  const auto svg = out.str();
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Defaults, Hyperparameters)
{
  ModelConfig cfg;
  EXPECT_EQ(cfg.t_obs, 8u);
  EXPECT_EQ(cfg.window, 5u);
  EXPECT_EQ(cfg.n_pred, 12u);
  EXPECT_EQ(cfg.reach_distance, 60u);
  EXPECT_EQ(cfg.max_neighbors, 40u);
  TrainOptions train;
  EXPECT_EQ(train.learning_rate, 0.003);
  trajcast::sscn::SscnTrainOptions sscn;
  EXPECT_EQ(sscn.learning_rate, 0.002);
  EXPECT_EQ(sscn.batch_size, 32u);
  EXPECT_EQ(trajcast::scene::GridSpec{}.cell_size, 60u);
}
