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

#include "trajcast/train/trainer.hpp"

#include "trajcast/error.hpp"
#include "trajcast/ndgrad/optim.hpp"
#include "trajcast/parallel.hpp"
#include "trajcast/train/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <random>

namespace trajcast::train
{

namespace nd = ndgrad;
using model::Feed;
using model::Window;

nlohmann::json TrainOptions::to_json() const
{
  return {{"learning_rate", learning_rate}, {"optimizer", "rmsprop"}, {"rms_decay", rms_decay},
          {"epochs", epochs},               {"seed", seed},           {"window_stride", window_stride}};
}

namespace
{

std::vector<std::size_t> by_name(const std::vector<const scene::Scene *> & scenes)
{
  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scenes[a]->name < scenes[b]->name; });
  return order;
}

const StaticContext * context_of(const TrainingScene & s, const ModelConfig & cfg)
{
  if (cfg.mode != model::Mode::SdAtt) return nullptr;
  if (!s.context) throw ContractError(fmt::format("scene '{}' has no likelihood maps for SD-ATT", s.scene.name));
  return &*s.context;
}

}  // namespace

TrainResult train_model(const std::vector<TrainingScene> & scenes, const ModelConfig & cfg,
                        const TrainOptions & options, const nd::ParameterSet * initial, const EpochCallback & on_epoch)
{
  cfg.validate();
  if (!(options.learning_rate >= 0.0)) throw ContractError("train_model: learning rate must be >= 0");

  struct Item
  {
    const Window * window;
    const StaticContext * context;
  };
  std::vector<const scene::Scene *> views;
  for (const auto & s : scenes) views.push_back(&s.scene);
  std::vector<std::vector<Window>> windows(scenes.size());
  std::vector<Item> items;
  for (std::size_t i : by_name(views)) {
    windows[i] = model::extract_windows(scenes[i].scene, cfg.sequence_length(), options.window_stride);
    for (const auto & w : windows[i]) items.push_back({&w, context_of(scenes[i], cfg)});
  }
  if (items.empty()) throw DataError("train_model: no trajectory covers t_obs + n_pred frames");

  TrainResult result;
  result.params = initial ? *initial : model::init_model(cfg, options.seed);
  nd::RmsProp optimizer(options.learning_rate, options.rms_decay);
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto save = [&](const nd::ParameterSet & params) {
    if (options.checkpoint) io::save_checkpoint(*options.checkpoint, model_checkpoint(cfg, options.to_json(), params));
  };

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t terms = 0;
    for (std::size_t k : order) {
      nd::Graph g;
      auto out = model::run_window(g, cfg, result.params, *items[k].window, items[k].context, Feed::Teacher);
      const double loss = out.loss->value().item();
      try {
        if (!std::isfinite(loss)) {
          throw TrainingError(fmt::format("non-finite loss in epoch {} (window at frame {})", epoch + 1,
                                          items[k].window->start_frame));
        }
        auto grads = g.backward(*out.loss);
        nd::validate_gradients(result.params, grads);
        optimizer.step(result.params, grads);
      } catch (const TrainingError &) {
        save(result.params);
        throw;
      }
      total += loss * static_cast<double>(out.terms);
      terms += out.terms;
    }
    const double mean = total / static_cast<double>(terms);
    result.epoch_nll.push_back(mean);
    save(result.params);
    if (on_epoch) on_epoch(epoch + 1, mean);
  }
  return result;
}

io::Checkpoint model_checkpoint(const ModelConfig & cfg, const nlohmann::json & train, const nd::ParameterSet & params)
{
  io::Checkpoint cp;
  cp.config = {{"model", cfg.to_json()}, {"train", train}};
  cp.params = params;
  return cp;
}

ModelConfig checkpoint_model_config(const io::Checkpoint & checkpoint)
{
  if (!checkpoint.config.contains("model")) throw DataError("checkpoint has no model config");
  return ModelConfig::from_json(checkpoint.config.at("model"));
}

nlohmann::json EvalReport::to_json() const
{
  nlohmann::json per = nlohmann::json::array();
  for (const auto & p : predictions) {
    per.push_back({{"subject_id", p.subject_id}, {"start_frame", p.start_frame}, {"ade", p.ade}, {"fde", p.fde}});
  }
  return {{"scene", scene},
          {"ade", ade},
          {"fde", fde},
          {"nll", nll},
          {"forbidden_rate", forbidden_rate},
          {"trajectories", predictions.size()},
          {"skipped_subjects", skipped},
          {"per_trajectory", per},
          {"config", config}};
}

EvalReport evaluate(const TrainingScene & ts, const ModelConfig & cfg, const nd::ParameterSet & params,
                    const EvalOptions & options)
{
  cfg.validate();
  const auto windows = model::extract_windows(ts.scene, cfg.sequence_length(), options.window_stride);
  if (windows.empty()) {
    throw DataError(fmt::format("scene '{}': no trajectory covers {} frames", ts.scene.name, cfg.sequence_length()));
  }
  const StaticContext * ctx = context_of(ts, cfg);

  struct Slot
  {
    std::vector<Prediction> predictions;
    double nll_sum = 0.0;
    std::size_t terms = 0;
  };
  std::vector<Slot> slots(windows.size());
  const std::size_t threads = options.threads ? options.threads : default_thread_count();
  parallel_for(windows.size(), threads, [&](std::size_t i) {
    const auto & w = windows[i];
    std::seed_seq seq{options.seed, static_cast<std::uint64_t>(i)};
    std::mt19937_64 rng(seq);
    nd::Graph g;
    auto out = model::run_window(g, cfg, params, w, ctx, options.feed, &rng);
    nd::Graph tg;
    auto teacher = model::run_window(tg, cfg, params, w, ctx, Feed::Teacher);
    slots[i].nll_sum = teacher.loss->value().item() * static_cast<double>(teacher.terms);
    slots[i].terms = teacher.terms;
    for (std::size_t s = 0; s < w.subjects.size(); ++s) {
      const auto & pos = w.subjects[s].positions;
      Prediction p;
      p.subject_id = w.subjects[s].subject_id;
      p.start_frame = w.start_frame;
      p.observed.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(cfg.t_obs));
      p.truth.assign(pos.begin() + static_cast<std::ptrdiff_t>(cfg.t_obs), pos.end());
      p.predicted = out.predicted[s];
      p.ade = ade({p.predicted}, {p.truth});
      p.fde = fde({p.predicted}, {p.truth});
      slots[i].predictions.push_back(std::move(p));
    }
  });

  EvalReport report;
  report.scene = ts.scene.name;
  Paths pred, truth;
  double nll_sum = 0.0;
  std::size_t terms = 0, inside = 0, points = 0;
  for (auto & slot : slots) {
    nll_sum += slot.nll_sum;
    terms += slot.terms;
    for (auto & p : slot.predictions) {
      pred.push_back(p.predicted);
      truth.push_back(p.truth);
      inside += count_inside(p.predicted, ts.scene.forbidden_zones);
      points += p.predicted.size();
      report.predictions.push_back(std::move(p));
    }
  }
  std::set<std::int64_t> covered;
  for (const auto & p : report.predictions) covered.insert(p.subject_id);
  for (const auto & t : ts.scene.trajectories) report.skipped += !covered.contains(t.subject_id);
  report.ade = ade(pred, truth);
  report.fde = fde(pred, truth);
  report.nll = nll_sum / static_cast<double>(terms);
  report.forbidden_rate = static_cast<double>(inside) / static_cast<double>(points);
  report.config = {{"model", cfg.to_json()},
                   {"feed", options.feed == Feed::Mean ? "mean" : options.feed == Feed::Sample ? "sample" : "teacher"},
                   {"seed", options.seed},
                   {"window_stride", options.window_stride}};
  return report;
}

std::string to_string(MapSource source)
{
  return source == MapSource::Sscn ? "sscn" : "ground-truth";
}

MapSource parse_map_source(const std::string & text)
{
  if (text == "sscn") return MapSource::Sscn;
  if (text == "ground-truth") return MapSource::GroundTruth;
  throw ConfigError(fmt::format("unknown map source '{}' (expected sscn or ground-truth)", text));
}

namespace
{
bool has_class(const scene::Scene & s, std::uint32_t cls)
{
  return std::any_of(s.trajectories.begin(), s.trajectories.end(),
                     [&](const scene::Trajectory & t) { return t.subject_class.id == cls; });
}
}  // namespace

std::vector<StaticContext> build_contexts(const std::vector<scene::Scene> & scenes,
                                          const std::vector<std::size_t> & train, std::uint32_t class_count,
                                          const MapOptions & options)
{
  std::vector<StaticContext> out(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) out[i].grid = scene::GridSpec::for_scene(scenes[i], options.cell_size);

  if (options.source == MapSource::GroundTruth) {
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      for (std::uint32_t c = 0; c < class_count; ++c) {
        out[i].maps.push_back(has_class(scenes[i], c)
                                ? scene::build_ground_truth_map(scenes[i], {c}, out[i].grid)
                                : scene::LikelihoodMap({c}, out[i].grid.rows, out[i].grid.cols));
      }
    }
    return out;
  }

  auto sscn_cfg = options.sscn;
  sscn_cfg.class_count = class_count;
  std::vector<const scene::Scene *> views;
  for (std::size_t i : train) views.push_back(&scenes.at(i));
  std::vector<sscn::SscnExample> dataset;
  for (std::size_t k : by_name(views)) {
    const auto & s = *views[k];
    auto part = sscn::make_sscn_dataset(sscn_cfg, s, scene::GridSpec::for_scene(s, options.cell_size));
    dataset.insert(dataset.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  if (dataset.empty()) throw DataError("build_contexts: no training scene for the scene network");
  auto net = sscn::train_sscn(sscn_cfg, dataset, options.sscn_train);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    for (std::uint32_t c = 0; c < class_count; ++c) {
      out[i].maps.push_back(sscn::build_map(sscn_cfg, net.params, scenes[i], {c}, out[i].grid, options.threads));
    }
  }
  return out;
}

FoldContexts loo_contexts(const std::vector<scene::Scene> & scenes, std::uint32_t class_count,
                          const MapOptions & options)
{
  FoldContexts folds;
  for (std::size_t held = 0; held < scenes.size(); ++held) {
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      if (i != held) train.push_back(i);
    }
    folds.push_back(build_contexts(scenes, train, class_count, options));
  }
  return folds;
}

std::vector<EvalReport> leave_one_out(const std::vector<scene::Scene> & scenes, const ModelConfig & cfg,
                                      const LooOptions & options, const FoldContexts * contexts)
{
  if (scenes.size() < 2) throw ContractError("leave_one_out: needs at least 2 scenes");
  FoldContexts own;
  if (cfg.mode == model::Mode::SdAtt && contexts == nullptr) {
    own = loo_contexts(scenes, cfg.class_count, options.maps);
    contexts = &own;
  }
  if (contexts && contexts->size() != scenes.size()) {
    throw ContractError(fmt::format("leave_one_out: {} fold contexts for {} scenes", contexts->size(), scenes.size()));
  }
  std::vector<EvalReport> reports;
  for (std::size_t held = 0; held < scenes.size(); ++held) {
    auto with_context = [&](std::size_t i) {
      TrainingScene ts{scenes[i], std::nullopt};
      if (cfg.mode == model::Mode::SdAtt) ts.context = (*contexts)[held].at(i);
      return ts;
    };
    std::vector<TrainingScene> train;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      if (i != held) train.push_back(with_context(i));
    }
    auto trained = train_model(train, cfg, options.train);
    auto report = evaluate(with_context(held), cfg, trained.params, options.eval);
    report.config["train"] = options.train.to_json();
    report.config["maps"] = to_string(options.maps.source);
    reports.push_back(std::move(report));
  }
  return reports;
}

void write_svg(std::ostream & out, const scene::Scene & s, const std::vector<Prediction> & predictions)
{
  const double w = static_cast<double>(s.width());
  const double h = static_cast<double>(s.height());
  out << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">)", w, h,
                     w, h)
      << "\n";
  out << fmt::format(R"(<rect width="{}" height="{}" fill="#f4f1ea"/>)", w, h) << "\n";
  for (const auto & r : s.forbidden_zones) {
    out << fmt::format(R"(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" fill="#2f5a2f"/>)", r.x0 * w,
                       r.y0 * h, (r.x1 - r.x0) * w, (r.y1 - r.y0) * h)
        << "\n";
  }
  auto polyline = [&](const std::vector<scene::Point2> & pts, const char * colour, std::optional<scene::Point2> from) {
    std::string d;
    if (from) d += fmt::format("{:.2f},{:.2f} ", from->x * w, from->y * h);
    for (const auto & p : pts) d += fmt::format("{:.2f},{:.2f} ", p.x * w, p.y * h);
    out << fmt::format(R"(<polyline points="{}" fill="none" stroke="{}" stroke-width="1"/>)", d, colour) << "\n";
  };
  for (const auto & p : predictions) {
    polyline(p.observed, "#777777", std::nullopt);
    std::optional<scene::Point2> last;
    if (!p.observed.empty()) last = p.observed.back();
    polyline(p.truth, "#1a8f3a", last);
    polyline(p.predicted, "#d0312d", last);
  }
  out << "</svg>\n";
}

}  // namespace trajcast::train
