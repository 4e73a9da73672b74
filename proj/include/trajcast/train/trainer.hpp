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

#ifndef TRAJCAST__TRAIN__TRAINER_HPP_
#define TRAJCAST__TRAIN__TRAINER_HPP_

#include "trajcast/io/checkpoint.hpp"
#include "trajcast/model/rollout.hpp"
#include "trajcast/sscn/sscn.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

namespace trajcast::train
{

using model::ModelConfig;
using model::StaticContext;

/// A scene plus, for SD-ATT, its per-class likelihood maps.
struct TrainingScene
{
  scene::Scene scene;
  std::optional<StaticContext> context;
};

struct TrainOptions
{
  double learning_rate = 0.003;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  std::int64_t window_stride = 1;
  double rms_decay = 0.9;
  /// Written after every epoch; on failure it holds the last good parameters.
  std::optional<std::filesystem::path> checkpoint;

  nlohmann::json to_json() const;
};

struct TrainResult
{
  ndgrad::ParameterSet params;
  /// Mean NLL per (subject, prediction step) seen during each epoch.
  std::vector<double> epoch_nll;
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_nll)>;

/**
 * @brief RMSProp on the teacher-forced NLL, one update per window.
 *
 * Windows of all scenes are pooled (scenes ordered by name) and visited in a
 * seeded random order each epoch. `initial` defaults to init_model(cfg, seed).
 * A non-finite loss or gradient raises TrainingError; when a checkpoint path
 * is set, the last good parameters are saved there first.
 */
TrainResult train_model(const std::vector<TrainingScene> & scenes, const ModelConfig & cfg,
                        const TrainOptions & options, const ndgrad::ParameterSet * initial = nullptr,
                        const EpochCallback & on_epoch = {});

/// Checkpoint config block: {"model": ..., "train": ...}.
io::Checkpoint model_checkpoint(const ModelConfig & cfg, const nlohmann::json & train, const ndgrad::ParameterSet & params);
ModelConfig checkpoint_model_config(const io::Checkpoint & checkpoint);

struct EvalOptions
{
  model::Feed feed = model::Feed::Mean;
  /// Seeds sampling when feed is Sample.
  std::uint64_t seed = 0;
  std::int64_t window_stride = 1;
  /// 0: default_thread_count().
  std::size_t threads = 0;
};

struct Prediction
{
  std::int64_t subject_id = 0;
  std::int64_t start_frame = 0;
  std::vector<scene::Point2> observed;
  std::vector<scene::Point2> truth;
  std::vector<scene::Point2> predicted;
  double ade = 0.0;
  double fde = 0.0;
};

struct EvalReport
{
  std::string scene;
  double ade = 0.0;
  double fde = 0.0;
  /// Teacher-forced mean NLL.
  double nll = 0.0;
  /// Share of predicted points inside the scene's forbidden zones.
  double forbidden_rate = 0.0;
  /// Subjects never covered by a full t_obs + n_pred window.
  std::size_t skipped = 0;
  std::vector<Prediction> predictions;
  nlohmann::json config;

  nlohmann::json to_json() const;
};

/// Predicts every full-length window of the scene. Throws DataError when the
/// scene has none.
EvalReport evaluate(const TrainingScene & scene, const ModelConfig & cfg, const ndgrad::ParameterSet & params,
                    const EvalOptions & options = {});

enum class MapSource
{
  /// Maps from a scene network trained on the training scenes.
  Sscn,
  /// Each scene's own ground-truth occupancy.
  GroundTruth,
};

std::string to_string(MapSource source);
MapSource parse_map_source(const std::string & text);

struct MapOptions
{
  MapSource source = MapSource::Sscn;
  std::size_t cell_size = 20;
  sscn::SscnConfig sscn;
  sscn::SscnTrainOptions sscn_train;
  std::size_t threads = 0;
};

/// Likelihood maps for every scene of `scenes`. The scene network only sees
/// the scenes listed in `train`.
std::vector<StaticContext> build_contexts(const std::vector<scene::Scene> & scenes,
                                          const std::vector<std::size_t> & train, std::uint32_t class_count,
                                          const MapOptions & options);

struct LooOptions
{
  TrainOptions train;
  EvalOptions eval;
  MapOptions maps;
};

/// contexts[i] holds the maps of every scene for the fold holding out scene i.
using FoldContexts = std::vector<std::vector<StaticContext>>;

FoldContexts loo_contexts(const std::vector<scene::Scene> & scenes, std::uint32_t class_count,
                          const MapOptions & options);

/// One report per scene, trained on all the others. Needs >= 2 scenes.
/// SD-ATT maps come from `contexts` when given, else from loo_contexts.
std::vector<EvalReport> leave_one_out(const std::vector<scene::Scene> & scenes, const ModelConfig & cfg,
                                      const LooOptions & options, const FoldContexts * contexts = nullptr);

/// Scene image with observed (grey), true (green) and predicted (red) paths.
void write_svg(std::ostream & out, const scene::Scene & scene, const std::vector<Prediction> & predictions);

}  // namespace trajcast::train

#endif  // TRAJCAST__TRAIN__TRAINER_HPP_
