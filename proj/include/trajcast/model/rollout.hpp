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

#ifndef TRAJCAST__MODEL__ROLLOUT_HPP_
#define TRAJCAST__MODEL__ROLLOUT_HPP_

#include "trajcast/model/model.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace trajcast::model
{

struct SubjectSequence
{
  std::int64_t subject_id = 0;
  SubjectClass subject_class;
  /// Consecutive positions; the first t_obs are observed, the rest (if any) are ground truth.
  std::vector<Point2> positions;
};

/// Subjects moving through one stretch of consecutive frames of a scene.
struct Window
{
  std::int64_t start_frame = 0;
  std::vector<SubjectSequence> subjects;
};

/// Windows of `length` consecutive frames starting every `stride` frames. A
/// subject joins a window only when present at each of its frames; windows
/// with no subject are dropped.
std::vector<Window> extract_windows(const scene::Scene & scene, std::size_t length, std::int64_t stride = 1);

/// Per-class likelihood maps of one scene (index = class id).
struct StaticContext
{
  std::vector<scene::LikelihoodMap> maps;
  scene::GridSpec grid;
};

/// Source of the decoder's previous position.
enum class Feed
{
  /// Ground truth (training).
  Teacher,
  /// Previous predicted mean.
  Mean,
  /// Previous sampled point.
  Sample,
};

struct WindowResult
{
  /// Mean NLL over subjects and prediction steps; unset without ground truth.
  std::optional<ndgrad::Var> loss;
  std::size_t terms = 0;
  /// [subject][step]
  std::vector<std::vector<GaussianParams>> theta;
  std::vector<std::vector<Point2>> predicted;
};

/**
 * @brief Encodes every subject of `window` jointly over the observation steps,
 * then decodes n_pred steps for each.
 *
 * At observation step t a subject's social tensor pools the neighbors' encoder
 * hidden states from step t-1 at their step-t positions. The decoder starts
 * from the final encoder state and attends over the last k encoder states.
 * `context` is required in SD-ATT mode; `rng` is required for Feed::Sample.
 * `horizon` overrides the number of decoded steps (default n_pred).
 */
WindowResult run_window(ndgrad::Graph & g, const ModelConfig & cfg, const ndgrad::ParameterSet & params,
                        const Window & window, const StaticContext * context, Feed feed,
                        std::mt19937_64 * rng = nullptr, std::optional<std::size_t> horizon = std::nullopt);

}  // namespace trajcast::model

#endif  // TRAJCAST__MODEL__ROLLOUT_HPP_
