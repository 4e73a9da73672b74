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

#ifndef TRAJCAST__SSCN__SSCN_HPP_
#define TRAJCAST__SSCN__SSCN_HPP_

#include "trajcast/ndgrad/graph.hpp"
#include "trajcast/ndgrad/ops.hpp"
#include "trajcast/scene/scene.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace trajcast::sscn
{

using scene::Raster;
using scene::SubjectClass;

struct ConvLayer
{
  std::size_t filters = 8;
  std::size_t kernel = 3;
  std::size_t stride = 1;
};

/**
 * @brief Architecture of the three-stream scene network.
 *
 * Subject stream: class embedding -> dense. Patch and context streams: for
 * each ConvLayer, conv -> ReLU -> 2x2 max-pool -> LRN, then dense. The three
 * stream outputs are concatenated and passed through `merge_widths` dense
 * ReLU layers and a single sigmoid unit.
 */
struct SscnConfig
{
  std::size_t patch_size = 64;
  std::size_t context_size = 64;
  std::uint32_t class_count = 1;
  std::size_t class_embed = 8;
  std::vector<ConvLayer> conv = {{8, 3, 1}, {16, 3, 1}, {16, 3, 1}};
  std::size_t pool = 2;
  ndgrad::LrnParams lrn;
  std::size_t stream_width = 64;
  std::vector<std::size_t> merge_widths = {128, 64};

  /// Throws ContractError if any layer would produce an empty feature map.
  void validate() const;
  /// Flattened conv-stack output length for an input of side `input_size`.
  std::size_t conv_output_size(std::size_t input_size) const;

  nlohmann::json to_json() const;
  static SscnConfig from_json(const nlohmann::json & j);
};

/// Randomly initialized weights (He-scaled normal, zero biases).
ndgrad::ParameterSet init_sscn(const SscnConfig & cfg, std::uint64_t seed);

/// Same names and shapes as init_sscn, every value zero.
ndgrad::ParameterSet zero_sscn(const SscnConfig & cfg);

/// Conv stack + dense for one image stream ("patch" or "context").
ndgrad::Var stream_features(ndgrad::Graph & g, const SscnConfig & cfg, const ndgrad::ParameterSet & params,
                            const std::string & stream, ndgrad::Var image);

/// Pre-sigmoid output given the class and already computed context features.
ndgrad::Var sscn_logit(ndgrad::Graph & g, const SscnConfig & cfg, const ndgrad::ParameterSet & params,
                       SubjectClass cls, ndgrad::Var patch, ndgrad::Var context_features);

/// Likelihood in (0,1) that a subject of `cls` steps on the patch's centre cell.
/// Rasters must already be resized to patch_size / context_size.
double sscn_forward(const SscnConfig & cfg, const ndgrad::ParameterSet & params, SubjectClass cls,
                    const Raster & patch, const Raster & context);

/// One training triplet. `context` is shared by every example of a scene.
struct SscnExample
{
  SubjectClass subject_class;
  Raster patch;
  std::shared_ptr<const Raster> context;
  double target = 0.0;
};

inline constexpr double kProbabilityClamp = 1e-7;

/// -(mu log p + (1-mu) log(1-p)) with p clamped to [1e-7, 1-1e-7].
double cross_entropy(double target, double predicted);

/// Mean cross-entropy of a batch as a graph scalar. Examples sharing one
/// context raster share one context-stream evaluation.
ndgrad::Var sscn_loss(ndgrad::Graph & g, const SscnConfig & cfg, const ndgrad::ParameterSet & params,
                      const std::vector<const SscnExample *> & batch);

/// Mean cross-entropy over `examples`, forward only.
double sscn_loss_value(const SscnConfig & cfg, const ndgrad::ParameterSet & params,
                       const std::vector<SscnExample> & examples);

/// Builds one example per (class, cell) of each scene from its ground-truth map.
std::vector<SscnExample> make_sscn_dataset(const SscnConfig & cfg, const scene::Scene & scene,
                                           const scene::GridSpec & grid);

struct SscnTrainOptions
{
  double learning_rate = 0.002;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
};

struct SscnTrainResult
{
  ndgrad::ParameterSet params;
  /// Mean batch loss seen during each epoch.
  std::vector<double> epoch_loss;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Mini-batch gradient descent on the cross-entropy. Throws TrainingError on a
/// non-finite loss or gradient.
SscnTrainResult train_sscn(const SscnConfig & cfg, const std::vector<SscnExample> & dataset,
                           const SscnTrainOptions & options, const ndgrad::ParameterSet * initial = nullptr,
                           const EpochCallback & on_epoch = {});

/// Evaluates the network on every grid cell of `scene`. Cells are split across
/// up to `threads` workers (0: default_thread_count()).
scene::LikelihoodMap build_map(const SscnConfig & cfg, const ndgrad::ParameterSet & params,
                               const scene::Scene & scene, SubjectClass cls, const scene::GridSpec & grid,
                               std::size_t threads = 0);

}  // namespace trajcast::sscn

#endif  // TRAJCAST__SSCN__SSCN_HPP_
