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

#ifndef TRAJCAST__POOL__CONTEXT_POOL_HPP_
#define TRAJCAST__POOL__CONTEXT_POOL_HPP_

#include "trajcast/ndgrad/graph.hpp"
#include "trajcast/scene/scene.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace trajcast::pool
{

using scene::Point2;
using scene::SubjectClass;

struct PoolConfig
{
  /// Side of the social neighborhood window, normalized units.
  double neighborhood = 0.2;
  /// Social grid cells per side.
  std::size_t social_grid = 4;
  std::size_t hidden_dim = 32;
  std::uint32_t class_count = 1;
  /// Side of the reachability window, pixels.
  std::size_t reach_distance = 60;
  /// Reachability cell side, pixels.
  std::size_t reach_cell = 20;
  /// Cap on subjects pooled per frame.
  std::size_t max_neighbors = 40;

  void validate() const;
  std::size_t reach_side() const noexcept { return reach_distance / reach_cell; }
  std::size_t social_size() const noexcept { return social_grid * social_grid * hidden_dim * class_count; }
};

/// Social-grid cell of `neighbor` relative to `target`; nullopt outside the window.
/// Cell (r, c) covers offsets [c*w - d/2, (c+1)*w - d/2) in x and likewise in y
/// for row r, with w = d / g.
struct SocialCell
{
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const SocialCell &, const SocialCell &) = default;
};
std::optional<SocialCell> social_cell(Point2 target, Point2 neighbor, const PoolConfig & cfg);

/// Lower bound of social cell `index` along one axis, relative to the target.
double social_cell_lower(std::size_t index, const PoolConfig & cfg);

struct Neighbor
{
  std::int64_t subject_id = 0;
  SubjectClass subject_class;
  Point2 position;
  /// Encoder hidden state at the previous step, length hidden_dim.
  std::vector<double> hidden;
};

/**
 * @brief g x g x d_H x C pooled hidden states.
 *
 * Stored cell-major, then class, then hidden unit; `at(r, c, k, s)` hides the
 * order. The flat layout is the one consumed by the sequence model.
 */
struct SocialTensor
{
  std::size_t grid = 0;
  std::size_t hidden_dim = 0;
  std::size_t classes = 0;
  std::vector<double> values;

  static std::size_t flat_index(std::size_t r, std::size_t c, std::size_t k, std::size_t s, std::size_t grid,
                                std::size_t hidden_dim, std::size_t classes)
  {
    return ((r * grid + c) * classes + s) * hidden_dim + k;
  }
  double at(std::size_t r, std::size_t c, std::size_t k, std::size_t s) const
  {
    return values[flat_index(r, c, k, s, grid, hidden_dim, classes)];
  }
};

/// Sums the hidden states of neighbors by (cell, class). The subject with
/// `target_id` and neighbors outside the window are skipped.
SocialTensor social_tensor(std::int64_t target_id, Point2 target, std::span<const Neighbor> neighbors,
                           const PoolConfig & cfg);

/// Graph form of social_tensor over live hidden-state nodes; returns the flat
/// [social_size] tensor in SocialTensor layout.
struct NeighborState
{
  std::int64_t subject_id = 0;
  SubjectClass subject_class;
  Point2 position;
  ndgrad::Var hidden;
};
ndgrad::Var social_tensor(ndgrad::Graph & graph, std::int64_t target_id, Point2 target,
                          std::span<const NeighborState> neighbors, const PoolConfig & cfg);

/// (d_R / g_p)^2 window of map likelihoods centred on the subject.
struct ReachabilityTensor
{
  std::size_t side = 0;
  std::vector<double> values;
  double at(std::size_t i, std::size_t j) const { return values[i * side + j]; }
};

/**
 * @brief Reads the likelihood map under each reachability cell around `target`.
 *
 * Cell (i, j) is centred at the target pixel offset by ((j - (n-1)/2) g_p,
 * (i - (n-1)/2) g_p), n = d_R / g_p; its value is the map cell containing that
 * centre, or 0 when the centre is outside the image.
 */
ReachabilityTensor reachability_tensor(Point2 target, const scene::LikelihoodMap & map,
                                       const scene::GridSpec & map_grid, const PoolConfig & cfg);

struct Candidate
{
  std::int64_t subject_id = 0;
  Point2 position;
};

/// Keeps at most `max_n` candidates nearest to `target` (ties: smaller id
/// first). Survivors keep their input order.
std::vector<Candidate> truncate_neighbors(std::span<const Candidate> frame_subjects, Point2 target,
                                          std::size_t max_n = 40);

}  // namespace trajcast::pool

#endif  // TRAJCAST__POOL__CONTEXT_POOL_HPP_
