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

#include "trajcast/pool/context_pool.hpp"

#include "trajcast/error.hpp"
#include "trajcast/ndgrad/ops.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace trajcast::pool
{

void PoolConfig::validate() const
{
  if (!(neighborhood > 0.0)) throw ContractError("pool: neighborhood must be positive");
  if (social_grid < 1) throw ContractError("pool: social_grid must be >= 1");
  if (hidden_dim == 0) throw ContractError("pool: hidden_dim must be positive");
  if (class_count == 0) throw ContractError("pool: class_count must be positive");
  if (reach_cell == 0 || reach_distance == 0 || reach_distance % reach_cell != 0) {
    throw ContractError(fmt::format("pool: reach_distance {} must be a positive multiple of reach_cell {}",
                                    reach_distance, reach_cell));
  }
}

double social_cell_lower(std::size_t index, const PoolConfig & cfg)
{
  const double w = cfg.neighborhood / static_cast<double>(cfg.social_grid);
  return static_cast<double>(index) * w - 0.5 * cfg.neighborhood;
}

namespace
{
// Index of the half-open interval containing `offset`, using the exact bounds
// from social_cell_lower.
std::optional<std::size_t> axis_cell(double offset, const PoolConfig & cfg)
{
  const std::size_t g = cfg.social_grid;
  if (!(offset >= social_cell_lower(0, cfg) && offset < social_cell_lower(g, cfg))) return std::nullopt;
  const double w = cfg.neighborhood / static_cast<double>(g);
  auto idx = static_cast<std::size_t>(std::clamp(std::floor((offset + 0.5 * cfg.neighborhood) / w), 0.0,
                                                 static_cast<double>(g - 1)));
  while (idx > 0 && offset < social_cell_lower(idx, cfg)) --idx;
  while (idx + 1 < g && offset >= social_cell_lower(idx + 1, cfg)) ++idx;
  return idx;
}
}  // namespace

std::optional<SocialCell> social_cell(Point2 target, Point2 neighbor, const PoolConfig & cfg)
{
  auto col = axis_cell(neighbor.x - target.x, cfg);
  if (!col) return std::nullopt;
  auto row = axis_cell(neighbor.y - target.y, cfg);
  if (!row) return std::nullopt;
  return SocialCell{*row, *col};
}

SocialTensor social_tensor(std::int64_t target_id, Point2 target, std::span<const Neighbor> neighbors,
                           const PoolConfig & cfg)
{
  SocialTensor out{cfg.social_grid, cfg.hidden_dim, cfg.class_count,
                   std::vector<double>(cfg.social_size(), 0.0)};
  for (const auto & n : neighbors) {
    if (n.hidden.size() != cfg.hidden_dim) {
      throw ContractError(fmt::format("social_tensor: subject {} hidden dim {} != {}", n.subject_id,
                                      n.hidden.size(), cfg.hidden_dim));
    }
    if (n.subject_class.id >= cfg.class_count) {
      throw ContractError(fmt::format("social_tensor: subject {} class {} >= {}", n.subject_id,
                                      n.subject_class.id, cfg.class_count));
    }
    if (n.subject_id == target_id) continue;
    auto cell = social_cell(target, n.position, cfg);
    if (!cell) continue;
    for (std::size_t k = 0; k < cfg.hidden_dim; ++k) {
      out.values[SocialTensor::flat_index(cell->row, cell->col, k, n.subject_class.id, cfg.social_grid,
                                          cfg.hidden_dim, cfg.class_count)] += n.hidden[k];
    }
  }
  return out;
}

ndgrad::Var social_tensor(ndgrad::Graph & graph, std::int64_t target_id, Point2 target,
                          std::span<const NeighborState> neighbors, const PoolConfig & cfg)
{
  std::vector<ndgrad::Var> items;
  std::vector<std::size_t> segments;
  for (const auto & n : neighbors) {
    if (n.hidden.value().size() != cfg.hidden_dim) {
      throw ContractError(fmt::format("social_tensor: subject {} hidden dim {} != {}", n.subject_id,
                                      n.hidden.value().size(), cfg.hidden_dim));
    }
    if (n.subject_class.id >= cfg.class_count) {
      throw ContractError(fmt::format("social_tensor: subject {} class {} >= {}", n.subject_id,
                                      n.subject_class.id, cfg.class_count));
    }
    if (n.subject_id == target_id) continue;
    auto cell = social_cell(target, n.position, cfg);
    if (!cell) continue;
    items.push_back(n.hidden);
    segments.push_back((cell->row * cfg.social_grid + cell->col) * cfg.class_count + n.subject_class.id);
  }
  const std::size_t nseg = cfg.social_grid * cfg.social_grid * cfg.class_count;
  return ndgrad::flatten(ndgrad::segment_sum(graph, items, segments, nseg, cfg.hidden_dim));
}

ReachabilityTensor reachability_tensor(Point2 target, const scene::LikelihoodMap & map,
                                       const scene::GridSpec & map_grid, const PoolConfig & cfg)
{
  if (map.rows != map_grid.rows || map.cols != map_grid.cols) {
    throw ContractError(fmt::format("reachability_tensor: map {}x{} does not match grid {}x{}", map.rows,
                                    map.cols, map_grid.rows, map_grid.cols));
  }
  const std::size_t n = cfg.reach_side();
  ReachabilityTensor out{n, std::vector<double>(n * n, 0.0)};
  const double px = target.x * static_cast<double>(map_grid.image_width);
  const double py = target.y * static_cast<double>(map_grid.image_height);
  const double g = static_cast<double>(cfg.reach_cell);
  const double mid = 0.5 * static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double cx = px + (static_cast<double>(j) - mid) * g;
      const double cy = py + (static_cast<double>(i) - mid) * g;
      if (auto cell = map_grid.cell_of_pixel(cx, cy)) out.values[i * n + j] = map.at(cell->row, cell->col);
    }
  }
  return out;
}

std::vector<Candidate> truncate_neighbors(std::span<const Candidate> frame_subjects, Point2 target,
                                          std::size_t max_n)
{
  if (frame_subjects.size() <= max_n) return {frame_subjects.begin(), frame_subjects.end()};
  std::vector<std::size_t> order(frame_subjects.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> dist(frame_subjects.size());
  for (std::size_t i = 0; i < frame_subjects.size(); ++i) dist[i] = scene::distance(frame_subjects[i].position, target);
  auto closer = [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return frame_subjects[a].subject_id < frame_subjects[b].subject_id;
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(max_n), order.end(), closer);
  order.resize(max_n);
  std::sort(order.begin(), order.end());
  std::vector<Candidate> out;
  out.reserve(max_n);
  for (auto i : order) out.push_back(frame_subjects[i]);
  return out;
}

}  // namespace trajcast::pool
