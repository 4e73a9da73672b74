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

#include "trajcast/train/metrics.hpp"

#include "trajcast/error.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace trajcast::train
{

namespace
{
void check(const Paths & pred, const Paths & truth)
{
  if (pred.size() != truth.size()) {
    throw ContractError(fmt::format("metrics: {} predicted vs {} true paths", pred.size(), truth.size()));
  }
  if (pred.empty()) throw ContractError("metrics: no paths");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != truth[i].size()) {
      throw ContractError(
        fmt::format("metrics: path {} has {} predicted vs {} true steps", i, pred[i].size(), truth[i].size()));
    }
    if (pred[i].empty()) throw ContractError(fmt::format("metrics: path {} is empty", i));
  }
}
}  // namespace

double ade(const Paths & pred, const Paths & truth)
{
  check(pred, truth);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t t = 0; t < pred[i].size(); ++t) total += scene::distance(pred[i][t], truth[i][t]);
    n += pred[i].size();
  }
  return total / static_cast<double>(n);
}

double fde(const Paths & pred, const Paths & truth)
{
  check(pred, truth);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += scene::distance(pred[i].back(), truth[i].back());
  return total / static_cast<double>(pred.size());
}

std::size_t count_inside(const std::vector<scene::Point2> & points, const std::vector<scene::Rect> & zones)
{
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [&](scene::Point2 p) {
    return std::any_of(zones.begin(), zones.end(), [&](const scene::Rect & r) { return r.contains(p); });
  }));
}

}  // namespace trajcast::train
