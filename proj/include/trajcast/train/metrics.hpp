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

#ifndef TRAJCAST__TRAIN__METRICS_HPP_
#define TRAJCAST__TRAIN__METRICS_HPP_

#include "trajcast/scene/scene.hpp"

#include <vector>

namespace trajcast::train
{

using Paths = std::vector<std::vector<scene::Point2>>;

/// Mean Euclidean distance over every (subject, step) pair. `pred` and `truth`
/// must have the same subjects and step counts (>= 1); ContractError otherwise.
double ade(const Paths & pred, const Paths & truth);
/// Mean over subjects of the distance at the last step.
double fde(const Paths & pred, const Paths & truth);

/// Number of points inside any of `zones`.
std::size_t count_inside(const std::vector<scene::Point2> & points, const std::vector<scene::Rect> & zones);

}  // namespace trajcast::train

#endif  // TRAJCAST__TRAIN__METRICS_HPP_
