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

#ifndef TRAJCAST__TRAIN__SYNTH_HPP_
#define TRAJCAST__TRAIN__SYNTH_HPP_

#include "trajcast/scene/scene.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace trajcast::train
{

enum class SynthKind
{
  /// Straight lines at constant speed.
  ConstantVelocity,
  /// Two cohorts, one moving right and one moving down, crossing mid-scene.
  CrossingGroups,
  /// Left-to-right walkers detouring around dark rectangular zones.
  ObstacleField,
  /// A one-cell-wide ring road on a dark background, walked end to end.
  RingRoad,
};

std::string to_string(SynthKind kind);
/// Throws ConfigError on an unknown name.
SynthKind parse_synth_kind(const std::string & text);

struct SynthSpec
{
  SynthKind kind = SynthKind::ConstantVelocity;
  std::size_t subjects = 100;
  /// Points per trajectory (frames are consecutive).
  std::size_t length = 20;
  /// Start frames are drawn from [0, frames).
  std::size_t frames = 40;
  /// Square image side, pixels.
  std::size_t image_size = 160;
  /// Standard deviation of the position noise, normalized units.
  double noise = 0.01;
  /// Obstacle count (obstacle-field).
  std::size_t zones = 2;
  /// Ring-road cell size, pixels; the scene grid should use the same size.
  std::size_t cell_size = 20;
  std::uint64_t seed = 0;

  /// Throws ContractError.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys raise ConfigError.
  static SynthSpec from_json(const nlohmann::json & j);
};

/// Deterministic given the spec. The scene is named "<kind>-<seed>".
scene::Scene generate_synth(const SynthSpec & spec);

}  // namespace trajcast::train

#endif  // TRAJCAST__TRAIN__SYNTH_HPP_
