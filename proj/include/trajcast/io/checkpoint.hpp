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

#ifndef TRAJCAST__IO__CHECKPOINT_HPP_
#define TRAJCAST__IO__CHECKPOINT_HPP_

#include "trajcast/ndgrad/graph.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace trajcast::io
{

/**
 * @brief Named-tensor container.
 *
 * Layout (all integers little-endian):
 *
 *   8 bytes   magic "TRJCKPT\0"
 *   u32       format version
 *   u64       manifest length N
 *   N bytes   manifest, UTF-8 JSON:
 *               {"version": 1,
 *                "config": {...},
 *                "tensors": [{"name": s, "shape": [..], "offset": byte offset into blob}, ...]}
 *   blob      concatenated tensor data, IEEE-754 binary64 little-endian, row-major
 *
 * Tensors appear in name order, so equal parameter sets serialize to equal bytes.
 */
struct Checkpoint
{
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  nlohmann::json config = nlohmann::json::object();
  ndgrad::ParameterSet params;
};

void write_checkpoint(std::ostream & out, const Checkpoint & checkpoint);
Checkpoint read_checkpoint(std::istream & in);

void save_checkpoint(const std::filesystem::path & path, const Checkpoint & checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path & path);

}  // namespace trajcast::io

#endif  // TRAJCAST__IO__CHECKPOINT_HPP_
