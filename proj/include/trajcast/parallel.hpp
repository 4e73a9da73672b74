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

#ifndef TRAJCAST__PARALLEL_HPP_
#define TRAJCAST__PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace trajcast
{

/// Worker count: TRAJCAST_THREADS when set to a positive integer, else the
/// hardware concurrency (at least 1).
std::size_t default_thread_count();

/// Calls `fn(i)` for i in [0, n) split into contiguous chunks over `threads`
/// workers. Exceptions from workers are rethrown on the caller.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)> & fn);

}  // namespace trajcast

#endif  // TRAJCAST__PARALLEL_HPP_
