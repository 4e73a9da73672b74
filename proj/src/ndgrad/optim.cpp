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

#include "trajcast/ndgrad/optim.hpp"

#include "trajcast/error.hpp"

#include <cmath>

namespace trajcast::ndgrad
{

void validate_gradients(const ParameterSet & params, const Gradients & grads)
{
  for (const auto & [name, g] : grads) {
    const Tensor & p = params.at(name);
    if (p.shape() != g.shape()) {
      throw TrainingError(
        "gradient for parameter '" + name + "' has shape " + shape_str(g.shape()) + ", expected " +
        shape_str(p.shape()));
    }
    if (!g.all_finite()) throw TrainingError("non-finite gradient for parameter '" + name + "'");
  }
}

void Sgd::step(ParameterSet & params, const Gradients & grads) const
{
  validate_gradients(params, grads);
  for (const auto & [name, g] : grads) {
    Tensor & p = params.at(name);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr_ * g[i];
  }
}

void RmsProp::step(ParameterSet & params, const Gradients & grads)
{
  validate_gradients(params, grads);
  for (const auto & [name, g] : grads) {
    Tensor & p = params.at(name);
    auto it = mean_square_.find(name);
    if (it == mean_square_.end()) it = mean_square_.emplace(name, Tensor(p.shape(), 0.0)).first;
    Tensor & ms = it->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      ms[i] = decay_ * ms[i] + (1.0 - decay_) * g[i] * g[i];
      if (g[i] != 0.0) p[i] -= lr_ * g[i] / std::sqrt(ms[i] + eps_);
    }
  }
}

}  // namespace trajcast::ndgrad
