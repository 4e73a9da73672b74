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

#ifndef TRAJCAST__NDGRAD__OPTIM_HPP_
#define TRAJCAST__NDGRAD__OPTIM_HPP_

#include "trajcast/ndgrad/graph.hpp"

#include <map>
#include <string>

namespace trajcast::ndgrad
{

/// Throws TrainingError naming the first parameter whose gradient is non-finite
/// or whose shape does not match.
void validate_gradients(const ParameterSet & params, const Gradients & grads);

/// Plain gradient descent: p -= lr * g.
class Sgd
{
public:
  explicit Sgd(double learning_rate) : lr_(learning_rate) {}

  void step(ParameterSet & params, const Gradients & grads) const;
  double learning_rate() const noexcept { return lr_; }

private:
  double lr_;
};

/**
 * @brief RMSProp with per-element running mean of squared gradients.
 *
 *   ms <- decay * ms + (1 - decay) * g^2
 *   p  <- p - lr * g / sqrt(ms + eps)
 *
 * The state starts at zero and is keyed by parameter name.
 */
class RmsProp
{
public:
  explicit RmsProp(double learning_rate, double decay = 0.9, double epsilon = 1e-8)
  : lr_(learning_rate), decay_(decay), eps_(epsilon)
  {
  }

  void step(ParameterSet & params, const Gradients & grads);

  double learning_rate() const noexcept { return lr_; }
  const std::map<std::string, Tensor> & state() const noexcept { return mean_square_; }
  void set_state(std::map<std::string, Tensor> state) { mean_square_ = std::move(state); }

private:
  double lr_;
  double decay_;
  double eps_;
  std::map<std::string, Tensor> mean_square_;
};

}  // namespace trajcast::ndgrad

#endif  // TRAJCAST__NDGRAD__OPTIM_HPP_
