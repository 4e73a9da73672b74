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

#ifndef TRAJCAST__NDGRAD__GRADCHECK_HPP_
#define TRAJCAST__NDGRAD__GRADCHECK_HPP_

#include "trajcast/ndgrad/graph.hpp"

#include <functional>
#include <string>
#include <vector>

namespace trajcast::ndgrad
{

struct GradCheckReport
{
  double max_relative_error = 0.0;
  std::string worst_location;
  std::size_t checked = 0;
};

/// |a - b| / max(1e-8, |a| + |b|)
double relative_error(double analytic, double numeric);

using TensorFn = std::function<Var(Graph &, const std::vector<Var> &)>;
using ParamFn = std::function<Var(Graph &, const ParameterSet &)>;

/// Compares reverse-mode gradients of `fn` w.r.t. every element of `inputs`
/// against central differences with step `h`. `fn` must return a scalar.
GradCheckReport check_gradients(const TensorFn & fn, const std::vector<Tensor> & inputs, double h = 1e-5);

/// Same, over every element of every parameter in `params`.
GradCheckReport check_parameter_gradients(const ParamFn & fn, const ParameterSet & params, double h = 1e-5);

}  // namespace trajcast::ndgrad

#endif  // TRAJCAST__NDGRAD__GRADCHECK_HPP_
