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

#include "trajcast/ndgrad/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace trajcast::ndgrad
{

double relative_error(double analytic, double numeric)
{
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

namespace
{
void record(GradCheckReport & report, double analytic, double numeric, const std::string & where)
{
  const double err = relative_error(analytic, numeric);
  ++report.checked;
  if (report.checked == 1 || err > report.max_relative_error) {
    report.max_relative_error = err;
    report.worst_location = where;
  }
}
}  // namespace

GradCheckReport check_gradients(const TensorFn & fn, const std::vector<Tensor> & inputs, double h)
{
  std::vector<Tensor> analytic;
  {
    Graph g;
    std::vector<Var> vars;
    for (const auto & t : inputs) vars.push_back(g.variable(t));
    Var loss = fn(g, vars);
    g.backward(loss);
    for (const auto & v : vars) analytic.push_back(g.grad(v));
  }

  auto evaluate = [&](const std::vector<Tensor> & at) {
    Graph g;
    std::vector<Var> vars;
    for (const auto & t : at) vars.push_back(g.constant(t));
    return fn(g, vars).value().item();
  };

  GradCheckReport report;
  std::vector<Tensor> probe = inputs;
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    for (std::size_t i = 0; i < inputs[j].size(); ++i) {
      const double orig = probe[j][i];
      probe[j][i] = orig + h;
      const double up = evaluate(probe);
      probe[j][i] = orig - h;
      const double down = evaluate(probe);
      probe[j][i] = orig;
      record(report, analytic[j][i], (up - down) / (2.0 * h),
             "input " + std::to_string(j) + "[" + std::to_string(i) + "]");
    }
  }
  return report;
}

GradCheckReport check_parameter_gradients(const ParamFn & fn, const ParameterSet & params, double h)
{
  Gradients analytic;
  {
    Graph g;
    Var loss = fn(g, params);
    analytic = g.backward(loss);
  }

  auto evaluate = [&](const ParameterSet & at) {
    Graph g;
    return fn(g, at).value().item();
  };

  GradCheckReport report;
  ParameterSet probe = params;
  for (auto & [name, tensor] : probe) {
    auto it = analytic.find(name);
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double orig = tensor[i];
      tensor[i] = orig + h;
      const double up = evaluate(probe);
      tensor[i] = orig - h;
      const double down = evaluate(probe);
      tensor[i] = orig;
      const double a = it == analytic.end() ? 0.0 : it->second[i];
      record(report, a, (up - down) / (2.0 * h), name + "[" + std::to_string(i) + "]");
    }
  }
  return report;
}

}  // namespace trajcast::ndgrad
