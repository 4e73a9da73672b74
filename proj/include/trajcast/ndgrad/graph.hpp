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

#ifndef TRAJCAST__NDGRAD__GRAPH_HPP_
#define TRAJCAST__NDGRAD__GRAPH_HPP_

#include "trajcast/ndgrad/tensor.hpp"

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace trajcast::ndgrad
{

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var
{
  Graph * graph = nullptr;
  std::size_t id = 0;

  const Tensor & value() const;
  const Shape & shape() const { return value().shape(); }
};

/// Named learnable tensors. Iteration order is the lexicographic name order.
class ParameterSet
{
public:
  using Map = std::map<std::string, Tensor>;

  void add(const std::string & name, Tensor value);
  bool contains(const std::string & name) const { return tensors_.count(name) != 0; }
  Tensor & at(const std::string & name);
  const Tensor & at(const std::string & name) const;
  std::size_t size() const noexcept { return tensors_.size(); }
  std::size_t element_count() const noexcept;

  Map::iterator begin() { return tensors_.begin(); }
  Map::iterator end() { return tensors_.end(); }
  Map::const_iterator begin() const { return tensors_.begin(); }
  Map::const_iterator end() const { return tensors_.end(); }

  friend bool operator==(const ParameterSet & a, const ParameterSet & b) { return a.tensors_ == b.tensors_; }

private:
  Map tensors_;
};

using Gradients = std::map<std::string, Tensor>;

/// Values and gradient slots handed to an op's backward rule.
struct BackwardArgs
{
  const Tensor & output;
  const Tensor & grad_output;
  std::vector<const Tensor *> inputs;
  /// Null where the input does not require a gradient.
  std::vector<Tensor *> grad_inputs;
};

/**
 * @brief Define-by-run tape for reverse-mode differentiation.
 *
 * Nodes are appended in evaluation order, so node ids are a topological
 * order. A graph is built for one step and discarded.
 */
class Graph
{
public:
  using BackwardFn = std::function<void(BackwardArgs &)>;

  Graph() = default;
  Graph(const Graph &) = delete;
  Graph & operator=(const Graph &) = delete;

  Var constant(Tensor value);
  /// Differentiable leaf that is not a named parameter.
  Var variable(Tensor value);
  /// Leaf bound to `params.at(name)`. Repeated calls with one name return the same node.
  Var parameter(const ParameterSet & params, const std::string & name);

  /// Appends an op node. `backward` accumulates into `grad_inputs`.
  Var record(std::string_view op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor & value(Var v) const;
  /// Gradient of the last backward pass w.r.t. `v`; zeros if `v` was not reached.
  Tensor grad(Var v) const;
  std::string_view op_name(Var v) const;

  /// Runs the reverse sweep from a one-element `loss`. Returns gradients of every
  /// parameter leaf in the graph (zeros for parameters the loss does not reach).
  Gradients backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Number of node visits made by the last backward pass.
  std::size_t last_backward_visits() const noexcept { return last_visits_; }

private:
  struct Node
  {
    std::string_view op;
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    std::string param_name;
  };

  Var push(Node node);
  void check_owned(Var v) const;

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> param_ids_;
  std::size_t last_visits_ = 0;
};

}  // namespace trajcast::ndgrad

#endif  // TRAJCAST__NDGRAD__GRAPH_HPP_
