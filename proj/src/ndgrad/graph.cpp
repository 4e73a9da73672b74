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

#include "trajcast/ndgrad/graph.hpp"

#include "trajcast/error.hpp"

namespace trajcast::ndgrad
{

const Tensor & Var::value() const
{
  if (graph == nullptr) throw ContractError("use of an unbound Var");
  return graph->value(*this);
}

void ParameterSet::add(const std::string & name, Tensor value)
{
  if (!tensors_.emplace(name, std::move(value)).second) {
    throw ContractError("duplicate parameter '" + name + "'");
  }
}

Tensor & ParameterSet::at(const std::string & name)
{
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor & ParameterSet::at(const std::string & name) const
{
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterSet::element_count() const noexcept
{
  std::size_t n = 0;
  for (const auto & [name, t] : tensors_) n += t.size();
  return n;
}

Var Graph::push(Node node)
{
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Graph::check_owned(Var v) const
{
  if (v.graph != this || v.id >= nodes_.size()) {
    throw ContractError("Var does not belong to this graph");
  }
}

Var Graph::constant(Tensor value)
{
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::variable(Tensor value)
{
  Node n;
  n.op = "variable";
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Graph::parameter(const ParameterSet & params, const std::string & name)
{
  if (auto it = param_ids_.find(name); it != param_ids_.end()) return Var{this, it->second};
  Node n;
  n.op = "parameter";
  n.value = params.at(name);
  n.requires_grad = true;
  n.param_name = name;
  Var v = push(std::move(n));
  param_ids_.emplace(name, v.id);
  return v;
}

Var Graph::record(std::string_view op, Tensor value, std::vector<Var> inputs, BackwardFn backward)
{
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const auto & in : inputs) {
    check_owned(in);
    n.inputs.push_back(in.id);
    n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Tensor & Graph::value(Var v) const
{
  check_owned(v);
  return nodes_[v.id].value;
}

Tensor Graph::grad(Var v) const
{
  check_owned(v);
  const Node & n = nodes_[v.id];
  if (!n.has_grad) return Tensor(n.value.shape(), 0.0);
  return n.grad;
}

std::string_view Graph::op_name(Var v) const
{
  check_owned(v);
  return nodes_[v.id].op;
}

Gradients Graph::backward(Var loss)
{
  check_owned(loss);
  if (nodes_[loss.id].value.size() != 1) {
    throw ContractError(
      "backward requires a scalar loss, got shape " + shape_str(nodes_[loss.id].value.shape()));
  }
  for (auto & n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  last_visits_ = 0;

  Node & root = nodes_[loss.id];
  root.grad = Tensor(root.value.shape(), 1.0);
  root.has_grad = true;

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node & node = nodes_[i];
    if (!node.has_grad || !node.backward) continue;
    ++last_visits_;
    BackwardArgs args{node.value, node.grad, {}, {}};
    args.inputs.reserve(node.inputs.size());
    args.grad_inputs.reserve(node.inputs.size());
    for (auto in : node.inputs) {
      Node & src = nodes_[in];
      args.inputs.push_back(&src.value);
      if (src.requires_grad) {
        if (!src.has_grad) {
          src.grad = Tensor(src.value.shape(), 0.0);
          src.has_grad = true;
        }
        args.grad_inputs.push_back(&src.grad);
      } else {
        args.grad_inputs.push_back(nullptr);
      }
    }
    node.backward(args);
  }

  Gradients out;
  for (const auto & [name, id] : param_ids_) {
    const Node & n = nodes_[id];
    out.emplace(name, n.has_grad ? n.grad : Tensor(n.value.shape(), 0.0));
  }
  return out;
}

}  // namespace trajcast::ndgrad
