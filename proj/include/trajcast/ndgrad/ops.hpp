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

#ifndef TRAJCAST__NDGRAD__OPS_HPP_
#define TRAJCAST__NDGRAD__OPS_HPP_

#include "trajcast/ndgrad/graph.hpp"

#include <vector>

// Differentiable operations. None of them broadcast: operands must have the
// documented shapes or a DimensionError naming the op and the shapes is thrown.

namespace trajcast::ndgrad
{

/// [m,k]x[k,n] -> [m,n];  [m,k]x[k] -> [m];  [k]x[k,n] -> [n].
Var matmul(Var a, Var b);

// Elementwise, identical shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var scale(Var a, double factor);
Var shift(Var a, double offset);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
/// Clamps into [lo, hi]; gradient is zero where the input was clamped.
Var clamp(Var a, double lo, double hi);

/// Sum of all elements, scalar result.
Var sum(Var a);
Var mean(Var a);

/// Softmax over a rank-1 tensor.
Var softmax(Var a);

/// Concatenation of rank-1 tensors.
Var concat(const std::vector<Var> & parts);
Var reshape(Var a, Shape shape);
Var flatten(Var a);
/// `len` elements of a rank-1 tensor starting at `begin`.
Var slice(Var a, std::size_t begin, std::size_t len);
/// Element `i` (flat index) as a scalar.
Var element(Var a, std::size_t i);

/// Row `index` of a [V,D] table, shape [D].
Var embedding(Var table, std::size_t index);

/// sum_j weights[j] * items[j]; items share one shape, weights is rank-1 of length |items|.
Var weighted_sum(const std::vector<Var> & items, Var weights);

/// Sums rank-1 items of length d into `segments` buckets: result [segments, d].
/// `items` may be empty, giving zeros.
Var segment_sum(
  Graph & graph, const std::vector<Var> & items, const std::vector<std::size_t> & segment,
  std::size_t segments, std::size_t d);

/// Valid cross-correlation. x [C,H,W], w [F,C,kh,kw], b [F] -> [F,Ho,Wo].
Var conv2d(Var x, Var w, Var b, std::size_t stride = 1);

/// Max pooling of [C,H,W] with square window; trailing rows/cols that do not fill a window are dropped.
Var maxpool2d(Var x, std::size_t size = 2, std::size_t stride = 2);

struct LrnParams
{
  double k = 2.0;
  std::size_t n = 5;
  double alpha = 1e-4;
  double beta = 0.75;
};

/// Cross-channel local response normalization of [C,H,W]:
/// y_c = x_c / (k + alpha * sum_{|c'-c| <= n/2} x_{c'}^2)^beta.
Var local_response_norm(Var x, const LrnParams & params = {});

}  // namespace trajcast::ndgrad

#endif  // TRAJCAST__NDGRAD__OPS_HPP_
