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

#include "trajcast/ndgrad/ops.hpp"

#include "trajcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace trajcast::ndgrad
{

namespace
{

[[noreturn]] void shape_error(std::string_view op, const Shape & a, const Shape & b)
{
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

[[noreturn]] void rank_error(std::string_view op, const Shape & a, std::string_view expected)
{
  throw DimensionError(std::string(op) + ": expected " + std::string(expected) + ", got " + shape_str(a));
}

Graph & same_graph(std::string_view op, Var a, Var b)
{
  if (a.graph == nullptr || a.graph != b.graph) {
    throw ContractError(std::string(op) + ": operands belong to different graphs");
  }
  return *a.graph;
}

void require_same_shape(std::string_view op, Var a, Var b)
{
  if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

template <class Fwd, class Deriv>
Var unary(std::string_view op, Var a, Fwd fwd, Deriv deriv)
{
  const Tensor & x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  return a.graph->record(op, std::move(y), {a}, [deriv](BackwardArgs & g) {
    Tensor * gx = g.grad_inputs[0];
    const Tensor & x = *g.inputs[0];
    for (std::size_t i = 0; i < x.size(); ++i) {
      (*gx)[i] += g.grad_output[i] * deriv(x[i], g.output[i]);
    }
  });
}

}  // namespace

Var matmul(Var a, Var b)
{
  Graph & graph = same_graph("matmul", a, b);
  const Shape & sa = a.shape();
  const Shape & sb = b.shape();
  if (sa.empty() || sa.size() > 2 || sb.empty() || sb.size() > 2 || (sa.size() == 1 && sb.size() == 1)) {
    shape_error("matmul", sa, sb);
  }
  const std::size_t m = sa.size() == 2 ? sa[0] : 1;
  const std::size_t k = sa.back();
  const std::size_t kb = sb[0];
  const std::size_t n = sb.size() == 2 ? sb[1] : 1;
  if (k != kb) shape_error("matmul", sa, sb);

  Shape out_shape;
  if (sa.size() == 2) out_shape.push_back(m);
  if (sb.size() == 2) out_shape.push_back(n);

  const auto & A = a.value().values();
  const auto & B = b.value().values();
  Tensor out(out_shape, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double * row = out.data().data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double * brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }

  return graph.record("matmul", std::move(out), {a, b}, [m, k, n](BackwardArgs & g) {
    const auto & A = g.inputs[0]->values();
    const auto & B = g.inputs[1]->values();
    const auto & G = g.grad_output.values();
    if (Tensor * ga = g.grad_inputs[0]) {
      // dA = G * B^T
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double * brow = B.data() + p * n;
          const double * grow = G.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          (*ga)[i * k + p] += acc;
        }
      }
    }
    if (Tensor * gb = g.grad_inputs[1]) {
      // dB = A^T * G
      for (std::size_t i = 0; i < m; ++i) {
        const double * grow = G.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A[i * k + p];
          if (av == 0.0) continue;
          double * gbrow = gb->data().data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

Var add(Var a, Var b)
{
  Graph & graph = same_graph("add", a, b);
  require_same_shape("add", a, b);
  Tensor out = a.value();
  const Tensor & y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  return graph.record("add", std::move(out), {a, b}, [](BackwardArgs & g) {
    for (Tensor * gi : g.grad_inputs) {
      if (!gi) continue;
      for (std::size_t i = 0; i < gi->size(); ++i) (*gi)[i] += g.grad_output[i];
    }
  });
}

Var sub(Var a, Var b)
{
  Graph & graph = same_graph("sub", a, b);
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  const Tensor & y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  return graph.record("sub", std::move(out), {a, b}, [](BackwardArgs & g) {
    if (Tensor * ga = g.grad_inputs[0]) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g.grad_output[i];
    }
    if (Tensor * gb = g.grad_inputs[1]) {
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] -= g.grad_output[i];
    }
  });
}

Var mul(Var a, Var b)
{
  Graph & graph = same_graph("mul", a, b);
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  const Tensor & y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  return graph.record("mul", std::move(out), {a, b}, [](BackwardArgs & g) {
    const Tensor & x = *g.inputs[0];
    const Tensor & y = *g.inputs[1];
    if (Tensor * ga = g.grad_inputs[0]) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g.grad_output[i] * y[i];
    }
    if (Tensor * gb = g.grad_inputs[1]) {
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += g.grad_output[i] * x[i];
    }
  });
}

Var div(Var a, Var b)
{
  Graph & graph = same_graph("div", a, b);
  require_same_shape("div", a, b);
  Tensor out = a.value();
  const Tensor & y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= y[i];
  return graph.record("div", std::move(out), {a, b}, [](BackwardArgs & g) {
    const Tensor & y = *g.inputs[1];
    if (Tensor * ga = g.grad_inputs[0]) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g.grad_output[i] / y[i];
    }
    if (Tensor * gb = g.grad_inputs[1]) {
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] -= g.grad_output[i] * g.output[i] / y[i];
    }
  });
}

Var scale(Var a, double factor)
{
  return unary("scale", a, [factor](double x) { return factor * x; },
               [factor](double, double) { return factor; });
}

Var shift(Var a, double offset)
{
  return unary("shift", a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var sigmoid(Var a)
{
  return unary(
    "sigmoid", a,
    [](double x) {
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      const double e = std::exp(x);
      return e / (1.0 + e);
    },
    [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a)
{
  return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a)
{
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var a)
{
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a)
{
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(Var a)
{
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp(Var a, double lo, double hi)
{
  if (!(lo <= hi)) throw ContractError("clamp: lo must not exceed hi");
  return unary(
    "clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
    [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var sum(Var a)
{
  const Tensor & x = a.value();
  double s = 0.0;
  for (double v : x.values()) s += v;
  return a.graph->record("sum", Tensor::scalar(s), {a}, [](BackwardArgs & g) {
    const double go = g.grad_output[0];
    Tensor * gx = g.grad_inputs[0];
    for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += go;
  });
}

Var mean(Var a)
{
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var softmax(Var a)
{
  const Tensor & x = a.value();
  if (x.rank() != 1) rank_error("softmax", x.shape(), "rank-1 tensor");
  const double hi = *std::max_element(x.values().begin(), x.values().end());
  Tensor y(x.shape());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - hi);
    z += y[i];
  }
  for (std::size_t i = 0; i < y.size(); ++i) y[i] /= z;
  return a.graph->record("softmax", std::move(y), {a}, [](BackwardArgs & g) {
    const Tensor & y = g.output;
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += g.grad_output[i] * y[i];
    Tensor * gx = g.grad_inputs[0];
    for (std::size_t i = 0; i < y.size(); ++i) (*gx)[i] += y[i] * (g.grad_output[i] - dot);
  });
}

Var concat(const std::vector<Var> & parts)
{
  if (parts.empty()) throw ContractError("concat: no operands");
  Graph & graph = *parts.front().graph;
  std::vector<double> data;
  for (const auto & p : parts) {
    if (p.graph != &graph) throw ContractError("concat: operands belong to different graphs");
    if (p.value().rank() != 1) rank_error("concat", p.shape(), "rank-1 operands");
    data.insert(data.end(), p.value().values().begin(), p.value().values().end());
  }
  return graph.record("concat", Tensor::vector(std::move(data)), parts, [](BackwardArgs & g) {
    std::size_t off = 0;
    for (std::size_t j = 0; j < g.inputs.size(); ++j) {
      const std::size_t len = g.inputs[j]->size();
      if (Tensor * gj = g.grad_inputs[j]) {
        for (std::size_t i = 0; i < len; ++i) (*gj)[i] += g.grad_output[off + i];
      }
      off += len;
    }
  });
}

Var reshape(Var a, Shape shape)
{
  Tensor out = a.value().reshaped(std::move(shape));
  return a.graph->record("reshape", std::move(out), {a}, [](BackwardArgs & g) {
    Tensor * gx = g.grad_inputs[0];
    for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += g.grad_output[i];
  });
}

Var flatten(Var a) { return reshape(a, Shape{a.value().size()}); }

Var slice(Var a, std::size_t begin, std::size_t len)
{
  const Tensor & x = a.value();
  if (x.rank() != 1 || len == 0 || begin + len > x.size()) {
    throw DimensionError(
      "slice: range [" + std::to_string(begin) + ", " + std::to_string(begin + len) +
      ") invalid for shape " + shape_str(x.shape()));
  }
  std::vector<double> data(x.values().begin() + static_cast<std::ptrdiff_t>(begin),
                           x.values().begin() + static_cast<std::ptrdiff_t>(begin + len));
  return a.graph->record("slice", Tensor::vector(std::move(data)), {a}, [begin](BackwardArgs & g) {
    Tensor * gx = g.grad_inputs[0];
    for (std::size_t i = 0; i < g.grad_output.size(); ++i) (*gx)[begin + i] += g.grad_output[i];
  });
}

Var element(Var a, std::size_t i)
{
  const Tensor & x = a.value();
  if (i >= x.size()) {
    throw DimensionError("element: index " + std::to_string(i) + " out of range for " + shape_str(x.shape()));
  }
  return a.graph->record("element", Tensor::scalar(x[i]), {a}, [i](BackwardArgs & g) {
    (*g.grad_inputs[0])[i] += g.grad_output[0];
  });
}

Var embedding(Var table, std::size_t index)
{
  const Tensor & t = table.value();
  if (t.rank() != 2) rank_error("embedding", t.shape(), "[V, D] table");
  const std::size_t rows = t.dim(0);
  const std::size_t d = t.dim(1);
  if (index >= rows) {
    throw ContractError(
      "embedding: index " + std::to_string(index) + " out of range for table with " + std::to_string(rows) +
      " rows");
  }
  std::vector<double> row(t.values().begin() + static_cast<std::ptrdiff_t>(index * d),
                          t.values().begin() + static_cast<std::ptrdiff_t>((index + 1) * d));
  return table.graph->record("embedding", Tensor::vector(std::move(row)), {table}, [index, d](BackwardArgs & g) {
    Tensor * gt = g.grad_inputs[0];
    for (std::size_t j = 0; j < d; ++j) (*gt)[index * d + j] += g.grad_output[j];
  });
}

Var weighted_sum(const std::vector<Var> & items, Var weights)
{
  const Tensor & w = weights.value();
  if (w.rank() != 1 || w.size() != items.size() || items.empty()) {
    throw DimensionError(
      "weighted_sum: " + std::to_string(items.size()) + " items with weights of shape " + shape_str(w.shape()));
  }
  Graph & graph = *weights.graph;
  const Shape & shape = items.front().shape();
  Tensor out(shape, 0.0);
  for (std::size_t j = 0; j < items.size(); ++j) {
    if (items[j].graph != &graph) throw ContractError("weighted_sum: operands belong to different graphs");
    if (items[j].shape() != shape) shape_error("weighted_sum", shape, items[j].shape());
    const Tensor & v = items[j].value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[j] * v[i];
  }
  std::vector<Var> inputs = items;
  inputs.push_back(weights);
  return graph.record("weighted_sum", std::move(out), std::move(inputs), [](BackwardArgs & g) {
    const std::size_t n = g.inputs.size() - 1;
    const Tensor & w = *g.inputs[n];
    Tensor * gw = g.grad_inputs[n];
    for (std::size_t j = 0; j < n; ++j) {
      const Tensor & v = *g.inputs[j];
      if (Tensor * gv = g.grad_inputs[j]) {
        for (std::size_t i = 0; i < v.size(); ++i) (*gv)[i] += w[j] * g.grad_output[i];
      }
      if (gw) {
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * g.grad_output[i];
        (*gw)[j] += acc;
      }
    }
  });
}

Var segment_sum(
  Graph & graph, const std::vector<Var> & items, const std::vector<std::size_t> & segment,
  std::size_t segments, std::size_t d)
{
  if (items.size() != segment.size()) {
    throw DimensionError("segment_sum: " + std::to_string(items.size()) + " items but " +
                         std::to_string(segment.size()) + " segment ids");
  }
  Tensor out(Shape{segments, d}, 0.0);
  for (std::size_t j = 0; j < items.size(); ++j) {
    if (items[j].graph != &graph) throw ContractError("segment_sum: operands belong to different graphs");
    const Tensor & v = items[j].value();
    if (v.rank() != 1 || v.size() != d) rank_error("segment_sum", v.shape(), "rank-1 items of length " + std::to_string(d));
    if (segment[j] >= segments) {
      throw ContractError("segment_sum: segment id " + std::to_string(segment[j]) + " out of range");
    }
    for (std::size_t i = 0; i < d; ++i) out[segment[j] * d + i] += v[i];
  }
  return graph.record("segment_sum", std::move(out), items, [segment, d](BackwardArgs & g) {
    for (std::size_t j = 0; j < g.inputs.size(); ++j) {
      if (Tensor * gv = g.grad_inputs[j]) {
        for (std::size_t i = 0; i < d; ++i) (*gv)[i] += g.grad_output[segment[j] * d + i];
      }
    }
  });
}

Var conv2d(Var x, Var w, Var b, std::size_t stride)
{
  Graph & graph = same_graph("conv2d", x, w);
  same_graph("conv2d", x, b);
  const Shape & sx = x.shape();
  const Shape & sw = w.shape();
  if (sx.size() != 3) rank_error("conv2d", sx, "input [C, H, W]");
  if (sw.size() != 4 || sw[1] != sx[0]) shape_error("conv2d", sx, sw);
  if (b.shape() != Shape{sw[0]}) shape_error("conv2d", sw, b.shape());
  if (stride == 0) throw ContractError("conv2d: stride must be positive");
  const std::size_t C = sx[0], H = sx[1], W = sx[2];
  const std::size_t F = sw[0], KH = sw[2], KW = sw[3];
  if (KH > H || KW > W) shape_error("conv2d", sx, sw);
  const std::size_t HO = (H - KH) / stride + 1;
  const std::size_t WO = (W - KW) / stride + 1;

  const double * X = x.value().data().data();
  const double * Wt = w.value().data().data();
  const double * B = b.value().data().data();
  Tensor out(Shape{F, HO, WO}, 0.0);
  double * Y = out.data().data();
  for (std::size_t f = 0; f < F; ++f) {
    double * yf = Y + f * HO * WO;
    std::fill(yf, yf + HO * WO, B[f]);
    for (std::size_t c = 0; c < C; ++c) {
      const double * xc = X + c * H * W;
      for (std::size_t ki = 0; ki < KH; ++ki) {
        for (std::size_t kj = 0; kj < KW; ++kj) {
          const double wv = Wt[((f * C + c) * KH + ki) * KW + kj];
          for (std::size_t oy = 0; oy < HO; ++oy) {
            const double * xrow = xc + (oy * stride + ki) * W + kj;
            double * yrow = yf + oy * WO;
            for (std::size_t ox = 0; ox < WO; ++ox) yrow[ox] += wv * xrow[ox * stride];
          }
        }
      }
    }
  }

  return graph.record(
    "conv2d", std::move(out), {x, w, b}, [C, H, W, F, KH, KW, HO, WO, stride](BackwardArgs & g) {
      const double * X = g.inputs[0]->data().data();
      const double * Wt = g.inputs[1]->data().data();
      const double * G = g.grad_output.data().data();
      Tensor * gx = g.grad_inputs[0];
      Tensor * gw = g.grad_inputs[1];
      Tensor * gb = g.grad_inputs[2];
      for (std::size_t f = 0; f < F; ++f) {
        const double * gf = G + f * HO * WO;
        if (gb) {
          double acc = 0.0;
          for (std::size_t i = 0; i < HO * WO; ++i) acc += gf[i];
          (*gb)[f] += acc;
        }
        for (std::size_t c = 0; c < C; ++c) {
          const double * xc = X + c * H * W;
          for (std::size_t ki = 0; ki < KH; ++ki) {
            for (std::size_t kj = 0; kj < KW; ++kj) {
              const std::size_t widx = ((f * C + c) * KH + ki) * KW + kj;
              const double wv = Wt[widx];
              double acc = 0.0;
              for (std::size_t oy = 0; oy < HO; ++oy) {
                const std::size_t row = (oy * stride + ki) * W + kj;
                const double * grow = gf + oy * WO;
                if (gw) {
                  const double * xrow = xc + row;
                  for (std::size_t ox = 0; ox < WO; ++ox) acc += grow[ox] * xrow[ox * stride];
                }
                if (gx) {
                  double * gxrow = gx->data().data() + c * H * W + row;
                  for (std::size_t ox = 0; ox < WO; ++ox) gxrow[ox * stride] += grow[ox] * wv;
                }
              }
              if (gw) (*gw)[widx] += acc;
            }
          }
        }
      }
    });
}

Var maxpool2d(Var x, std::size_t size, std::size_t stride)
{
  const Shape & sx = x.shape();
  if (sx.size() != 3) rank_error("maxpool2d", sx, "input [C, H, W]");
  if (size == 0 || stride == 0) throw ContractError("maxpool2d: window and stride must be positive");
  const std::size_t C = sx[0], H = sx[1], W = sx[2];
  if (size > H || size > W) rank_error("maxpool2d", sx, "spatial dims >= window " + std::to_string(size));
  const std::size_t HO = (H - size) / stride + 1;
  const std::size_t WO = (W - size) / stride + 1;
  const Tensor & in = x.value();
  Tensor out(Shape{C, HO, WO});
  std::vector<std::size_t> argmax(C * HO * WO);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t oy = 0; oy < HO; ++oy) {
      for (std::size_t ox = 0; ox < WO; ++ox) {
        std::size_t best = c * H * W + (oy * stride) * W + ox * stride;
        for (std::size_t i = 0; i < size; ++i) {
          for (std::size_t j = 0; j < size; ++j) {
            const std::size_t idx = c * H * W + (oy * stride + i) * W + ox * stride + j;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (c * HO + oy) * WO + ox;
        out[o] = in[best];
        argmax[o] = best;
      }
    }
  }
  return x.graph->record("maxpool2d", std::move(out), {x}, [argmax = std::move(argmax)](BackwardArgs & g) {
    Tensor * gx = g.grad_inputs[0];
    for (std::size_t o = 0; o < argmax.size(); ++o) (*gx)[argmax[o]] += g.grad_output[o];
  });
}

Var local_response_norm(Var x, const LrnParams & p)
{
  const Shape & sx = x.shape();
  if (sx.size() != 3) rank_error("local_response_norm", sx, "input [C, H, W]");
  if (p.n == 0) throw ContractError("local_response_norm: window n must be positive");
  const std::size_t C = sx[0];
  const std::size_t plane = sx[1] * sx[2];
  const std::size_t half = p.n / 2;
  const Tensor & in = x.value();

  // denom[c] = k + alpha * sum of squares over the channel window
  Tensor denom(sx);
  Tensor out(sx);
  for (std::size_t c = 0; c < C; ++c) {
    const std::size_t lo = c >= half ? c - half : 0;
    const std::size_t hi = std::min(C - 1, c + half);
    for (std::size_t i = 0; i < plane; ++i) {
      double acc = 0.0;
      for (std::size_t cc = lo; cc <= hi; ++cc) {
        const double v = in[cc * plane + i];
        acc += v * v;
      }
      const double s = p.k + p.alpha * acc;
      denom[c * plane + i] = s;
      out[c * plane + i] = in[c * plane + i] * std::pow(s, -p.beta);
    }
  }
  return x.graph->record(
    "local_response_norm", std::move(out), {x}, [p, C, plane, half, denom = std::move(denom)](BackwardArgs & g) {
      const Tensor & in = *g.inputs[0];
      Tensor * gx = g.grad_inputs[0];
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t lo = c >= half ? c - half : 0;
        const std::size_t hi = std::min(C - 1, c + half);
        for (std::size_t i = 0; i < plane; ++i) {
          const std::size_t o = c * plane + i;
          const double s = denom[o];
          const double go = g.grad_output[o];
          (*gx)[o] += go * std::pow(s, -p.beta);
          const double common = -go * in[o] * p.beta * std::pow(s, -p.beta - 1.0) * 2.0 * p.alpha;
          for (std::size_t cc = lo; cc <= hi; ++cc) {
            (*gx)[cc * plane + i] += common * in[cc * plane + i];
          }
        }
      }
    });
}

}  // namespace trajcast::ndgrad
