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

#ifndef TRAJCAST__MODEL__MODEL_HPP_
#define TRAJCAST__MODEL__MODEL_HPP_

#include "trajcast/ndgrad/graph.hpp"
#include "trajcast/pool/context_pool.hpp"
#include "trajcast/scene/scene.hpp"

#include <json.hpp>

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace trajcast::model
{

using scene::Point2;
using scene::SubjectClass;

/// D-ATT sees positions and neighbors; SD-ATT also sees the static reachability window.
enum class Mode
{
  DAtt,
  SdAtt,
};

std::string to_string(Mode mode);
/// Accepts "d-att" / "sd-att" (case-insensitive); throws ConfigError otherwise.
Mode parse_mode(const std::string & text);

struct ModelConfig
{
  Mode mode = Mode::SdAtt;
  std::size_t hidden_dim = 32;
  /// Attention window k.
  std::size_t window = 5;
  std::size_t t_obs = 8;
  std::size_t n_pred = 12;
  std::size_t pos_embed = 16;
  std::size_t social_embed = 16;
  std::size_t reach_embed = 8;
  std::size_t attention_dim = 16;
  /// Typical per-step displacement m (normalized units). When positive, position
  /// inputs also carry the last displacement divided by m and the predicted
  /// step is mu = x_prev + m (o1, o2).
  double motion_scale = 0.02;

  double neighborhood = 0.2;
  std::size_t social_grid = 4;
  std::uint32_t class_count = 1;
  std::size_t reach_distance = 60;
  std::size_t reach_cell = 20;
  std::size_t max_neighbors = 40;

  /// Throws ContractError.
  void validate() const;
  pool::PoolConfig pool() const;
  std::size_t sequence_length() const noexcept { return t_obs + n_pred; }
  /// Length of a position input: 2, or 4 with the displacement.
  std::size_t position_size() const noexcept { return motion_scale > 0.0 ? 4 : 2; }
  /// Length of embed_inputs' output.
  std::size_t input_size() const noexcept;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys raise ConfigError.
  static ModelConfig from_json(const nlohmann::json & j);
};

/// One parameter set per class, names prefixed "c{class}.". LSTM forget-gate biases start at 1.
ndgrad::ParameterSet init_model(const ModelConfig & cfg, std::uint64_t seed);
ndgrad::ParameterSet zero_model(const ModelConfig & cfg);

/// Concatenation of sigmoid embeddings of position, flattened social tensor
/// and, in SD-ATT mode, the flattened reachability window. Passing `reach`
/// in D-ATT mode or omitting it in SD-ATT mode is a ContractError.
ndgrad::Var embed_inputs(ndgrad::Graph & g, const ModelConfig & cfg, const ndgrad::ParameterSet & params,
                         SubjectClass cls, ndgrad::Var position, ndgrad::Var social,
                         std::optional<ndgrad::Var> reach);

struct LstmState
{
  ndgrad::Var h;
  ndgrad::Var c;
};

LstmState zero_state(ndgrad::Graph & g, const ModelConfig & cfg);

/// Gate order in W: input, forget, output, candidate. W is [4H, |x|+H].
LstmState lstm_step(ndgrad::Graph & g, const ndgrad::ParameterSet & params, const std::string & prefix,
                    const LstmState & prev, ndgrad::Var input);

struct EncoderState
{
  LstmState lstm;
  /// Most recent hidden states, oldest first, at most k.
  std::deque<ndgrad::Var> history;
};

EncoderState encoder_step(ndgrad::Graph & g, const ModelConfig & cfg, const ndgrad::ParameterSet & params,
                          SubjectClass cls, const EncoderState & prev, ndgrad::Var input);

struct AttentionState
{
  ndgrad::Var weights;
  ndgrad::Var context;
};

/// e_j = v . tanh(W_s s_prev + W_h h_j), alpha = softmax(e), C = sum_j alpha_j h_j.
AttentionState attention(ndgrad::Graph & g, const ModelConfig & cfg, const ndgrad::ParameterSet & params,
                         SubjectClass cls, const std::deque<ndgrad::Var> & history, ndgrad::Var s_prev);

/// LSTM update on concat(x_prev, C).
LstmState decoder_step(ndgrad::Graph & g, const ModelConfig & cfg, const ndgrad::ParameterSet & params,
                       SubjectClass cls, const LstmState & prev, ndgrad::Var x_prev, ndgrad::Var context);

/// Raw 5-vector o = W_o s + b_o.
ndgrad::Var head_output(ndgrad::Graph & g, const ndgrad::ParameterSet & params, SubjectClass cls, ndgrad::Var s);

struct GaussianParams
{
  Point2 mu;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double rho = 0.0;
};

/// mu = origin + scale (o1, o2), sigma = exp(o3, o4), rho = tanh(o5). The
/// exponent is clamped to [-20, 20] and |rho| to 1 - 1e-9 so both stay valid in
/// floating point.
GaussianParams gaussian_head(std::span<const double> o, Point2 origin = {}, double scale = 1.0);

/// -log N(x; mu, sigma, rho).
double nll(const GaussianParams & theta, Point2 x);

/// Graph form of nll(gaussian_head(o, origin, scale), x) with analytic gradient w.r.t. o.
ndgrad::Var gaussian_nll(ndgrad::Var o, Point2 origin, Point2 x, double scale = 1.0);

/// Scale used by the model's head: motion_scale, or 1 when it is 0.
double head_scale(const ModelConfig & cfg);

/// mu + L z with L the lower Cholesky factor of the covariance.
Point2 sample(const GaussianParams & theta, std::mt19937_64 & rng);

}  // namespace trajcast::model

#endif  // TRAJCAST__MODEL__MODEL_HPP_
