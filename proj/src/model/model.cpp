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

#include "trajcast/model/model.hpp"

#include "trajcast/error.hpp"
#include "trajcast/ndgrad/ops.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <tuple>

namespace trajcast::model
{

namespace nd = ndgrad;

std::string to_string(Mode mode)
{
  return mode == Mode::DAtt ? "d-att" : "sd-att";
}

Mode parse_mode(const std::string & text)
{
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::replace(t.begin(), t.end(), '_', '-');
  if (t == "d-att" || t == "datt") return Mode::DAtt;
  if (t == "sd-att" || t == "sdatt") return Mode::SdAtt;
  throw ConfigError(fmt::format("unknown model mode '{}' (expected d-att or sd-att)", text));
}

void ModelConfig::validate() const
{
  if (hidden_dim == 0) throw ContractError("model: hidden_dim must be positive");
  if (window < 1 || window > t_obs) {
    throw ContractError(fmt::format("model: window k={} must satisfy 1 <= k <= t_obs={}", window, t_obs));
  }
  if (n_pred < 1) throw ContractError("model: n_pred must be >= 1");
  if (pos_embed == 0 || social_embed == 0 || attention_dim == 0) {
    throw ContractError("model: embedding and attention sizes must be positive");
  }
  if (mode == Mode::SdAtt && reach_embed == 0) throw ContractError("model: reach_embed must be positive");
  if (!(motion_scale >= 0.0)) throw ContractError("model: motion_scale must be >= 0");
  if (max_neighbors == 0) throw ContractError("model: max_neighbors must be positive");
  pool().validate();
}

pool::PoolConfig ModelConfig::pool() const
{
  return {neighborhood, social_grid, hidden_dim, class_count, reach_distance, reach_cell, max_neighbors};
}

std::size_t ModelConfig::input_size() const noexcept
{
  return pos_embed + social_embed + (mode == Mode::SdAtt ? reach_embed : 0);
}

nlohmann::json ModelConfig::to_json() const
{
  return {{"mode", to_string(mode)},
          {"hidden_dim", hidden_dim},
          {"window", window},
          {"t_obs", t_obs},
          {"n_pred", n_pred},
          {"pos_embed", pos_embed},
          {"social_embed", social_embed},
          {"reach_embed", reach_embed},
          {"attention_dim", attention_dim},
          {"motion_scale", motion_scale},
          {"neighborhood", neighborhood},
          {"social_grid", social_grid},
          {"class_count", class_count},
          {"reach_distance", reach_distance},
          {"reach_cell", reach_cell},
          {"max_neighbors", max_neighbors}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json & j)
{
  ModelConfig c;
  for (const auto & [key, value] : j.items()) {
    try {
      if (key == "mode") c.mode = parse_mode(value.get<std::string>());
      else if (key == "hidden_dim") c.hidden_dim = value.get<std::size_t>();
      else if (key == "window") c.window = value.get<std::size_t>();
      else if (key == "t_obs") c.t_obs = value.get<std::size_t>();
      else if (key == "n_pred") c.n_pred = value.get<std::size_t>();
      else if (key == "pos_embed") c.pos_embed = value.get<std::size_t>();
      else if (key == "social_embed") c.social_embed = value.get<std::size_t>();
      else if (key == "reach_embed") c.reach_embed = value.get<std::size_t>();
      else if (key == "attention_dim") c.attention_dim = value.get<std::size_t>();
      else if (key == "motion_scale") c.motion_scale = value.get<double>();
      else if (key == "neighborhood") c.neighborhood = value.get<double>();
      else if (key == "social_grid") c.social_grid = value.get<std::size_t>();
      else if (key == "class_count") c.class_count = value.get<std::uint32_t>();
      else if (key == "reach_distance") c.reach_distance = value.get<std::size_t>();
      else if (key == "reach_cell") c.reach_cell = value.get<std::size_t>();
      else if (key == "max_neighbors") c.max_neighbors = value.get<std::size_t>();
      else throw ConfigError(fmt::format("model.{}: unknown key", key));
    } catch (const nlohmann::json::exception & e) {
      throw ConfigError(fmt::format("model.{}: {}", key, e.what()));
    }
  }
  return c;
}

namespace
{

enum class Init
{
  Weight,
  Zero,
  ForgetBias,
};

std::string prefix(SubjectClass cls)
{
  return fmt::format("c{}.", cls.id);
}

std::vector<std::tuple<std::string, nd::Shape, Init>> layout(const ModelConfig & cfg)
{
  cfg.validate();
  const std::size_t H = cfg.hidden_dim;
  const auto reach = cfg.pool().reach_side();
  std::vector<std::tuple<std::string, nd::Shape, Init>> out;
  for (std::uint32_t k = 0; k < cfg.class_count; ++k) {
    const std::string p = prefix(SubjectClass{k});
    out.emplace_back(p + "embed.pos.W", nd::Shape{cfg.pos_embed, cfg.position_size()}, Init::Weight);
    out.emplace_back(p + "embed.pos.b", nd::Shape{cfg.pos_embed}, Init::Zero);
    out.emplace_back(p + "embed.social.W", nd::Shape{cfg.social_embed, cfg.pool().social_size()}, Init::Weight);
    out.emplace_back(p + "embed.social.b", nd::Shape{cfg.social_embed}, Init::Zero);
    if (cfg.mode == Mode::SdAtt) {
      out.emplace_back(p + "embed.reach.W", nd::Shape{cfg.reach_embed, reach * reach}, Init::Weight);
      out.emplace_back(p + "embed.reach.b", nd::Shape{cfg.reach_embed}, Init::Zero);
    }
    out.emplace_back(p + "enc.W", nd::Shape{4 * H, cfg.input_size() + H}, Init::Weight);
    out.emplace_back(p + "enc.b", nd::Shape{4 * H}, Init::ForgetBias);
    out.emplace_back(p + "att.Ws", nd::Shape{cfg.attention_dim, H}, Init::Weight);
    out.emplace_back(p + "att.Wh", nd::Shape{cfg.attention_dim, H}, Init::Weight);
    out.emplace_back(p + "att.v", nd::Shape{cfg.attention_dim}, Init::Weight);
    out.emplace_back(p + "dec.W", nd::Shape{4 * H, cfg.position_size() + 2 * H}, Init::Weight);
    out.emplace_back(p + "dec.b", nd::Shape{4 * H}, Init::ForgetBias);
    out.emplace_back(p + "out.W", nd::Shape{5, H}, Init::Weight);
    out.emplace_back(p + "out.b", nd::Shape{5}, Init::Zero);
  }
  return out;
}

nd::Var dense(nd::Graph & g, const nd::ParameterSet & params, const std::string & name, nd::Var x)
{
  return nd::add(nd::matmul(g.parameter(params, name + ".W"), x), g.parameter(params, name + ".b"));
}

void check_class(const ModelConfig & cfg, SubjectClass cls)
{
  if (cls.id >= cfg.class_count) {
    throw ContractError(fmt::format("model: class id {} >= class count {}", cls.id, cfg.class_count));
  }
}

}  // namespace

nd::ParameterSet init_model(const ModelConfig & cfg, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  nd::ParameterSet params;
  for (const auto & [name, shape, init] : layout(cfg)) {
    nd::Tensor t(shape, 0.0);
    if (init == Init::Weight) {
      const double fan_in = static_cast<double>(shape.size() == 2 ? shape[1] : shape[0]);
      std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(fan_in));
      for (auto & v : t.data()) v = normal(rng);
    } else if (init == Init::ForgetBias) {
      const std::size_t H = cfg.hidden_dim;
      for (std::size_t i = H; i < 2 * H; ++i) t[i] = 1.0;
    }
    params.add(name, std::move(t));
  }
  return params;
}

nd::ParameterSet zero_model(const ModelConfig & cfg)
{
  nd::ParameterSet params;
  for (const auto & [name, shape, init] : layout(cfg)) params.add(name, nd::Tensor(shape, 0.0));
  return params;
}

nd::Var embed_inputs(nd::Graph & g, const ModelConfig & cfg, const nd::ParameterSet & params, SubjectClass cls,
                     nd::Var position, nd::Var social, std::optional<nd::Var> reach)
{
  check_class(cfg, cls);
  if (cfg.mode == Mode::DAtt && reach) throw ContractError("embed_inputs: D-ATT takes no reachability input");
  if (cfg.mode == Mode::SdAtt && !reach) throw ContractError("embed_inputs: SD-ATT needs a reachability input");
  const std::string p = prefix(cls);
  std::vector<nd::Var> parts{nd::sigmoid(dense(g, params, p + "embed.pos", position)),
                             nd::sigmoid(dense(g, params, p + "embed.social", nd::flatten(social)))};
  if (reach) parts.push_back(nd::sigmoid(dense(g, params, p + "embed.reach", nd::flatten(*reach))));
  return nd::concat(parts);
}

LstmState zero_state(nd::Graph & g, const ModelConfig & cfg)
{
  return {g.constant(nd::Tensor({cfg.hidden_dim}, 0.0)), g.constant(nd::Tensor({cfg.hidden_dim}, 0.0))};
}

LstmState lstm_step(nd::Graph & g, const nd::ParameterSet & params, const std::string & name,
                    const LstmState & prev, nd::Var input)
{
  const std::size_t H = prev.h.value().size();
  nd::Var gates = dense(g, params, name, nd::concat({input, prev.h}));
  nd::Var i = nd::sigmoid(nd::slice(gates, 0, H));
  nd::Var f = nd::sigmoid(nd::slice(gates, H, H));
  nd::Var o = nd::sigmoid(nd::slice(gates, 2 * H, H));
  nd::Var cand = nd::tanh(nd::slice(gates, 3 * H, H));
  nd::Var c = nd::add(nd::mul(f, prev.c), nd::mul(i, cand));
  return {nd::mul(o, nd::tanh(c)), c};
}

EncoderState encoder_step(nd::Graph & g, const ModelConfig & cfg, const nd::ParameterSet & params,
                          SubjectClass cls, const EncoderState & prev, nd::Var input)
{
  check_class(cfg, cls);
  EncoderState next;
  next.lstm = lstm_step(g, params, prefix(cls) + "enc", prev.lstm, input);
  next.history = prev.history;
  next.history.push_back(next.lstm.h);
  while (next.history.size() > cfg.window) next.history.pop_front();
  return next;
}

AttentionState attention(nd::Graph & g, const ModelConfig & cfg, const nd::ParameterSet & params,
                         SubjectClass cls, const std::deque<nd::Var> & history, nd::Var s_prev)
{
  check_class(cfg, cls);
  if (history.empty()) throw ContractError("attention: empty history");
  const std::string p = prefix(cls);
  nd::Var query = nd::matmul(g.parameter(params, p + "att.Ws"), s_prev);
  nd::Var wh = g.parameter(params, p + "att.Wh");
  nd::Var v = g.parameter(params, p + "att.v");
  std::vector<nd::Var> scores;
  std::vector<nd::Var> items(history.begin(), history.end());
  for (const auto & h : items) {
    scores.push_back(nd::reshape(nd::sum(nd::mul(v, nd::tanh(nd::add(query, nd::matmul(wh, h))))), {1}));
  }
  nd::Var alpha = nd::softmax(nd::concat(scores));
  return {alpha, nd::weighted_sum(items, alpha)};
}

LstmState decoder_step(nd::Graph & g, const ModelConfig & cfg, const nd::ParameterSet & params, SubjectClass cls,
                       const LstmState & prev, nd::Var x_prev, nd::Var context)
{
  check_class(cfg, cls);
  return lstm_step(g, params, prefix(cls) + "dec", prev, nd::concat({x_prev, context}));
}

nd::Var head_output(nd::Graph & g, const nd::ParameterSet & params, SubjectClass cls, nd::Var s)
{
  return dense(g, params, prefix(cls) + "out", s);
}

namespace
{
constexpr double kLogSigmaLimit = 20.0;
constexpr double kRhoLimit = 1.0 - 1e-9;
constexpr double kMinOneMinusRhoSq = 1e-12;

double clamp_log_sigma(double a)
{
  return std::clamp(a, -kLogSigmaLimit, kLogSigmaLimit);
}
}  // namespace

double head_scale(const ModelConfig & cfg)
{
  return cfg.motion_scale > 0.0 ? cfg.motion_scale : 1.0;
}

GaussianParams gaussian_head(std::span<const double> o, Point2 origin, double scale)
{
  if (o.size() != 5) throw DimensionError(fmt::format("gaussian_head: expected 5 outputs, got {}", o.size()));
  if (!(scale > 0.0)) throw ContractError("gaussian_head: scale must be positive");
  return {{origin.x + scale * o[0], origin.y + scale * o[1]},
          std::exp(clamp_log_sigma(o[2])),
          std::exp(clamp_log_sigma(o[3])),
          std::clamp(std::tanh(o[4]), -kRhoLimit, kRhoLimit)};
}

namespace
{

struct NllTerms
{
  double u = 0.0;
  double v = 0.0;
  double q = 1.0;
  double z = 0.0;
};

NllTerms nll_terms(const GaussianParams & t, Point2 x)
{
  NllTerms n;
  n.u = (x.x - t.mu.x) / t.sigma_x;
  n.v = (x.y - t.mu.y) / t.sigma_y;
  n.q = std::max(1.0 - t.rho * t.rho, kMinOneMinusRhoSq);
  n.z = n.u * n.u + n.v * n.v - 2.0 * t.rho * n.u * n.v;
  return n;
}
}  // namespace

double nll(const GaussianParams & theta, Point2 x)
{
  const auto n = nll_terms(theta, x);
  return std::log(2.0 * std::numbers::pi) + std::log(theta.sigma_x) + std::log(theta.sigma_y) + 0.5 * std::log(n.q) +
         n.z / (2.0 * n.q);
}

nd::Var gaussian_nll(nd::Var o, Point2 origin, Point2 x, double scale)
{
  const auto & ov = o.value();
  if (ov.shape() != nd::Shape{5}) {
    throw DimensionError(fmt::format("gaussian_nll: expected [5], got {}", nd::shape_str(ov.shape())));
  }
  const auto theta = gaussian_head(ov.values(), origin, scale);
  const auto n = nll_terms(theta, x);
  const double value = std::log(2.0 * std::numbers::pi) + std::log(theta.sigma_x) + std::log(theta.sigma_y) +
                       0.5 * std::log(n.q) + n.z / (2.0 * n.q);
  const bool free_x = std::abs(ov[2]) < kLogSigmaLimit;
  const bool free_y = std::abs(ov[3]) < kLogSigmaLimit;
  return o.graph->record(
    "gaussian_nll", nd::Tensor::scalar(value), {o}, [theta, n, free_x, free_y, scale](nd::BackwardArgs & a) {
      if (!a.grad_inputs[0]) return;
      const double go = a.grad_output[0];
      const double r = theta.rho;
      auto & gi = *a.grad_inputs[0];
      gi[0] += go * -scale * (n.u - r * n.v) / (n.q * theta.sigma_x);
      gi[1] += go * -scale * (n.v - r * n.u) / (n.q * theta.sigma_y);
      if (free_x) gi[2] += go * (1.0 - (n.u * n.u - r * n.u * n.v) / n.q);
      if (free_y) gi[3] += go * (1.0 - (n.v * n.v - r * n.u * n.v) / n.q);
      gi[4] += go * (-r - n.u * n.v + r * n.z / n.q);
    });
}

Point2 sample(const GaussianParams & theta, std::mt19937_64 & rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  const double z1 = normal(rng);
  const double z2 = normal(rng);
  const double r = theta.rho;
  return {theta.mu.x + theta.sigma_x * z1,
          theta.mu.y + theta.sigma_y * (r * z1 + std::sqrt(std::max(0.0, 1.0 - r * r)) * z2)};
}

}  // namespace trajcast::model
