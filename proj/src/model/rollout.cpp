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

#include "trajcast/model/rollout.hpp"

#include "trajcast/error.hpp"
#include "trajcast/ndgrad/ops.hpp"

#include <fmt/format.h>

#include <map>

namespace trajcast::model
{

namespace nd = ndgrad;

std::vector<Window> extract_windows(const scene::Scene & scene, std::size_t length, std::int64_t stride)
{
  if (length == 0) throw ContractError("extract_windows: length must be positive");
  if (stride < 1) throw ContractError("extract_windows: stride must be >= 1");
  const auto len = static_cast<std::int64_t>(length);
  std::int64_t first = 0;
  bool any = false;
  for (const auto & t : scene.trajectories) {
    if (t.points.empty()) continue;
    first = any ? std::min(first, t.points.front().frame) : t.points.front().frame;
    any = true;
  }
  std::map<std::int64_t, Window> windows;
  for (const auto & t : scene.trajectories) {
    const auto & pts = t.points;
    for (std::size_t s = 0; s + length <= pts.size(); ++s) {
      const std::int64_t start = pts[s].frame;
      if ((start - first) % stride != 0) continue;
      if (pts[s + length - 1].frame - start != len - 1) continue;
      SubjectSequence seq{t.subject_id, t.subject_class, {}};
      seq.positions.reserve(length);
      for (std::size_t i = 0; i < length; ++i) seq.positions.push_back(pts[s + i].position);
      auto & w = windows[start];
      w.start_frame = start;
      w.subjects.push_back(std::move(seq));
    }
  }
  std::vector<Window> out;
  out.reserve(windows.size());
  for (auto & [start, w] : windows) out.push_back(std::move(w));
  return out;
}

namespace
{
nd::Var position_input(nd::Graph & g, const ModelConfig & cfg, Point2 pos, Point2 before)
{
  if (cfg.motion_scale > 0.0) {
    const double m = cfg.motion_scale;
    return g.constant(nd::Tensor::vector({pos.x, pos.y, (pos.x - before.x) / m, (pos.y - before.y) / m}));
  }
  return g.constant(nd::Tensor::vector({pos.x, pos.y}));
}
}  // namespace

WindowResult run_window(nd::Graph & g, const ModelConfig & cfg, const nd::ParameterSet & params,
                        const Window & window, const StaticContext * context, Feed feed, std::mt19937_64 * rng,
                        std::optional<std::size_t> horizon)
{
  cfg.validate();
  const auto pool_cfg = cfg.pool();
  const std::size_t n = window.subjects.size();
  const std::size_t steps = horizon.value_or(cfg.n_pred);
  const std::size_t full = cfg.t_obs + steps;
  bool have_truth = true;
  for (const auto & s : window.subjects) {
    if (s.positions.size() < cfg.t_obs) {
      throw ContractError(fmt::format("run_window: subject {} has {} positions, needs {}", s.subject_id,
                                      s.positions.size(), cfg.t_obs));
    }
    if (s.positions.size() < full) have_truth = false;
    if (s.subject_class.id >= cfg.class_count) {
      throw ContractError(fmt::format("run_window: subject {} class {} >= {}", s.subject_id, s.subject_class.id,
                                      cfg.class_count));
    }
  }
  if (feed == Feed::Teacher && !have_truth) throw ContractError("run_window: teacher forcing needs ground truth");
  if (feed == Feed::Sample && rng == nullptr) throw ContractError("run_window: sampling needs an rng");
  if (cfg.mode == Mode::SdAtt) {
    if (context == nullptr) throw ContractError("run_window: SD-ATT needs likelihood maps");
    if (context->maps.size() < cfg.class_count) {
      throw ContractError(fmt::format("run_window: {} likelihood maps for {} classes", context->maps.size(),
                                      cfg.class_count));
    }
  }

  WindowResult result;
  result.theta.resize(n);
  result.predicted.resize(n);
  if (n == 0 || steps == 0) return result;

  std::vector<EncoderState> enc(n);
  for (auto & e : enc) e.lstm = zero_state(g, cfg);
  std::vector<nd::Var> prev_h(n);
  for (std::size_t i = 0; i < n; ++i) prev_h[i] = enc[i].lstm.h;

  std::vector<pool::Candidate> candidates;
  std::vector<pool::NeighborState> neighbors;
  std::map<std::int64_t, std::size_t> index_of;
  for (std::size_t i = 0; i < n; ++i) index_of[window.subjects[i].subject_id] = i;

  for (std::size_t t = 0; t < cfg.t_obs; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto & subj = window.subjects[i];
      const Point2 pos = subj.positions[t];
      candidates.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) candidates.push_back({window.subjects[j].subject_id, window.subjects[j].positions[t]});
      }
      neighbors.clear();
      for (const auto & c : pool::truncate_neighbors(candidates, pos, cfg.max_neighbors)) {
        const std::size_t j = index_of.at(c.subject_id);
        neighbors.push_back({c.subject_id, window.subjects[j].subject_class, c.position, prev_h[j]});
      }
      nd::Var social = pool::social_tensor(g, subj.subject_id, pos, neighbors, pool_cfg);
      std::optional<nd::Var> reach;
      if (cfg.mode == Mode::SdAtt) {
        auto r = pool::reachability_tensor(pos, context->maps[subj.subject_class.id], context->grid, pool_cfg);
        const std::size_t len = r.values.size();
        reach = g.constant(nd::Tensor({len}, std::move(r.values)));
      }
      nd::Var x = position_input(g, cfg, pos, t > 0 ? subj.positions[t - 1] : pos);
      nd::Var input = embed_inputs(g, cfg, params, subj.subject_class, x, social, reach);
      enc[i] = encoder_step(g, cfg, params, subj.subject_class, enc[i], input);
    }
    for (std::size_t i = 0; i < n; ++i) prev_h[i] = enc[i].lstm.h;
  }

  std::vector<nd::Var> terms;
  for (std::size_t i = 0; i < n; ++i) {
    const auto & subj = window.subjects[i];
    LstmState s = enc[i].lstm;
    Point2 x_prev = subj.positions[cfg.t_obs - 1];
    Point2 x_before = cfg.t_obs > 1 ? subj.positions[cfg.t_obs - 2] : x_prev;
    for (std::size_t step = 0; step < steps; ++step) {
      auto att = attention(g, cfg, params, subj.subject_class, enc[i].history, s.h);
      s = decoder_step(g, cfg, params, subj.subject_class, s, position_input(g, cfg, x_prev, x_before),
                       att.context);
      nd::Var o = head_output(g, params, subj.subject_class, s.h);
      const auto theta = gaussian_head(o.value().values(), x_prev, head_scale(cfg));
      result.theta[i].push_back(theta);
      if (have_truth) terms.push_back(gaussian_nll(o, x_prev, subj.positions[cfg.t_obs + step], head_scale(cfg)));
      Point2 next = theta.mu;
      if (feed == Feed::Sample) next = sample(theta, *rng);
      result.predicted[i].push_back(next);
      x_before = x_prev;
      x_prev = feed == Feed::Teacher ? subj.positions[cfg.t_obs + step] : next;
    }
  }
  if (have_truth && !terms.empty()) {
    nd::Var total = terms.front();
    for (std::size_t k = 1; k < terms.size(); ++k) total = nd::add(total, terms[k]);
    result.terms = terms.size();
    result.loss = nd::scale(total, 1.0 / static_cast<double>(terms.size()));
  }
  return result;
}

}  // namespace trajcast::model
