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

#include "trajcast/sscn/sscn.hpp"

#include "trajcast/error.hpp"
#include "trajcast/ndgrad/optim.hpp"
#include "trajcast/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace trajcast::sscn
{

namespace nd = ndgrad;

void SscnConfig::validate() const
{
  if (patch_size == 0 || context_size == 0 || class_count == 0 || class_embed == 0 || stream_width == 0) {
    throw ContractError("sscn: all dimensions must be positive");
  }
  if (pool == 0) throw ContractError("sscn: pool size must be positive");
  for (auto w : merge_widths) {
    if (w == 0) throw ContractError("sscn: merge widths must be positive");
  }
  conv_output_size(patch_size);
  conv_output_size(context_size);
}

std::size_t SscnConfig::conv_output_size(std::size_t input_size) const
{
  std::size_t side = input_size;
  std::size_t channels = 3;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const auto & layer = conv[i];
    if (layer.filters == 0 || layer.kernel == 0 || layer.stride == 0) {
      throw ContractError(fmt::format("sscn: conv layer {} has a zero dimension", i));
    }
    if (side < layer.kernel) {
      throw ContractError(fmt::format("sscn: input {} too small for conv layer {}", input_size, i));
    }
    side = (side - layer.kernel) / layer.stride + 1;
    if (side < pool) {
      throw ContractError(fmt::format("sscn: input {} too small for pooling after layer {}", input_size, i));
    }
    side = (side - pool) / pool + 1;
    channels = layer.filters;
  }
  return channels * side * side;
}

nlohmann::json SscnConfig::to_json() const
{
  nlohmann::json j;
  j["patch_size"] = patch_size;
  j["context_size"] = context_size;
  j["class_count"] = class_count;
  j["class_embed"] = class_embed;
  j["conv"] = nlohmann::json::array();
  for (const auto & l : conv) j["conv"].push_back({{"filters", l.filters}, {"kernel", l.kernel}, {"stride", l.stride}});
  j["pool"] = pool;
  j["lrn"] = {{"k", lrn.k}, {"n", lrn.n}, {"alpha", lrn.alpha}, {"beta", lrn.beta}};
  j["stream_width"] = stream_width;
  j["merge_widths"] = merge_widths;
  return j;
}

SscnConfig SscnConfig::from_json(const nlohmann::json & j)
{
  SscnConfig c;
  c.patch_size = j.at("patch_size").get<std::size_t>();
  c.context_size = j.at("context_size").get<std::size_t>();
  c.class_count = j.at("class_count").get<std::uint32_t>();
  c.class_embed = j.at("class_embed").get<std::size_t>();
  c.conv.clear();
  for (const auto & l : j.at("conv")) {
    c.conv.push_back({l.at("filters").get<std::size_t>(), l.at("kernel").get<std::size_t>(),
                      l.at("stride").get<std::size_t>()});
  }
  c.pool = j.at("pool").get<std::size_t>();
  const auto & lrn = j.at("lrn");
  c.lrn = {lrn.at("k").get<double>(), lrn.at("n").get<std::size_t>(), lrn.at("alpha").get<double>(),
           lrn.at("beta").get<double>()};
  c.stream_width = j.at("stream_width").get<std::size_t>();
  c.merge_widths = j.at("merge_widths").get<std::vector<std::size_t>>();
  return c;
}

namespace
{

// name -> (shape, fan_in); fan_in 0 marks a bias.
std::vector<std::tuple<std::string, nd::Shape, std::size_t>> layout(const SscnConfig & cfg)
{
  cfg.validate();
  std::vector<std::tuple<std::string, nd::Shape, std::size_t>> out;
  out.emplace_back("sscn.subject.embed", nd::Shape{cfg.class_count, cfg.class_embed}, 1);
  out.emplace_back("sscn.subject.W", nd::Shape{cfg.stream_width, cfg.class_embed}, cfg.class_embed);
  out.emplace_back("sscn.subject.b", nd::Shape{cfg.stream_width}, 0);
  for (const auto & [stream, side] : {std::pair<std::string, std::size_t>{"patch", cfg.patch_size},
                                      std::pair<std::string, std::size_t>{"context", cfg.context_size}}) {
    std::size_t in_ch = 3;
    for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
      const auto & l = cfg.conv[i];
      const std::string p = fmt::format("sscn.{}.conv{}", stream, i);
      out.emplace_back(p + ".W", nd::Shape{l.filters, in_ch, l.kernel, l.kernel}, in_ch * l.kernel * l.kernel);
      out.emplace_back(p + ".b", nd::Shape{l.filters}, 0);
      in_ch = l.filters;
    }
    const std::size_t flat = cfg.conv_output_size(side);
    out.emplace_back("sscn." + stream + ".dense.W", nd::Shape{cfg.stream_width, flat}, flat);
    out.emplace_back("sscn." + stream + ".dense.b", nd::Shape{cfg.stream_width}, 0);
  }
  std::size_t in = 3 * cfg.stream_width;
  for (std::size_t i = 0; i < cfg.merge_widths.size(); ++i) {
    out.emplace_back(fmt::format("sscn.merge{}.W", i), nd::Shape{cfg.merge_widths[i], in}, in);
    out.emplace_back(fmt::format("sscn.merge{}.b", i), nd::Shape{cfg.merge_widths[i]}, 0);
    in = cfg.merge_widths[i];
  }
  out.emplace_back("sscn.out.W", nd::Shape{1, in}, in);
  out.emplace_back("sscn.out.b", nd::Shape{1}, 0);
  return out;
}

nd::Var dense(nd::Graph & g, const nd::ParameterSet & params, const std::string & prefix, nd::Var x)
{
  return nd::add(nd::matmul(g.parameter(params, prefix + ".W"), x), g.parameter(params, prefix + ".b"));
}

void check_class(const SscnConfig & cfg, SubjectClass cls)
{
  if (cls.id >= cfg.class_count) {
    throw ContractError(fmt::format("sscn: class id {} >= class count {}", cls.id, cfg.class_count));
  }
}

void check_raster(const Raster & r, std::size_t side, const char * what)
{
  if (r.channels() != 3 || r.height() != side || r.width() != side) {
    throw ContractError(fmt::format("sscn: {} raster must be 3x{}x{}, got {}x{}x{}", what, side, side,
                                    r.channels(), r.height(), r.width()));
  }
}

}  // namespace

nd::ParameterSet init_sscn(const SscnConfig & cfg, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  nd::ParameterSet params;
  for (const auto & [name, shape, fan_in] : layout(cfg)) {
    nd::Tensor t(shape, 0.0);
    if (fan_in > 0) {
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
      for (auto & v : t.data()) v = normal(rng);
    }
    params.add(name, std::move(t));
  }
  return params;
}

nd::ParameterSet zero_sscn(const SscnConfig & cfg)
{
  nd::ParameterSet params;
  for (const auto & [name, shape, fan_in] : layout(cfg)) params.add(name, nd::Tensor(shape, 0.0));
  return params;
}

nd::Var stream_features(nd::Graph & g, const SscnConfig & cfg, const nd::ParameterSet & params,
                        const std::string & stream, nd::Var image)
{
  nd::Var x = image;
  for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
    const std::string p = fmt::format("sscn.{}.conv{}", stream, i);
    x = nd::conv2d(x, g.parameter(params, p + ".W"), g.parameter(params, p + ".b"), cfg.conv[i].stride);
    x = nd::local_response_norm(nd::maxpool2d(nd::relu(x), cfg.pool, cfg.pool), cfg.lrn);
  }
  return nd::relu(dense(g, params, "sscn." + stream + ".dense", nd::flatten(x)));
}

nd::Var sscn_logit(nd::Graph & g, const SscnConfig & cfg, const nd::ParameterSet & params, SubjectClass cls,
                   nd::Var patch, nd::Var context_features)
{
  check_class(cfg, cls);
  nd::Var subject = nd::embedding(g.parameter(params, "sscn.subject.embed"), cls.id);
  subject = nd::relu(dense(g, params, "sscn.subject", subject));
  nd::Var patch_features = stream_features(g, cfg, params, "patch", patch);
  nd::Var x = nd::concat({subject, patch_features, context_features});
  for (std::size_t i = 0; i < cfg.merge_widths.size(); ++i) {
    x = nd::relu(dense(g, params, fmt::format("sscn.merge{}", i), x));
  }
  return dense(g, params, "sscn.out", x);
}

double sscn_forward(const SscnConfig & cfg, const nd::ParameterSet & params, SubjectClass cls,
                    const Raster & patch, const Raster & context)
{
  check_class(cfg, cls);
  check_raster(patch, cfg.patch_size, "patch");
  check_raster(context, cfg.context_size, "context");
  nd::Graph g;
  nd::Var ctx = stream_features(g, cfg, params, "context", g.constant(context.to_tensor()));
  nd::Var logit = sscn_logit(g, cfg, params, cls, g.constant(patch.to_tensor()), ctx);
  return nd::sigmoid(logit).value().item();
}

double cross_entropy(double target, double predicted)
{
  const double p = std::clamp(predicted, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

nd::Var sscn_loss(nd::Graph & g, const SscnConfig & cfg, const nd::ParameterSet & params,
                  const std::vector<const SscnExample *> & batch)
{
  if (batch.empty()) throw ContractError("sscn_loss: empty batch");
  std::map<const Raster *, nd::Var> context_cache;
  std::vector<nd::Var> terms;
  terms.reserve(batch.size());
  for (const SscnExample * ex : batch) {
    if (!ex->context) throw ContractError("sscn_loss: example without context raster");
    check_raster(ex->patch, cfg.patch_size, "patch");
    auto it = context_cache.find(ex->context.get());
    if (it == context_cache.end()) {
      check_raster(*ex->context, cfg.context_size, "context");
      nd::Var feats = stream_features(g, cfg, params, "context", g.constant(ex->context->to_tensor()));
      it = context_cache.emplace(ex->context.get(), feats).first;
    }
    nd::Var logit = sscn_logit(g, cfg, params, ex->subject_class, g.constant(ex->patch.to_tensor()), it->second);
    nd::Var p = nd::clamp(nd::sigmoid(logit), kProbabilityClamp, 1.0 - kProbabilityClamp);
    nd::Var pos = nd::scale(nd::log(p), ex->target);
    nd::Var neg = nd::scale(nd::log(nd::shift(nd::scale(p, -1.0), 1.0)), 1.0 - ex->target);
    terms.push_back(nd::add(pos, neg));
  }
  nd::Var total = nd::sum(nd::concat(terms));
  return nd::scale(total, -1.0 / static_cast<double>(batch.size()));
}

double sscn_loss_value(const SscnConfig & cfg, const nd::ParameterSet & params,
                       const std::vector<SscnExample> & examples)
{
  if (examples.empty()) throw ContractError("sscn_loss_value: no examples");
  double total = 0.0;
  constexpr std::size_t kChunk = 64;
  for (std::size_t lo = 0; lo < examples.size(); lo += kChunk) {
    std::vector<const SscnExample *> batch;
    for (std::size_t i = lo; i < std::min(examples.size(), lo + kChunk); ++i) batch.push_back(&examples[i]);
    nd::Graph g;
    total += sscn_loss(g, cfg, params, batch).value().item() * static_cast<double>(batch.size());
  }
  return total / static_cast<double>(examples.size());
}

std::vector<SscnExample> make_sscn_dataset(const SscnConfig & cfg, const scene::Scene & scene,
                                           const scene::GridSpec & grid)
{
  auto context = std::make_shared<const Raster>(scene::resize(scene.image, cfg.context_size));
  std::vector<Raster> patches;
  patches.reserve(grid.cell_count());
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      patches.push_back(scene::resize(scene::extract_patch(scene.image, {r, c}, grid), cfg.patch_size));
    }
  }
  std::vector<SscnExample> out;
  for (std::uint32_t cls = 0; cls < scene.class_count; ++cls) {
    const bool present = std::any_of(scene.trajectories.begin(), scene.trajectories.end(),
                                     [cls](const scene::Trajectory & t) { return t.subject_class.id == cls; });
    if (!present) continue;
    const auto truth = scene::build_ground_truth_map(scene, SubjectClass{cls}, grid);
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
      out.push_back({SubjectClass{cls}, patches[i], context, truth.values[i]});
    }
  }
  return out;
}

SscnTrainResult train_sscn(const SscnConfig & cfg, const std::vector<SscnExample> & dataset,
                           const SscnTrainOptions & options, const nd::ParameterSet * initial,
                           const EpochCallback & on_epoch)
{
  if (dataset.empty()) throw ContractError("train_sscn: empty dataset");
  if (options.batch_size == 0) throw ContractError("train_sscn: batch size must be positive");
  SscnTrainResult result;
  result.params = initial ? *initial : init_sscn(cfg, options.seed);
  nd::Sgd sgd(options.learning_rate);
  std::mt19937_64 rng(options.seed ^ 0x5c5c5c5cULL);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    for (std::size_t lo = 0; lo < order.size(); lo += options.batch_size) {
      std::vector<const SscnExample *> batch;
      for (std::size_t i = lo; i < std::min(order.size(), lo + options.batch_size); ++i) {
        batch.push_back(&dataset[order[i]]);
      }
      nd::Graph g;
      nd::Var loss = sscn_loss(g, cfg, result.params, batch);
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw TrainingError(fmt::format("sscn training diverged at epoch {} (loss {})", epoch + 1, value));
      }
      weighted += value * static_cast<double>(batch.size());
      auto grads = g.backward(loss);
      nd::validate_gradients(result.params, grads);
      sgd.step(result.params, grads);
    }
    result.epoch_loss.push_back(weighted / static_cast<double>(dataset.size()));
    if (on_epoch) on_epoch(epoch + 1, result.epoch_loss.back());
  }
  return result;
}

scene::LikelihoodMap build_map(const SscnConfig & cfg, const nd::ParameterSet & params, const scene::Scene & scene,
                               SubjectClass cls, const scene::GridSpec & grid, std::size_t threads)
{
  check_class(cfg, cls);
  scene::LikelihoodMap map(cls, grid.rows, grid.cols);
  nd::Tensor context_features;
  {
    nd::Graph g;
    context_features =
      stream_features(g, cfg, params, "context", g.constant(scene::resize(scene.image, cfg.context_size).to_tensor()))
        .value();
  }
  parallel_for(grid.cell_count(), threads == 0 ? default_thread_count() : threads, [&](std::size_t i) {
    const scene::GridSpec::Cell cell{i / grid.cols, i % grid.cols};
    const Raster patch = scene::resize(scene::extract_patch(scene.image, cell, grid), cfg.patch_size);
    nd::Graph g;
    nd::Var logit = sscn_logit(g, cfg, params, cls, g.constant(patch.to_tensor()), g.constant(context_features));
    map.values[i] = nd::sigmoid(logit).value().item();
  });
  return map;
}

}  // namespace trajcast::sscn
