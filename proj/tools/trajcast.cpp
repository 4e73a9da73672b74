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

#include "trajcast/error.hpp"
#include "trajcast/io/checkpoint.hpp"
#include "trajcast/scene/raster.hpp"
#include "trajcast/scene/scene.hpp"
#include "trajcast/sscn/sscn.hpp"
#include "trajcast/train/metrics.hpp"
#include "trajcast/train/synth.hpp"
#include "trajcast/train/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trajcast;

namespace
{

constexpr int kDataExit = 1;
constexpr int kConfigExit = 2;

void write_json(const fs::path & path, const json & j)
{
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << "\n";
}

json read_json(const fs::path & path)
{
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot read {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception & e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void echo(const std::string & command, const json & config)
{
  std::cout << json{{"command", command}, {"config", config}}.dump() << std::endl;
}

std::vector<scene::Scene> load_scenes(const std::vector<std::string> & dirs)
{
  std::vector<scene::Scene> out;
  for (const auto & d : dirs) out.push_back(scene::load_scene(d));
  return out;
}

fs::path map_path(const fs::path & root, const std::string & scene, std::uint32_t cls)
{
  return root / scene / fmt::format("map_c{}.txt", cls);
}

model::StaticContext load_context(const fs::path & root, const scene::Scene & s, std::size_t cell_size)
{
  model::StaticContext ctx;
  ctx.grid = scene::GridSpec::for_scene(s, cell_size);
  for (std::uint32_t c = 0; c < s.class_count; ++c) {
    auto m = scene::load_likelihood_map(map_path(root, s.name, c));
    if (m.rows != ctx.grid.rows || m.cols != ctx.grid.cols) {
      throw DataError(fmt::format("map for scene '{}' is {}x{}, grid with cell size {} is {}x{}", s.name, m.rows,
                                  m.cols, cell_size, ctx.grid.rows, ctx.grid.cols));
    }
    ctx.maps.push_back(std::move(m));
  }
  return ctx;
}

struct ModelFlags
{
  model::ModelConfig cfg;
  std::string mode = "sd-att";

  void add(CLI::App * app)
  {
    app->add_option("--mode", mode, "d-att or sd-att")->capture_default_str();
    app->add_option("--hidden", cfg.hidden_dim, "LSTM hidden size")->capture_default_str();
    app->add_option("--window", cfg.window, "attention window k")->capture_default_str();
    app->add_option("--t-obs", cfg.t_obs, "observed steps")->capture_default_str();
    app->add_option("--n-pred", cfg.n_pred, "predicted steps")->capture_default_str();
    app->add_option("--pos-embed", cfg.pos_embed)->capture_default_str();
    app->add_option("--social-embed", cfg.social_embed)->capture_default_str();
    app->add_option("--reach-embed", cfg.reach_embed)->capture_default_str();
    app->add_option("--attention-dim", cfg.attention_dim)->capture_default_str();
    app->add_option("--motion-scale", cfg.motion_scale, "typical step length; 0 disables")->capture_default_str();
    app->add_option("--neighborhood", cfg.neighborhood, "social window side, normalized")->capture_default_str();
    app->add_option("--social-grid", cfg.social_grid)->capture_default_str();
    app->add_option("--classes", cfg.class_count)->capture_default_str();
    app->add_option("--reach-distance", cfg.reach_distance, "pixels")->capture_default_str();
    app->add_option("--reach-cell", cfg.reach_cell, "pixels")->capture_default_str();
    app->add_option("--max-neighbors", cfg.max_neighbors)->capture_default_str();
  }

  model::ModelConfig resolve()
  {
    cfg.mode = model::parse_mode(mode);
    cfg.validate();
    return cfg;
  }
};

struct SscnFlags
{
  sscn::SscnConfig cfg;
  sscn::SscnTrainOptions train;

  void add(CLI::App * app)
  {
    app->add_option("--patch-size", cfg.patch_size, "scene network patch input side")->capture_default_str();
    app->add_option("--context-size", cfg.context_size, "scene network context input side")->capture_default_str();
    app->add_option("--stream-width", cfg.stream_width)->capture_default_str();
    app->add_option("--sscn-lr", train.learning_rate)->capture_default_str();
    app->add_option("--sscn-epochs", train.epochs)->capture_default_str();
    app->add_option("--batch", train.batch_size)->capture_default_str();
  }
};

std::vector<train::TrainingScene> with_contexts(const std::vector<scene::Scene> & scenes,
                                                const model::ModelConfig & cfg, const std::string & maps,
                                                std::size_t cell_size)
{
  if (cfg.mode == model::Mode::SdAtt && maps.empty()) throw ConfigError("--maps: required for sd-att");
  std::vector<train::TrainingScene> out;
  for (const auto & s : scenes) {
    train::TrainingScene ts{s, std::nullopt};
    if (cfg.mode == model::Mode::SdAtt) ts.context = load_context(maps, s, cell_size);
    out.push_back(std::move(ts));
  }
  return out;
}

json points_json(const std::vector<scene::Point2> & pts)
{
  json a = json::array();
  for (const auto & p : pts) a.push_back({p.x, p.y});
  return a;
}

std::vector<scene::Point2> points_from(const json & a)
{
  std::vector<scene::Point2> out;
  for (const auto & p : a) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Trajectory forecasting with static scene context"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML-style key = value file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_help_all_flag("--help-all", "Help for every command");

  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t cell_size = 20;

  // synth
  auto * synth = app.add_subcommand("synth", "Generate a synthetic scene");
  train::SynthSpec spec;
  std::string kind = "constant-velocity";
  synth->add_option("--spec", kind, "constant-velocity, crossing-groups, obstacle-field or ring-road")
    ->capture_default_str();
  synth->add_option("--subjects", spec.subjects)->capture_default_str();
  synth->add_option("--length", spec.length, "points per trajectory")->capture_default_str();
  synth->add_option("--frames", spec.frames, "start frame span")->capture_default_str();
  synth->add_option("--image-size", spec.image_size)->capture_default_str();
  synth->add_option("--noise", spec.noise)->capture_default_str();
  synth->add_option("--zones", spec.zones)->capture_default_str();
  synth->add_option("--cell-size", spec.cell_size)->capture_default_str();
  synth->add_option("--seed", seed)->required();
  synth->add_option("--out", out_dir)->required();

  // ingest
  auto * ingest = app.add_subcommand("ingest", "Convert an annotation TSV and image into a scene directory");
  std::string annotations, image, name;
  std::uint32_t classes = 1;
  std::int64_t stride = 10;
  ingest->add_option("--annotations", annotations, "frame subject_id class_id x y, pixels")->required()->check(CLI::ExistingFile);
  ingest->add_option("--image", image, "PNG")->required()->check(CLI::ExistingFile);
  ingest->add_option("--name", name, "scene name (default: annotation file stem)");
  ingest->add_option("--classes", classes)->capture_default_str();
  ingest->add_option("--subsample", stride, "keep every n-th frame")->capture_default_str();
  ingest->add_option("--out", out_dir)->required();

  // train-sscn
  auto * train_sscn = app.add_subcommand("train-sscn", "Train the scene network on scene directories");
  std::vector<std::string> scene_dirs;
  SscnFlags sscn_flags;
  train_sscn->add_option("--scenes", scene_dirs)->required()->check(CLI::ExistingDirectory);
  train_sscn->add_option("--cell-size", cell_size, "grid cell, pixels")->capture_default_str();
  train_sscn->add_option("--seed", seed)->capture_default_str();
  sscn_flags.add(train_sscn);
  train_sscn->add_option("--out", out_dir)->required();

  // build-maps
  auto * build_maps = app.add_subcommand("build-maps", "Write per-class likelihood maps for scenes");
  std::string sscn_path;
  bool ground_truth = false;
  build_maps->add_option("--scenes", scene_dirs)->required()->check(CLI::ExistingDirectory);
  build_maps->add_option("--sscn", sscn_path, "scene network checkpoint")->check(CLI::ExistingFile);
  build_maps->add_flag("--ground-truth", ground_truth, "use each scene's own occupancy");
  build_maps->add_option("--cell-size", cell_size, "grid cell, pixels")->capture_default_str();
  build_maps->add_option("--out", out_dir)->required();

  // train
  auto * train_cmd = app.add_subcommand("train", "Train D-ATT or SD-ATT");
  ModelFlags model_flags;
  train::TrainOptions train_opts;
  std::string maps_dir;
  model_flags.add(train_cmd);
  train_cmd->add_option("--scenes", scene_dirs)->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--maps", maps_dir, "build-maps output (sd-att)")->check(CLI::ExistingDirectory);
  train_cmd->add_option("--cell-size", cell_size, "map grid cell, pixels")->capture_default_str();
  train_cmd->add_option("--lr", train_opts.learning_rate)->capture_default_str();
  train_cmd->add_option("--epochs", train_opts.epochs)->capture_default_str();
  train_cmd->add_option("--stride", train_opts.window_stride, "window start stride")->capture_default_str();
  train_cmd->add_option("--rms-decay", train_opts.rms_decay)->capture_default_str();
  train_cmd->add_option("--seed", seed)->required();
  train_cmd->add_option("--out", out_dir)->required();

  // predict / eval
  auto * predict = app.add_subcommand("predict", "Predict every window of a scene");
  auto * eval = app.add_subcommand("eval", "ADE/FDE of a model or of a predictions file");
  std::string model_path, scene_dir, predictions_path, feed = "mean";
  for (auto * cmd : {predict, eval}) {
    cmd->add_option("--scene", scene_dir)->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--maps", maps_dir, "build-maps output (sd-att)")->check(CLI::ExistingDirectory);
    cmd->add_option("--cell-size", cell_size, "map grid cell, pixels")->capture_default_str();
    cmd->add_option("--feed", feed, "mean or sample")->capture_default_str();
    cmd->add_option("--seed", seed)->capture_default_str();
    cmd->add_option("--out", out_dir)->required();
  }
  predict->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  auto * eval_model = eval->add_option("--model", model_path)->check(CLI::ExistingFile);
  auto * eval_pred = eval->add_option("--predictions", predictions_path, "predict output")->check(CLI::ExistingFile);
  eval_model->excludes(eval_pred);
  eval_pred->excludes(eval_model);

  // loo
  auto * loo = app.add_subcommand("loo", "Leave-one-scene-out evaluation");
  ModelFlags loo_model;
  train::LooOptions loo_opts;
  SscnFlags loo_sscn;
  std::string map_source = "sscn";
  loo_model.add(loo);
  loo_sscn.add(loo);
  loo->add_option("--scenes", scene_dirs)->required()->check(CLI::ExistingDirectory);
  loo->add_option("--map-source", map_source, "sscn or ground-truth")->capture_default_str();
  loo->add_option("--cell-size", cell_size, "map grid cell, pixels")->capture_default_str();
  loo->add_option("--lr", loo_opts.train.learning_rate)->capture_default_str();
  loo->add_option("--epochs", loo_opts.train.epochs)->capture_default_str();
  loo->add_option("--stride", loo_opts.train.window_stride)->capture_default_str();
  loo->add_option("--seed", seed)->required();
  loo->add_option("--out", out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  }

  try {
    const fs::path out(out_dir);
    fs::create_directories(out);

    if (*synth) {
      spec.kind = train::parse_synth_kind(kind);
      spec.seed = seed;
      spec.validate();
      echo("synth", spec.to_json());
      auto s = train::generate_synth(spec);
      scene::save_scene(out / s.name, s);
      write_json(out / s.name / "synth.json", spec.to_json());
      std::cout << (out / s.name).string() << "\n";
    } else if (*ingest) {
      if (stride < 1) throw ConfigError("--subsample: must be >= 1");
      json cfg{{"annotations", annotations}, {"image", image}, {"classes", classes}, {"subsample", stride}};
      echo("ingest", cfg);
      auto s = scene::parse_annotations(fs::path(annotations), scene::read_png(image), classes);
      s.name = name.empty() ? fs::path(annotations).stem().string() : name;
      s = scene::subsample(s, stride);
      scene::save_scene(out / s.name, s);
      std::cout << (out / s.name).string() << "\n";
    } else if (*train_sscn) {
      auto scenes = load_scenes(scene_dirs);
      auto & cfg = sscn_flags.cfg;
      cfg.class_count = 0;
      for (const auto & s : scenes) cfg.class_count = std::max(cfg.class_count, s.class_count);
      cfg.validate();
      sscn_flags.train.seed = seed;
      json train_json{{"learning_rate", sscn_flags.train.learning_rate},
                      {"batch_size", sscn_flags.train.batch_size},
                      {"epochs", sscn_flags.train.epochs},
                      {"seed", seed},
                      {"cell_size", cell_size}};
      json config{{"sscn", cfg.to_json()}, {"train", train_json}};
      echo("train-sscn", config);
      std::vector<sscn::SscnExample> dataset;
      for (const auto & s : scenes) {
        auto part = sscn::make_sscn_dataset(cfg, s, scene::GridSpec::for_scene(s, cell_size));
        dataset.insert(dataset.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      }
      auto result = sscn::train_sscn(cfg, dataset, sscn_flags.train, nullptr, [](std::size_t e, double loss) {
        std::cerr << fmt::format("epoch {} loss {:.6f}\n", e, loss);
      });
      io::Checkpoint cp;
      cp.config = config;
      cp.params = result.params;
      io::save_checkpoint(out / "sscn.ckpt", cp);
      write_json(out / "sscn_train.json", {{"config", config}, {"epoch_loss", result.epoch_loss}});
    } else if (*build_maps) {
      if (ground_truth == !sscn_path.empty()) throw ConfigError("build-maps: give exactly one of --sscn, --ground-truth");
      auto scenes = load_scenes(scene_dirs);
      json config{{"source", ground_truth ? "ground-truth" : "sscn"}, {"cell_size", cell_size}};
      std::optional<io::Checkpoint> cp;
      sscn::SscnConfig cfg;
      if (!ground_truth) {
        cp = io::load_checkpoint(sscn_path);
        if (!cp->config.contains("sscn")) throw DataError(fmt::format("{}: not a scene network checkpoint", sscn_path));
        cfg = sscn::SscnConfig::from_json(cp->config.at("sscn"));
        config["sscn"] = sscn_path;
      }
      echo("build-maps", config);
      for (const auto & s : scenes) {
        const auto grid = scene::GridSpec::for_scene(s, cell_size);
        fs::create_directories(out / s.name);
        for (std::uint32_t c = 0; c < s.class_count; ++c) {
          auto m = ground_truth ? scene::build_ground_truth_map(s, {c}, grid)
                                : sscn::build_map(cfg, cp->params, s, {c}, grid);
          scene::save_likelihood_map(map_path(out, s.name, c), m);
        }
      }
      write_json(out / "maps.json", config);
    } else if (*train_cmd) {
      auto cfg = model_flags.resolve();
      train_opts.seed = seed;
      train_opts.checkpoint = out / "model.ckpt";
      json config{{"model", cfg.to_json()}, {"train", train_opts.to_json()}, {"scenes", scene_dirs}};
      if (!maps_dir.empty()) config["maps"] = maps_dir;
      echo("train", config);
      auto scenes = with_contexts(load_scenes(scene_dirs), cfg, maps_dir, cell_size);
      auto result = train::train_model(scenes, cfg, train_opts, nullptr, [](std::size_t e, double nll) {
        std::cerr << fmt::format("epoch {} nll {:.6f}\n", e, nll);
      });
      write_json(out / "train.json", {{"config", config}, {"epoch_nll", result.epoch_nll}});
    } else if (*predict || (*eval && !model_path.empty())) {
      auto cp = io::load_checkpoint(model_path);
      auto cfg = train::checkpoint_model_config(cp);
      train::EvalOptions opts;
      opts.seed = seed;
      if (feed == "mean") {
        opts.feed = model::Feed::Mean;
      } else if (feed == "sample") {
        opts.feed = model::Feed::Sample;
      } else {
        throw ConfigError(fmt::format("--feed: expected mean or sample, got '{}'", feed));
      }
      auto ts = with_contexts({scene::load_scene(scene_dir)}, cfg, maps_dir, cell_size).front();
      json config{{"model", model_path}, {"scene", scene_dir}, {"feed", feed}, {"seed", seed},
                  {"checkpoint", cp.config}};
      echo(*predict ? "predict" : "eval", config);
      auto report = train::evaluate(ts, cfg, cp.params, opts);
      report.config = config;
      if (report.skipped > 0) {
        std::cerr << fmt::format("warning: {} subjects are shorter than t_obs + n_pred and were skipped\n",
                                 report.skipped);
      }
      if (*predict) {
        json preds = json::array();
        for (const auto & p : report.predictions) {
          preds.push_back({{"subject_id", p.subject_id},
                           {"start_frame", p.start_frame},
                           {"observed", points_json(p.observed)},
                           {"truth", points_json(p.truth)},
                           {"predicted", points_json(p.predicted)}});
        }
        write_json(out / "predictions.json",
                   {{"config", config}, {"scene", report.scene}, {"t_obs", cfg.t_obs}, {"predictions", preds}});
        std::ofstream svg(out / (report.scene + ".svg"));
        train::write_svg(svg, ts.scene, report.predictions);
      } else {
        write_json(out / "report.json", report.to_json());
      }
      std::cout << fmt::format("ade {:.6f} fde {:.6f}\n", report.ade, report.fde);
    } else if (*eval) {
      if (predictions_path.empty()) throw ConfigError("eval: one of --model, --predictions is required");
      auto s = scene::load_scene(scene_dir);
      auto file = read_json(predictions_path);
      json config{{"predictions", predictions_path}, {"scene", scene_dir}};
      echo("eval", config);
      const auto t_obs = file.at("t_obs").get<std::int64_t>();
      std::map<std::int64_t, const scene::Trajectory *> by_id;
      for (const auto & t : s.trajectories) by_id[t.subject_id] = &t;
      train::Paths pred, truth;
      json per = json::array();
      for (const auto & p : file.at("predictions")) {
        const auto id = p.at("subject_id").get<std::int64_t>();
        const auto start = p.at("start_frame").get<std::int64_t>();
        auto it = by_id.find(id);
        if (it == by_id.end()) throw DataError(fmt::format("{}: subject {} not in scene", predictions_path, id));
        auto pts = points_from(p.at("predicted"));
        std::vector<scene::Point2> real;
        for (std::size_t k = 0; k < pts.size(); ++k) {
          auto at = it->second->at(start + t_obs + static_cast<std::int64_t>(k));
          if (!at) throw DataError(fmt::format("subject {} has no position at frame {}", id, start + t_obs + k));
          real.push_back(*at);
        }
        per.push_back({{"subject_id", id},
                       {"start_frame", start},
                       {"ade", train::ade({pts}, {real})},
                       {"fde", train::fde({pts}, {real})}});
        pred.push_back(std::move(pts));
        truth.push_back(std::move(real));
      }
      const double a = train::ade(pred, truth);
      const double f = train::fde(pred, truth);
      write_json(out / "report.json", {{"scene", s.name},
                                       {"ade", a},
                                       {"fde", f},
                                       {"trajectories", per.size()},
                                       {"per_trajectory", per},
                                       {"config", config}});
      std::cout << fmt::format("ade {:.6f} fde {:.6f}\n", a, f);
    } else if (*loo) {
      auto cfg = loo_model.resolve();
      loo_opts.train.seed = seed;
      loo_opts.eval.seed = seed;
      loo_opts.maps.source = train::parse_map_source(map_source);
      loo_opts.maps.cell_size = cell_size;
      loo_opts.maps.sscn = loo_sscn.cfg;
      loo_opts.maps.sscn_train = loo_sscn.train;
      loo_opts.maps.sscn_train.seed = seed;
      json config{{"model", cfg.to_json()},
                  {"train", loo_opts.train.to_json()},
                  {"map_source", map_source},
                  {"cell_size", cell_size},
                  {"scenes", scene_dirs}};
      echo("loo", config);
      auto reports = train::leave_one_out(load_scenes(scene_dirs), cfg, loo_opts);
      json all = json::array();
      double ade_sum = 0.0, fde_sum = 0.0;
      for (auto & r : reports) {
        r.config = config;
        ade_sum += r.ade;
        fde_sum += r.fde;
        all.push_back(r.to_json());
      }
      const double n = static_cast<double>(reports.size());
      write_json(out / "loo.json",
                 {{"config", config}, {"mean_ade", ade_sum / n}, {"mean_fde", fde_sum / n}, {"reports", all}});
      std::cout << fmt::format("mean ade {:.6f} fde {:.6f}\n", ade_sum / n, fde_sum / n);
    }
  } catch (const ConfigError & e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const ContractError & e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataExit;
  }
  return 0;
}
