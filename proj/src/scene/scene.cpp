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

#include "trajcast/scene/scene.hpp"

#include "trajcast/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace trajcast::scene
{

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::optional<Point2> Trajectory::at(std::int64_t frame) const
{
  auto it = std::lower_bound(points.begin(), points.end(), frame,
                             [](const TrajectoryPoint & p, std::int64_t f) { return p.frame < f; });
  if (it == points.end() || it->frame != frame) return std::nullopt;
  return it->position;
}

void Scene::validate() const
{
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto & t = trajectories[i];
    if (i > 0 && trajectories[i - 1].subject_id >= t.subject_id) {
      throw DataError("scene '" + name + "': subject ids must be unique and sorted");
    }
    if (t.subject_class.id >= class_count) {
      throw DataError(fmt::format("subject {}: class {} >= class count {}", t.subject_id, t.subject_class.id,
                                  class_count));
    }
    for (std::size_t j = 0; j < t.points.size(); ++j) {
      if (j > 0 && t.points[j - 1].frame >= t.points[j].frame) {
        throw DataError(fmt::format("subject {}: frames not strictly increasing", t.subject_id));
      }
      const Point2 p = t.points[j].position;
      if (!(p.x >= 0.0 && p.x < 1.0 && p.y >= 0.0 && p.y < 1.0)) {
        throw DataError(fmt::format("subject {} frame {}: position outside the image", t.subject_id,
                                    t.points[j].frame));
      }
    }
  }
}

namespace
{

struct Row
{
  std::int64_t frame;
  std::int64_t subject;
  std::uint32_t cls;
  double x;
  double y;
  std::size_t line;
};

template <class T>
bool parse_field(const std::string & token, T & out)
{
  std::istringstream ss(token);
  ss >> out;
  return !ss.fail() && ss.eof();
}

std::vector<std::string> split_fields(const std::string & line)
{
  std::vector<std::string> fields;
  std::istringstream ss(line);
  std::string token;
  while (ss >> token) fields.push_back(token);
  return fields;
}

}  // namespace

Scene parse_annotations(std::istream & in, Raster image, std::uint32_t class_count)
{
  if (image.empty()) throw ContractError("parse_annotations: scene image is empty");
  const double width = static_cast<double>(image.width());
  const double height = static_cast<double>(image.height());

  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto fields = split_fields(line);
    if (fields.size() != 5) {
      throw ParseError(fmt::format("expected 5 fields, found {}", fields.size()), lineno);
    }
    Row r{};
    r.line = lineno;
    if (!parse_field(fields[0], r.frame) || !parse_field(fields[1], r.subject) || !parse_field(fields[2], r.cls) ||
        !parse_field(fields[3], r.x) || !parse_field(fields[4], r.y)) {
      throw ParseError("malformed field in '" + line + "'", lineno);
    }
    if (fields[2].front() == '-') throw ParseError("negative class id", lineno);
    if (!(r.x >= 0.0 && r.x < width && r.y >= 0.0 && r.y < height)) {
      throw DataError(fmt::format("line {}: position ({}, {}) outside image {}x{}", lineno, r.x, r.y,
                                  image.width(), image.height()));
    }
    if (r.cls >= class_count) {
      throw DataError(fmt::format("line {}: class id {} >= class count {}", lineno, r.cls, class_count));
    }
    rows.push_back(r);
  }

  std::map<std::int64_t, Trajectory> by_subject;
  for (const auto & r : rows) {
    auto [it, inserted] = by_subject.try_emplace(r.subject);
    Trajectory & t = it->second;
    if (inserted) {
      t.subject_id = r.subject;
      t.subject_class = SubjectClass{r.cls};
    } else if (t.subject_class.id != r.cls) {
      throw DataError(fmt::format("line {}: subject {} changes class", r.line, r.subject));
    }
    t.points.push_back({r.frame, {r.x / width, r.y / height}});
  }

  Scene scene;
  scene.image = std::move(image);
  scene.class_count = class_count;
  for (auto & [id, t] : by_subject) {
    std::sort(t.points.begin(), t.points.end(),
              [](const TrajectoryPoint & a, const TrajectoryPoint & b) { return a.frame < b.frame; });
    for (std::size_t j = 1; j < t.points.size(); ++j) {
      if (t.points[j].frame == t.points[j - 1].frame) {
        throw DataError(fmt::format("duplicate annotation for frame {} subject {}", t.points[j].frame, id));
      }
    }
    scene.trajectories.push_back(std::move(t));
  }
  return scene;
}

Scene parse_annotations(const std::filesystem::path & path, Raster image, std::uint32_t class_count)
{
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotations '" + path.string() + "'");
  return parse_annotations(in, std::move(image), class_count);
}

void write_annotations(std::ostream & out, const Scene & scene)
{
  const double width = static_cast<double>(scene.width());
  const double height = static_cast<double>(scene.height());
  out << "# frame\tsubject_id\tclass_id\tx\ty\n";
  for (const auto & t : scene.trajectories) {
    for (const auto & p : t.points) {
      out << fmt::format("{}\t{}\t{}\t{:.17g}\t{:.17g}\n", p.frame, t.subject_id, t.subject_class.id,
                         p.position.x * width, p.position.y * height);
    }
  }
}

Scene subsample(const Scene & scene, std::int64_t stride)
{
  if (stride < 1) throw ContractError("subsample: stride must be >= 1");
  Scene out = scene;
  out.trajectories.clear();
  out.frame_stride = scene.frame_stride * stride;
  for (const auto & t : scene.trajectories) {
    Trajectory kept{t.subject_id, t.subject_class, {}};
    for (const auto & p : t.points) {
      // Negative frames are kept on the same lattice as positive ones.
      if (((p.frame % stride) + stride) % stride == 0) {
        const std::int64_t q = p.frame >= 0 ? p.frame / stride : -((-p.frame) / stride);
        kept.points.push_back({q, p.position});
      }
    }
    if (!kept.points.empty()) out.trajectories.push_back(std::move(kept));
  }
  return out;
}

GridSpec GridSpec::for_image(std::size_t image_height, std::size_t image_width, std::size_t cell_size)
{
  if (cell_size == 0) throw ContractError("grid cell size must be positive");
  if (image_height == 0 || image_width == 0) throw ContractError("grid requires a non-empty image");
  GridSpec g;
  g.cell_size = cell_size;
  g.image_height = image_height;
  g.image_width = image_width;
  g.rows = (image_height + cell_size - 1) / cell_size;
  g.cols = (image_width + cell_size - 1) / cell_size;
  return g;
}

std::optional<GridSpec::Cell> GridSpec::cell_of_pixel(double px, double py) const
{
  if (!(px >= 0.0 && py >= 0.0 && px < static_cast<double>(image_width) && py < static_cast<double>(image_height))) {
    return std::nullopt;
  }
  const double g = static_cast<double>(cell_size);
  auto col = static_cast<std::size_t>(std::floor(px / g));
  auto row = static_cast<std::size_t>(std::floor(py / g));
  // Half-open cells: correct floating-point rounding against the exact bounds.
  if (static_cast<double>(col) * g > px) --col;
  else if (static_cast<double>(col + 1) * g <= px) ++col;
  if (static_cast<double>(row) * g > py) --row;
  else if (static_cast<double>(row + 1) * g <= py) ++row;
  return Cell{std::min(row, rows - 1), std::min(col, cols - 1)};
}

std::optional<GridSpec::Cell> GridSpec::cell_of(Point2 p) const
{
  return cell_of_pixel(p.x * static_cast<double>(image_width), p.y * static_cast<double>(image_height));
}

void write_likelihood_map(std::ostream & out, const LikelihoodMap & map)
{
  out << map.rows << ' ' << map.cols << ' ' << map.subject_class.id << '\n';
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      if (c > 0) out << ' ';
      out << fmt::format("{:.17g}", map.at(r, c));
    }
    out << '\n';
  }
}

LikelihoodMap read_likelihood_map(std::istream & in)
{
  std::size_t rows = 0, cols = 0;
  std::uint32_t cls = 0;
  if (!(in >> rows >> cols >> cls) || rows == 0 || cols == 0) {
    throw ParseError("likelihood map: bad header, expected 'rows cols class'", 1);
  }
  LikelihoodMap map(SubjectClass{cls}, rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    double v = 0.0;
    if (!(in >> v)) throw ParseError(fmt::format("likelihood map: missing value {}", i), 2 + i / cols);
    if (!(v >= 0.0 && v <= 1.0)) throw DataError(fmt::format("likelihood map: value {} outside [0,1]", v));
    map.values[i] = v;
  }
  return map;
}

void save_likelihood_map(const std::filesystem::path & path, const LikelihoodMap & map)
{
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_likelihood_map(out, map);
}

LikelihoodMap load_likelihood_map(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_likelihood_map(in);
}

LikelihoodMap build_ground_truth_map(const Scene & scene, SubjectClass cls, const GridSpec & grid)
{
  LikelihoodMap map(cls, grid.rows, grid.cols, 0.0);
  std::vector<std::size_t> counts(grid.cell_count(), 0);
  std::size_t subjects = 0;
  for (const auto & t : scene.trajectories) {
    if (t.subject_class != cls) continue;
    ++subjects;
    std::set<std::size_t> visited;
    for (const auto & p : t.points) {
      if (auto cell = grid.cell_of(p.position)) visited.insert(cell->row * grid.cols + cell->col);
    }
    for (auto idx : visited) ++counts[idx];
  }
  if (subjects == 0) {
    throw DataError(fmt::format("scene '{}' has no subject of class {}", scene.name, cls.id));
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    map.values[i] = static_cast<double>(counts[i]) / static_cast<double>(subjects);
  }
  return map;
}

Raster extract_patch(const Raster & image, GridSpec::Cell cell, const GridSpec & grid)
{
  if (cell.row >= grid.rows || cell.col >= grid.cols) throw ContractError("extract_patch: cell outside grid");
  const std::size_t g = grid.cell_size;
  Raster patch(image.channels(), 3 * g, 3 * g, 0.0);
  // Top-left of the patch in image pixels, offset by the one-cell padding.
  const auto top = static_cast<std::int64_t>(cell.row * g) - static_cast<std::int64_t>(g);
  const auto left = static_cast<std::int64_t>(cell.col * g) - static_cast<std::int64_t>(g);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t y = 0; y < 3 * g; ++y) {
      const std::int64_t iy = top + static_cast<std::int64_t>(y);
      if (iy < 0 || iy >= static_cast<std::int64_t>(image.height())) continue;
      for (std::size_t x = 0; x < 3 * g; ++x) {
        const std::int64_t ix = left + static_cast<std::int64_t>(x);
        if (ix < 0 || ix >= static_cast<std::int64_t>(image.width())) continue;
        patch(c, y, x) = image(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
      }
    }
  }
  return patch;
}

void save_scene(const std::filesystem::path & dir, const Scene & scene)
{
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "annotations.tsv");
    if (!out) throw DataError("cannot write annotations in '" + dir.string() + "'");
    write_annotations(out, scene);
  }
  write_png(dir / "image.png", scene.image);
  nlohmann::json meta;
  meta["name"] = scene.name;
  meta["width"] = scene.width();
  meta["height"] = scene.height();
  meta["frame_stride"] = scene.frame_stride;
  meta["class_count"] = scene.class_count;
  meta["forbidden_zones"] = nlohmann::json::array();
  for (const auto & r : scene.forbidden_zones) meta["forbidden_zones"].push_back({r.x0, r.y0, r.x1, r.y1});
  std::ofstream out(dir / "scene.json");
  out << meta.dump(2) << '\n';
}

Scene load_scene(const std::filesystem::path & dir)
{
  nlohmann::json meta = nlohmann::json::object();
  if (std::ifstream in(dir / "scene.json"); in) {
    try {
      meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception & e) {
      throw ParseError("scene.json: " + std::string(e.what()), 0);
    }
  }
  const auto class_count = meta.value("class_count", std::uint32_t{1});
  Scene scene = parse_annotations(dir / "annotations.tsv", read_png(dir / "image.png"), class_count);
  scene.name = meta.value("name", dir.filename().string());
  scene.frame_stride = meta.value("frame_stride", std::int64_t{1});
  if (meta.contains("forbidden_zones")) {
    for (const auto & r : meta["forbidden_zones"]) {
      scene.forbidden_zones.push_back({r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                                       r.at(3).get<double>()});
    }
  }
  return scene;
}

}  // namespace trajcast::scene
