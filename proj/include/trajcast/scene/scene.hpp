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

#ifndef TRAJCAST__SCENE__SCENE_HPP_
#define TRAJCAST__SCENE__SCENE_HPP_

#include "trajcast/scene/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace trajcast::scene
{

/// Semantic class label of a moving subject (pedestrian, cyclist, ...).
struct SubjectClass
{
  std::uint32_t id = 0;
  friend auto operator<=>(const SubjectClass &, const SubjectClass &) = default;
};

struct Point2
{
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2 &, const Point2 &) = default;
};

double distance(Point2 a, Point2 b);

/// Position at a time step, in scene-normalized coordinates ([0,1) on both axes).
struct TrajectoryPoint
{
  std::int64_t frame = 0;
  Point2 position;
  friend bool operator==(const TrajectoryPoint &, const TrajectoryPoint &) = default;
};

/// Frames are strictly increasing.
struct Trajectory
{
  std::int64_t subject_id = 0;
  SubjectClass subject_class;
  std::vector<TrajectoryPoint> points;

  /// Position at `frame`, if the subject is present then.
  std::optional<Point2> at(std::int64_t frame) const;
  friend bool operator==(const Trajectory &, const Trajectory &) = default;
};

/// Axis-aligned rectangle in normalized coordinates, [x0,x1) x [y0,y1).
struct Rect
{
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  bool contains(Point2 p) const noexcept { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }
  friend bool operator==(const Rect &, const Rect &) = default;
};

/**
 * @brief One static camera view: a background image and the annotated tracks.
 *
 * Trajectories are sorted by subject id and ids are unique. `forbidden_zones`
 * is optional ground-truth metadata (synthetic scenes) and never read by the
 * models.
 */
struct Scene
{
  std::string name;
  Raster image;
  std::vector<Trajectory> trajectories;
  std::int64_t frame_stride = 1;
  std::uint32_t class_count = 1;
  std::vector<Rect> forbidden_zones;

  std::size_t width() const noexcept { return image.width(); }
  std::size_t height() const noexcept { return image.height(); }

  /// Checks the invariants above; throws DataError.
  void validate() const;
  friend bool operator==(const Scene &, const Scene &) = default;
};

/**
 * @brief Reads the 5-column annotation TSV `frame subject_id class_id x y`.
 *
 * `x`, `y` are pixel coordinates and must lie in [0,W) x [0,H) of `image`.
 * Lines may come in any order; blank lines and lines starting with `#` are
 * skipped. Malformed lines raise ParseError with the line number; out-of-range
 * positions, class ids >= `class_count` and duplicate (frame, subject) pairs
 * raise DataError.
 */
Scene parse_annotations(std::istream & in, Raster image, std::uint32_t class_count = 1);
Scene parse_annotations(const std::filesystem::path & path, Raster image, std::uint32_t class_count = 1);

/// Writes the annotation TSV for `scene` (pixel coordinates).
void write_annotations(std::ostream & out, const Scene & scene);

/// Keeps frames divisible by `stride` and renumbers them `frame / stride`.
/// Subjects with no retained frame are dropped.
Scene subsample(const Scene & scene, std::int64_t stride = 10);

/// Square grid of `cell_size` pixel cells; partial cells at the right/bottom edge count.
struct GridSpec
{
  std::size_t cell_size = 60;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t image_height = 0;
  std::size_t image_width = 0;

  static GridSpec for_image(std::size_t image_height, std::size_t image_width, std::size_t cell_size);
  static GridSpec for_scene(const Scene & scene, std::size_t cell_size)
  {
    return for_image(scene.height(), scene.width(), cell_size);
  }

  std::size_t cell_count() const noexcept { return rows * cols; }

  struct Cell
  {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const Cell &, const Cell &) = default;
  };
  /// Cell containing a pixel-space point; nullopt outside the image.
  std::optional<Cell> cell_of_pixel(double px, double py) const;
  std::optional<Cell> cell_of(Point2 normalized) const;
};

/// Per-class grid of step likelihoods in [0, 1].
struct LikelihoodMap
{
  SubjectClass subject_class;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  LikelihoodMap() = default;
  LikelihoodMap(SubjectClass cls, std::size_t rows, std::size_t cols, double fill = 0.0)
  : subject_class(cls), rows(rows), cols(cols), values(rows * cols, fill)
  {
  }

  double & at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  friend bool operator==(const LikelihoodMap &, const LikelihoodMap &) = default;
};

/// Text form: header `rows cols class`, then one row of values per line.
void write_likelihood_map(std::ostream & out, const LikelihoodMap & map);
LikelihoodMap read_likelihood_map(std::istream & in);
void save_likelihood_map(const std::filesystem::path & path, const LikelihoodMap & map);
LikelihoodMap load_likelihood_map(const std::filesystem::path & path);

/// Fraction of the unique subjects of `cls` that ever occupy each grid cell.
/// Throws DataError when the scene has no subject of that class.
LikelihoodMap build_ground_truth_map(const Scene & scene, SubjectClass cls, const GridSpec & grid);

/// The cell plus an annulus one cell wide: a 3g x 3g raster, zero outside the image.
Raster extract_patch(const Raster & image, GridSpec::Cell cell, const GridSpec & grid);

/// Scene directory: `annotations.tsv`, `image.png`, `scene.json`.
void save_scene(const std::filesystem::path & dir, const Scene & scene);
Scene load_scene(const std::filesystem::path & dir);

}  // namespace trajcast::scene

#endif  // TRAJCAST__SCENE__SCENE_HPP_
