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
#include "trajcast/scene/scene.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

using namespace trajcast::scene;

namespace
{

Raster blank(std::size_t h, std::size_t w) { return Raster(3, h, w, 0.0); }

// Independent recount: visits every cell and asks, per subject, whether any of
// its points falls inside the cell's pixel bounds.
LikelihoodMap recount(const Scene & scene, SubjectClass cls, std::size_t g)
{
  const std::size_t rows = (scene.height() + g - 1) / g;
  const std::size_t cols = (scene.width() + g - 1) / g;
  LikelihoodMap m(cls, rows, cols);
  std::size_t total = 0;
  for (const auto & t : scene.trajectories) total += t.subject_class == cls;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t hits = 0;
      for (const auto & t : scene.trajectories) {
        if (t.subject_class != cls) continue;
        bool touched = false;
        for (const auto & p : t.points) {
          const double px = p.position.x * scene.width();
          const double py = p.position.y * scene.height();
          if (px >= double(c * g) && px < double((c + 1) * g) && py >= double(r * g) && py < double((r + 1) * g)) {
            touched = true;
          }
        }
        hits += touched;
      }
      m.at(r, c) = double(hits) / double(total);
    }
  }
  return m;
}

}  // namespace

TEST(ParseAnnotations, TwoLinesOneSubject)
{
  std::istringstream in("10\t3\t0\t5.0\t6.0\n0\t3\t0\t1.0\t2.0\n");
  Scene s = parse_annotations(in, blank(20, 10));
  ASSERT_EQ(s.trajectories.size(), 1u);
  const auto & t = s.trajectories[0];
  EXPECT_EQ(t.subject_id, 3);
  ASSERT_EQ(t.points.size(), 2u);
  EXPECT_EQ(t.points[0].frame, 0);
  EXPECT_EQ(t.points[1].frame, 10);
  EXPECT_DOUBLE_EQ(t.points[0].position.x, 0.1);
  EXPECT_DOUBLE_EQ(t.points[0].position.y, 0.1);
}

TEST(ParseAnnotations, EmptyFileGivesEmptyScene)
{
  std::istringstream in("");
  EXPECT_TRUE(parse_annotations(in, blank(4, 4)).trajectories.empty());
  std::istringstream comments("# header only\n\n");
  EXPECT_TRUE(parse_annotations(comments, blank(4, 4)).trajectories.empty());
}

TEST(ParseAnnotations, PositionBeyondWidthIsDataError)
{
  std::istringstream in("0\t1\t0\t10.0\t1.0\n");
  EXPECT_THROW(parse_annotations(in, blank(20, 10)), trajcast::DataError);
}

TEST(ParseAnnotations, MalformedLineReportsLineNumber)
{
  std::istringstream in("0\t1\t0\t1.0\t1.0\n# c\n1\t1\tzero\t1.0\t1.0\n");
  try {
    parse_annotations(in, blank(20, 10));
    FAIL();
  } catch (const trajcast::ParseError & e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream short_line("0\t1\t0\t1.0\n");
  EXPECT_THROW(parse_annotations(short_line, blank(20, 10)), trajcast::ParseError);
}

TEST(ParseAnnotations, DuplicateFrameSubjectIsDataError)
{
  std::istringstream in("0\t1\t0\t1.0\t1.0\n0\t1\t0\t2.0\t1.0\n");
  EXPECT_THROW(parse_annotations(in, blank(20, 10)), trajcast::DataError);
}

TEST(ParseAnnotations, ClassIdBeyondClassCount)
{
  std::istringstream in("0\t1\t2\t1.0\t1.0\n");
  EXPECT_THROW(parse_annotations(in, blank(20, 10), 2), trajcast::DataError);
}

TEST(Subsample, KeepsEveryTenthFrame)
{
  Scene s;
  s.image = blank(10, 10);
  Trajectory t{1, {}, {}};
  for (int f = 0; f < 100; ++f) t.points.push_back({f, {0.5, 0.5}});
  s.trajectories.push_back(t);
  Scene out = subsample(s, 10);
  ASSERT_EQ(out.trajectories.size(), 1u);
  ASSERT_EQ(out.trajectories[0].points.size(), 10u);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(out.trajectories[0].points[i].frame, i);
  EXPECT_EQ(out.frame_stride, 10);
}

TEST(Subsample, StrideOneIsIdentityAndEmptyTrajectoriesDrop)
{
  Scene s;
  s.image = blank(10, 10);
  s.trajectories.push_back({1, {}, {{0, {0.1, 0.1}}, {3, {0.2, 0.2}}}});
  s.trajectories.push_back({2, {}, {{3, {0.1, 0.1}}, {7, {0.2, 0.2}}}});
  EXPECT_EQ(subsample(s, 1), s);
  Scene out = subsample(s, 5);
  ASSERT_EQ(out.trajectories.size(), 1u);
  EXPECT_EQ(out.trajectories[0].subject_id, 1);
  EXPECT_THROW(subsample(s, 0), trajcast::ContractError);
}

TEST(GroundTruthMap, FractionOfUniqueSubjects)
{
  Scene s;
  s.image = blank(40, 40);
  // 10 pedestrians; 3 of them pass through cell (0,0) of a 20px grid.
  for (int i = 0; i < 10; ++i) {
    Trajectory t{i, {}, {}};
    const double x = i < 3 ? 0.1 : 0.75;
    // Five consecutive frames inside the same cell count once.
    for (int f = 0; f < 5; ++f) t.points.push_back({f, {x, 0.1 + 0.01 * f}});
    s.trajectories.push_back(t);
  }
  auto grid = GridSpec::for_scene(s, 20);
  auto m = build_ground_truth_map(s, SubjectClass{0}, grid);
  EXPECT_DOUBLE_EQ(m.at(0, 0), 0.3);
  EXPECT_DOUBLE_EQ(m.at(0, 1), 0.7);
  EXPECT_EQ(m.at(1, 0), 0.0);
  EXPECT_EQ(m.at(1, 1), 0.0);
}

TEST(GroundTruthMap, MissingClassIsDataError)
{
  Scene s;
  s.image = blank(40, 40);
  s.class_count = 2;
  s.trajectories.push_back({1, SubjectClass{0}, {{0, {0.5, 0.5}}}});
  EXPECT_THROW(build_ground_truth_map(s, SubjectClass{1}, GridSpec::for_scene(s, 10)), trajcast::DataError);
}

TEST(GroundTruthMap, MatchesBruteForceRecountOnRandomScenes)
{
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> side(1, 8), nsub(1, 10), npts(1, 12), cellpx(3, 9), cls(0, 1);
    const std::size_t g = cellpx(rng);
    const std::size_t rows = side(rng), cols = side(rng);
    // Image sizes that are not multiples of g exercise partial edge cells.
    const std::size_t h = rows * g - (rows > 1 ? g / 2 : 0);
    const std::size_t w = cols * g;
    Scene s;
    s.image = blank(h, w);
    s.class_count = 2;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = nsub(rng);
    for (int i = 0; i < n; ++i) {
      Trajectory t{i, SubjectClass{static_cast<std::uint32_t>(cls(rng))}, {}};
      const int m = npts(rng);
      for (int f = 0; f < m; ++f) {
        // Snap some points to exact cell boundaries.
        double x = u(rng), y = u(rng);
        if (f % 3 == 0) x = std::floor(x * cols) * double(g) / double(w);
        t.points.push_back({f, {x, y}});
      }
      s.trajectories.push_back(t);
    }
    auto grid = GridSpec::for_scene(s, g);
    for (std::uint32_t c = 0; c < 2; ++c) {
      bool present = false;
      for (const auto & t : s.trajectories) present |= t.subject_class.id == c;
      if (!present) continue;
      auto got = build_ground_truth_map(s, SubjectClass{c}, grid);
      auto want = recount(s, SubjectClass{c}, g);
      ASSERT_EQ(got, want) << "trial " << trial;
      for (double v : got.values) {
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
      }
    }
  }
}

TEST(GridSpec, DimensionsAndHalfOpenCells)
{
  auto g = GridSpec::for_image(100, 130, 60);
  EXPECT_EQ(g.rows, 2u);
  EXPECT_EQ(g.cols, 3u);
  EXPECT_EQ(g.cell_of_pixel(60.0, 0.0)->col, 1u);
  EXPECT_EQ(g.cell_of_pixel(59.999, 0.0)->col, 0u);
  EXPECT_FALSE(g.cell_of_pixel(130.0, 0.0).has_value());
  EXPECT_THROW(GridSpec::for_image(10, 10, 0), trajcast::ContractError);
}

TEST(ExtractPatch, InteriorCellMatchesSubRectangle)
{
  Raster img(3, 9, 9);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = double(i % 251) / 251.0;
  auto grid = GridSpec::for_image(9, 9, 3);
  Raster p = extract_patch(img, {1, 1}, grid);
  ASSERT_EQ(p.height(), 9u);
  EXPECT_EQ(p, img);
}

TEST(ExtractPatch, CornerCellIsPaddedWithZeros)
{
  Raster img(1, 6, 6, 1.0);
  auto grid = GridSpec::for_image(6, 6, 2);
  Raster p = extract_patch(img, {0, 0}, grid);
  for (std::size_t y = 0; y < 6; ++y) {
    for (std::size_t x = 0; x < 6; ++x) {
      const bool pad = y < 2 || x < 2;
      EXPECT_EQ(p(0, y, x), pad ? 0.0 : 1.0) << y << "," << x;
    }
  }
}

TEST(ExtractPatch, SixtyPixelCellGives180PixelPatch)
{
  Raster img(3, 240, 300);
  auto grid = GridSpec::for_image(240, 300, 60);
  Raster p = extract_patch(img, {2, 4}, grid);
  EXPECT_EQ(p.height(), 180u);
  EXPECT_EQ(p.width(), 180u);
}

TEST(ExtractPatch, CenterThirdRecoversCellPixels)
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Raster img(3, 23, 17);
  for (auto & v : img.data()) v = u(rng);
  auto grid = GridSpec::for_image(23, 17, 5);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      Raster p = extract_patch(img, {r, c}, grid);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        for (std::size_t y = 0; y < 5; ++y) {
          for (std::size_t x = 0; x < 5; ++x) {
            const std::size_t iy = r * 5 + y, ix = c * 5 + x;
            const double want = (iy < 23 && ix < 17) ? img(ch, iy, ix) : 0.0;
            ASSERT_EQ(p(ch, 5 + y, 5 + x), want);
          }
        }
      }
    }
  }
}

TEST(Resize, IdentityCheckerboardAndConstant)
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Raster img(3, 7, 5);
  for (auto & v : img.data()) v = u(rng);
  Raster same = resize(img, 7, 5);
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_NEAR(same.data()[i], img.data()[i], 1e-12);

  Raster checker(1, 2, 2);
  checker(0, 0, 0) = 1.0;
  checker(0, 1, 1) = 1.0;
  EXPECT_NEAR(resize(checker, 1)(0, 0, 0), 0.5, 1e-15);

  Raster flat(3, 4, 6, 0.3);
  for (std::size_t d : {1u, 3u, 11u, 64u}) {
    const Raster r = resize(flat, d);
    for (double v : r.data()) EXPECT_NEAR(v, 0.3, 1e-15);
  }
  EXPECT_THROW(resize(flat, 0), trajcast::ContractError);
}

TEST(LikelihoodMapFile, RoundTrip)
{
  LikelihoodMap m(SubjectClass{1}, 2, 3);
  m.values = {0.0, 0.1, 1.0, 1.0 / 3.0, 0.25, 0.9999};
  std::stringstream ss;
  write_likelihood_map(ss, m);
  EXPECT_EQ(ss.str().substr(0, 6), "2 3 1\n");
  EXPECT_EQ(read_likelihood_map(ss), m);
  std::istringstream bad("1 1 0\n1.5\n");
  EXPECT_THROW(read_likelihood_map(bad), trajcast::DataError);
}

TEST(SceneDirectory, SaveAndLoad)
{
  Scene s;
  s.name = "roundtrip";
  s.image = Raster(3, 8, 12, 0.0);
  for (std::size_t i = 0; i < s.image.data().size(); ++i) s.image.data()[i] = double(i % 256) / 255.0;
  s.trajectories.push_back({4, {}, {{0, {0.25, 0.5}}, {1, {0.5, 0.75}}}});
  s.forbidden_zones.push_back({0.1, 0.2, 0.3, 0.4});
  auto dir = std::filesystem::temp_directory_path() / "trajcast_scene_test";
  std::filesystem::remove_all(dir);
  save_scene(dir, s);
  Scene back = load_scene(dir);
  EXPECT_EQ(back.name, s.name);
  EXPECT_EQ(back.image, s.image);
  EXPECT_EQ(back.forbidden_zones, s.forbidden_zones);
  ASSERT_EQ(back.trajectories.size(), 1u);
  EXPECT_NEAR(back.trajectories[0].points[1].position.y, 0.75, 1e-15);
  std::filesystem::remove_all(dir);
}
