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
#include "trajcast/ndgrad/ops.hpp"
#include "trajcast/pool/context_pool.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace trajcast::pool;
using trajcast::scene::GridSpec;
using trajcast::scene::LikelihoodMap;

namespace
{

PoolConfig small_config(std::size_t hidden = 3, std::uint32_t classes = 2)
{
  PoolConfig cfg;
  cfg.hidden_dim = hidden;
  cfg.class_count = classes;
  return cfg;
}

Neighbor make_neighbor(std::int64_t id, std::uint32_t cls, Point2 p, std::vector<double> h)
{
  return Neighbor{id, SubjectClass{cls}, p, std::move(h)};
}

}  // namespace

TEST(SocialTensor, NoNeighborsGivesZeros)
{
  auto cfg = small_config();
  auto s = social_tensor(0, {0.5, 0.5}, {}, cfg);
  EXPECT_EQ(s.values.size(), cfg.social_size());
  for (double v : s.values) EXPECT_EQ(v, 0.0);
}

TEST(SocialTensor, SingleNeighborLandsInItsCell)
{
  auto cfg = small_config();
  // Window 0.2, 4 cells of 0.05. Offset (+0.01, -0.06) -> col 2, row 0.
  std::vector<Neighbor> n{make_neighbor(7, 0, {0.51, 0.44}, {1.0, 2.0, 3.0})};
  auto s = social_tensor(0, {0.5, 0.5}, n, cfg);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t cls = 0; cls < 2; ++cls) {
          const double want = (r == 0 && c == 2 && cls == 0) ? double(k + 1) : 0.0;
          EXPECT_EQ(s.at(r, c, k, cls), want);
        }
}

TEST(SocialTensor, SameCellNeighborsSumAndTargetExcluded)
{
  auto cfg = small_config();
  std::vector<Neighbor> n{make_neighbor(1, 0, {0.52, 0.52}, {1.0, 0.5, -1.0}),
                          make_neighbor(2, 0, {0.53, 0.51}, {2.0, 0.25, 4.0}),
                          make_neighbor(0, 0, {0.5, 0.5}, {100.0, 100.0, 100.0}),
                          make_neighbor(3, 0, {0.9, 0.9}, {9.0, 9.0, 9.0})};
  auto s = social_tensor(0, {0.5, 0.5}, n, cfg);
  EXPECT_EQ(s.at(2, 2, 0, 0), 3.0);
  EXPECT_EQ(s.at(2, 2, 1, 0), 0.75);
  EXPECT_EQ(s.at(2, 2, 2, 0), 3.0);
  double total = 0.0;
  for (double v : s.values) total += std::abs(v);
  EXPECT_EQ(total, 3.0 + 0.75 + 3.0);
}

TEST(SocialTensor, HiddenDimMismatchIsContractError)
{
  auto cfg = small_config();
  std::vector<Neighbor> n{make_neighbor(1, 0, {0.5, 0.5}, {1.0})};
  EXPECT_THROW(social_tensor(0, {0.5, 0.5}, n, cfg), trajcast::ContractError);
}

TEST(SocialTensor, BoundaryNeighborLandsInExactlyOneCell)
{
  auto cfg = small_config(1, 1);
  // Origin target keeps neighbor offsets exact.
  const Point2 target{0.0, 0.0};
  for (std::size_t i = 0; i <= cfg.social_grid; ++i) {
    const double off = social_cell_lower(i, cfg);
    auto cell = social_cell(target, {target.x + off, target.y}, cfg);
    if (i == cfg.social_grid) {
      EXPECT_FALSE(cell.has_value());
    } else {
      ASSERT_TRUE(cell.has_value());
      EXPECT_EQ(cell->col, i);
    }
  }
}

TEST(SocialTensor, PartitionPropertyOnRandomInstances)
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.3, 0.7), h(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto cfg = small_config(4, 2);
    cfg.social_grid = 1 + trial % 6;
    const Point2 target{u(rng), u(rng)};
    std::vector<Neighbor> ns;
    double expected = 0.0;
    for (int j = 1; j <= 20; ++j) {
      Neighbor n = make_neighbor(j, j % 2, {u(rng), u(rng)}, {h(rng), h(rng), h(rng), h(rng)});
      if (social_cell(target, n.position, cfg)) {
        for (double v : n.hidden) expected += std::abs(v);
      }
      ns.push_back(n);
    }
    auto s = social_tensor(0, target, ns, cfg);
    double total = 0.0;
    for (double v : s.values) total += std::abs(v);
    // Sum of |sums| <= sum of |h|; equality when no cancellations, so compare
    // against the signed recount instead of abs totals when cells are shared.
    double signed_total = 0.0, want_signed = 0.0;
    for (double v : s.values) signed_total += v;
    for (const auto & n : ns)
      if (social_cell(target, n.position, cfg))
        for (double v : n.hidden) want_signed += v;
    EXPECT_NEAR(signed_total, want_signed, 1e-12);
    EXPECT_LE(total, expected + 1e-12);
  }
}

TEST(SocialTensor, GraphFormMatchesPlainForm)
{
  namespace nd = trajcast::ndgrad;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.35, 0.65), h(-1.0, 1.0);
  auto cfg = small_config(3, 2);
  nd::Graph g;
  std::vector<Neighbor> plain;
  std::vector<NeighborState> live;
  for (int j = 0; j < 12; ++j) {
    Neighbor n = make_neighbor(j, j % 2, {u(rng), u(rng)}, {h(rng), h(rng), h(rng)});
    live.push_back({n.subject_id, n.subject_class, n.position, g.variable(nd::Tensor::vector(n.hidden))});
    plain.push_back(std::move(n));
  }
  auto want = social_tensor(4, plain[4].position, plain, cfg);
  auto got = social_tensor(g, 4, plain[4].position, live, cfg);
  EXPECT_EQ(got.value().values(), want.values);
}

TEST(Reachability, UniformMapAtCenter)
{
  PoolConfig cfg;
  auto grid = GridSpec::for_image(200, 200, 20);
  LikelihoodMap map({}, grid.rows, grid.cols, 0.4);
  auto r = reachability_tensor({0.5, 0.5}, map, grid, cfg);
  EXPECT_EQ(r.side, 3u);
  for (double v : r.values) EXPECT_EQ(v, 0.4);
}

TEST(Reachability, CornerQuadrantOutsideImageIsZero)
{
  PoolConfig cfg;
  auto grid = GridSpec::for_image(200, 200, 20);
  LikelihoodMap map({}, grid.rows, grid.cols, 0.4);
  auto r = reachability_tensor({0.0, 0.0}, map, grid, cfg);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(r.at(i, j), (i == 0 || j == 0) ? 0.0 : 0.4);
}

TEST(Reachability, SixtyPixelWindowOfTwentyPixelCellsIsThreeByThree)
{
  PoolConfig cfg;
  cfg.reach_distance = 60;
  cfg.reach_cell = 20;
  EXPECT_EQ(cfg.reach_side(), 3u);
  cfg.reach_cell = 25;
  EXPECT_THROW(cfg.validate(), trajcast::ContractError);
}

TEST(Reachability, TranslationByOneCellShiftsContents)
{
  PoolConfig cfg;
  cfg.reach_distance = 100;
  cfg.reach_cell = 20;
  auto grid = GridSpec::for_image(400, 400, 20);
  LikelihoodMap map({}, grid.rows, grid.cols);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto & v : map.values) v = u(rng);
  const Point2 a{0.5 + 3.0 / 400.0, 0.5 + 7.0 / 400.0};
  const Point2 b{a.x + 20.0 / 400.0, a.y};
  const Point2 c{a.x, a.y + 20.0 / 400.0};
  auto ra = reachability_tensor(a, map, grid, cfg);
  auto rb = reachability_tensor(b, map, grid, cfg);
  auto rc = reachability_tensor(c, map, grid, cfg);
  const std::size_t n = ra.side;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j + 1 < n; ++j) EXPECT_EQ(rb.at(i, j), ra.at(i, j + 1));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(rc.at(i, j), ra.at(i + 1, j));
  }
}

TEST(TruncateNeighbors, FewSubjectsUnchanged)
{
  std::vector<Candidate> c{{5, {0.1, 0.1}}, {2, {0.9, 0.9}}, {7, {0.5, 0.5}}};
  auto out = truncate_neighbors(c, {0.5, 0.5}, 40);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(out[i].subject_id, c[i].subject_id);
}

TEST(TruncateNeighbors, EquidistantTieDropsLargestId)
{
  std::vector<Candidate> c;
  for (int i = 0; i < 41; ++i) {
    const double a = 2.0 * M_PI * i / 41.0;
    c.push_back({100 - i, {0.5 + 0.1 * std::cos(a), 0.5 + 0.1 * std::sin(a)}});
  }
  // Force exact equidistance: all points share one position.
  for (auto & x : c) x.position = {0.6, 0.5};
  auto out = truncate_neighbors(c, {0.5, 0.5}, 40);
  ASSERT_EQ(out.size(), 40u);
  for (const auto & x : out) EXPECT_NE(x.subject_id, 100);
}

TEST(TruncateNeighbors, FiftyOnALineKeepsNearestForty)
{
  std::vector<Candidate> c;
  for (int i = 0; i < 50; ++i) c.push_back({i, {0.01 * (49 - i), 0.0}});
  auto out = truncate_neighbors(c, {0.0, 0.0}, 40);
  ASSERT_EQ(out.size(), 40u);
  // Brute force: sort everything by distance then id and take 40.
  auto sorted = c;
  std::sort(sorted.begin(), sorted.end(), [](const Candidate & a, const Candidate & b) {
    const double da = std::hypot(a.position.x, a.position.y), db = std::hypot(b.position.x, b.position.y);
    return da != db ? da < db : a.subject_id < b.subject_id;
  });
  std::vector<std::int64_t> want, got;
  for (int i = 0; i < 40; ++i) want.push_back(sorted[i].subject_id);
  for (const auto & x : out) got.push_back(x.subject_id);
  std::sort(want.begin(), want.end());
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, want);
  EXPECT_EQ(got.front(), 10);
}
