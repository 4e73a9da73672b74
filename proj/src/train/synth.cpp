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

#include "trajcast/train/synth.hpp"

#include "trajcast/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

namespace trajcast::train
{

using scene::Point2;
using scene::Rect;

std::string to_string(SynthKind kind)
{
  switch (kind) {
    case SynthKind::ConstantVelocity:
      return "constant-velocity";
    case SynthKind::CrossingGroups:
      return "crossing-groups";
    case SynthKind::ObstacleField:
      return "obstacle-field";
    case SynthKind::RingRoad:
      return "ring-road";
  }
  return "?";
}

SynthKind parse_synth_kind(const std::string & text)
{
  for (auto k : {SynthKind::ConstantVelocity, SynthKind::CrossingGroups, SynthKind::ObstacleField,
                 SynthKind::RingRoad}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError(fmt::format(
    "unknown synthetic scene kind '{}' (expected constant-velocity, crossing-groups, obstacle-field or ring-road)",
    text));
}

void SynthSpec::validate() const
{
  if (subjects == 0) throw ContractError("synth: subjects must be positive");
  if (length < 2) throw ContractError("synth: length must be >= 2");
  if (frames == 0) throw ContractError("synth: frames must be positive");
  if (image_size < 16) throw ContractError("synth: image_size must be >= 16");
  if (!(noise >= 0.0)) throw ContractError("synth: noise must be >= 0");
  if (kind == SynthKind::ObstacleField && (zones == 0 || zones > 4)) {
    throw ContractError("synth: obstacle-field needs 1..4 zones");
  }
  if (kind == SynthKind::RingRoad && (cell_size == 0 || image_size % cell_size != 0 || image_size / cell_size < 4)) {
    throw ContractError("synth: ring-road needs image_size a multiple of cell_size with at least 4 cells");
  }
}

nlohmann::json SynthSpec::to_json() const
{
  return {{"kind", to_string(kind)}, {"subjects", subjects}, {"length", length},
          {"frames", frames},        {"image_size", image_size}, {"noise", noise},
          {"zones", zones},          {"cell_size", cell_size},   {"seed", seed}};
}

SynthSpec SynthSpec::from_json(const nlohmann::json & j)
{
  SynthSpec s;
  for (const auto & [key, value] : j.items()) {
    try {
      if (key == "kind") s.kind = parse_synth_kind(value.get<std::string>());
      else if (key == "subjects") s.subjects = value.get<std::size_t>();
      else if (key == "length") s.length = value.get<std::size_t>();
      else if (key == "frames") s.frames = value.get<std::size_t>();
      else if (key == "image_size") s.image_size = value.get<std::size_t>();
      else if (key == "noise") s.noise = value.get<double>();
      else if (key == "zones") s.zones = value.get<std::size_t>();
      else if (key == "cell_size") s.cell_size = value.get<std::size_t>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else throw ConfigError(fmt::format("synth.{}: unknown key", key));
    } catch (const nlohmann::json::exception & e) {
      throw ConfigError(fmt::format("synth.{}: {}", key, e.what()));
    }
  }
  return s;
}

namespace
{

constexpr double kUpper = 1.0 - 1e-6;

using Rng = std::mt19937_64;

double uniform(Rng & rng, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Point2 clamp_unit(Point2 p)
{
  return {std::clamp(p.x, 0.0, kUpper), std::clamp(p.y, 0.0, kUpper)};
}

struct Rgb
{
  double r, g, b;
};

void fill_texture(scene::Raster & img, Rng & rng, const std::function<Rgb(Point2)> & colour)
{
  std::normal_distribution<double> grain(0.0, 0.04);
  const double w = static_cast<double>(img.width());
  const double h = static_cast<double>(img.height());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const Rgb c = colour({(static_cast<double>(x) + 0.5) / w, (static_cast<double>(y) + 0.5) / h});
      const double n = grain(rng);
      img(0, y, x) = std::clamp(c.r + n, 0.0, 1.0);
      img(1, y, x) = std::clamp(c.g + n, 0.0, 1.0);
      img(2, y, x) = std::clamp(c.b + n, 0.0, 1.0);
    }
  }
}

constexpr Rgb kGround{0.72, 0.70, 0.64};
constexpr Rgb kObstacle{0.16, 0.34, 0.16};
constexpr Rgb kRoad{0.82, 0.82, 0.84};

scene::Trajectory make_track(std::int64_t id, std::int64_t start, const std::vector<Point2> & pts)
{
  scene::Trajectory t{id, {}, {}};
  for (std::size_t i = 0; i < pts.size(); ++i) t.points.push_back({start + static_cast<std::int64_t>(i), pts[i]});
  return t;
}

// Point at arc length `s` along a polyline; clamps to the ends.
Point2 along(const std::vector<Point2> & poly, double s)
{
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const double len = scene::distance(poly[i], poly[i + 1]);
    if (s <= len || i + 2 == poly.size()) {
      const double f = len > 0.0 ? std::clamp(s / len, 0.0, 1.0) : 0.0;
      return {poly[i].x + f * (poly[i + 1].x - poly[i].x), poly[i].y + f * (poly[i + 1].y - poly[i].y)};
    }
    s -= len;
  }
  return poly.back();
}

void constant_velocity(const SynthSpec & spec, Rng & rng, scene::Scene & s)
{
  std::normal_distribution<double> noise(0.0, spec.noise);
  const double span = static_cast<double>(spec.length - 1);
  for (std::size_t i = 0; i < spec.subjects; ++i) {
    Point2 p0, v;
    do {
      p0 = {uniform(rng, 0.1, 0.9), uniform(rng, 0.1, 0.9)};
      const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      const double speed = uniform(rng, 0.01, 0.025);
      v = {speed * std::cos(angle), speed * std::sin(angle)};
    } while (!(p0.x + v.x * span > 0.05 && p0.x + v.x * span < 0.95 && p0.y + v.y * span > 0.05 &&
               p0.y + v.y * span < 0.95));
    const auto start = static_cast<std::int64_t>(std::uniform_int_distribution<std::size_t>(0, spec.frames - 1)(rng));
    std::vector<Point2> pts;
    for (std::size_t t = 0; t < spec.length; ++t) {
      const double k = static_cast<double>(t);
      Point2 p{p0.x + v.x * k, p0.y + v.y * k};
      if (spec.noise > 0.0) p = {p.x + noise(rng), p.y + noise(rng)};
      pts.push_back(clamp_unit(p));
    }
    s.trajectories.push_back(make_track(static_cast<std::int64_t>(i + 1), start, pts));
  }
  fill_texture(s.image, rng, [](Point2) { return kGround; });
}

void crossing_groups(const SynthSpec & spec, Rng & rng, scene::Scene & s)
{
  std::normal_distribution<double> noise(0.0, spec.noise);
  for (std::size_t i = 0; i < spec.subjects; ++i) {
    const bool right = i % 2 == 0;
    const double speed = uniform(rng, 0.8, 1.0) * 0.85 / static_cast<double>(spec.length - 1);
    const double lane = uniform(rng, 0.35, 0.65);
    const double entry = uniform(rng, 0.03, 0.12);
    const Point2 p0 = right ? Point2{entry, lane} : Point2{lane, entry};
    const Point2 v = right ? Point2{speed, 0.0} : Point2{0.0, speed};
    const auto start = static_cast<std::int64_t>(std::uniform_int_distribution<std::size_t>(0, spec.frames - 1)(rng));
    std::vector<Point2> pts;
    for (std::size_t t = 0; t < spec.length; ++t) {
      const double k = static_cast<double>(t);
      Point2 p{p0.x + v.x * k, p0.y + v.y * k};
      if (spec.noise > 0.0) p = {p.x + noise(rng), p.y + noise(rng)};
      pts.push_back(clamp_unit(p));
    }
    s.trajectories.push_back(make_track(static_cast<std::int64_t>(i + 1), start, pts));
  }
  fill_texture(s.image, rng, [](Point2) { return kGround; });
}

void obstacle_field(const SynthSpec & spec, Rng & rng, scene::Scene & s)
{
  constexpr double kMargin = 0.03;
  constexpr double kLeadIn = 0.1;
  constexpr double kLeft = 0.3;
  constexpr double kRight = 0.75;
  const double slot = (kRight - kLeft) / static_cast<double>(spec.zones);
  for (std::size_t z = 0; z < spec.zones; ++z) {
    const double w = std::min(uniform(rng, 0.1, 0.16), slot - 2.0 * kMargin);
    const double h = uniform(rng, 0.25, 0.45);
    const double s0 = kLeft + slot * static_cast<double>(z);
    const double x0 = uniform(rng, s0 + kMargin, s0 + slot - kMargin - w);
    const double y0 = uniform(rng, 0.15, 0.85 - h);
    s.forbidden_zones.push_back({x0, y0, x0 + w, y0 + h});
  }
  auto blocked = [&](Point2 p) {
    return std::any_of(s.forbidden_zones.begin(), s.forbidden_zones.end(), [&](const Rect & r) { return r.contains(p); });
  };

  std::normal_distribution<double> noise(0.0, spec.noise);
  for (std::size_t i = 0; i < spec.subjects; ++i) {
    const double y = uniform(rng, 0.1, 0.9);
    std::vector<Point2> poly{{uniform(rng, 0.02, 0.15), y}};
    for (std::size_t z = 0; z < s.forbidden_zones.size(); ++z) {
      const auto & r = s.forbidden_zones[z];
      if (y < r.y0 - kMargin || y >= r.y1 + kMargin) continue;
      // Leads stay within half the gap to the neighbouring zones.
      const double before = z == 0 ? kLeadIn : std::min(kLeadIn, (r.x0 - s.forbidden_zones[z - 1].x1) / 2.0);
      const double after = z + 1 == s.forbidden_zones.size()
                             ? kLeadIn
                             : std::min(kLeadIn, (s.forbidden_zones[z + 1].x0 - r.x1) / 2.0);
      double side = (y - r.y0 < r.y1 - y) ? r.y0 - kMargin : r.y1 + kMargin;
      if (side < 0.02 || side > 0.98) side = side < 0.02 ? r.y1 + kMargin : r.y0 - kMargin;
      poly.push_back({r.x0 - before, y});
      poly.push_back({r.x0, side});
      poly.push_back({r.x1, side});
      poly.push_back({r.x1 + after, y});
    }
    poly.push_back({0.98, y});
    const double speed = uniform(rng, 0.9, 1.1) * 0.7 / static_cast<double>(spec.length - 1);
    const auto start = static_cast<std::int64_t>(std::uniform_int_distribution<std::size_t>(0, spec.frames - 1)(rng));
    std::vector<Point2> pts;
    for (std::size_t t = 0; t < spec.length; ++t) {
      const Point2 clean = along(poly, speed * static_cast<double>(t));
      Point2 p = clean;
      if (spec.noise > 0.0) {
        p = clamp_unit({clean.x + noise(rng), clean.y + noise(rng)});
        if (blocked(p)) p = clean;
      }
      pts.push_back(p);
    }
    s.trajectories.push_back(make_track(static_cast<std::int64_t>(i + 1), start, pts));
  }
  fill_texture(s.image, rng, [&](Point2 p) { return blocked(p) ? kObstacle : kGround; });
}

void ring_road(const SynthSpec & spec, Rng & rng, scene::Scene & s)
{
  const std::size_t n = spec.image_size / spec.cell_size;
  const double cell = 1.0 / static_cast<double>(n);
  const double lo = 1.5 * cell;
  const double hi = (static_cast<double>(n) - 1.5) * cell;
  const std::vector<Point2> loop{{lo, lo}, {hi, lo}, {hi, hi}, {lo, hi}, {lo, lo}};
  const double perimeter = 4.0 * (hi - lo);
  // Two samples per cell, so every road cell is visited.
  const std::size_t points = 8 * (n - 3) + 1;
  const double step = perimeter / static_cast<double>(points - 1);
  std::normal_distribution<double> noise(0.0, spec.noise);
  for (std::size_t i = 0; i < spec.subjects; ++i) {
    const double offset = uniform(rng, 0.0, perimeter);
    const bool reverse = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    const auto start = static_cast<std::int64_t>(std::uniform_int_distribution<std::size_t>(0, spec.frames - 1)(rng));
    std::vector<Point2> pts;
    for (std::size_t t = 0; t < points; ++t) {
      double a = offset + (reverse ? -1.0 : 1.0) * step * static_cast<double>(t);
      a = std::fmod(std::fmod(a, perimeter) + perimeter, perimeter);
      Point2 p = along(loop, a);
      if (spec.noise > 0.0) p = {p.x + noise(rng), p.y + noise(rng)};
      pts.push_back(clamp_unit(p));
    }
    s.trajectories.push_back(make_track(static_cast<std::int64_t>(i + 1), start, pts));
  }
  auto on_road = [&](Point2 p) {
    const auto c = static_cast<std::size_t>(p.x / cell);
    const auto r = static_cast<std::size_t>(p.y / cell);
    const bool row_band = (r == 1 || r == n - 2) && c >= 1 && c <= n - 2;
    const bool col_band = (c == 1 || c == n - 2) && r >= 1 && r <= n - 2;
    return row_band || col_band;
  };
  fill_texture(s.image, rng, [&](Point2 p) { return on_road(p) ? kRoad : kObstacle; });
}

}  // namespace

scene::Scene generate_synth(const SynthSpec & spec)
{
  spec.validate();
  Rng rng(spec.seed);
  scene::Scene s;
  s.name = fmt::format("{}-{}", to_string(spec.kind), spec.seed);
  s.image = scene::Raster(3, spec.image_size, spec.image_size);
  switch (spec.kind) {
    case SynthKind::ConstantVelocity:
      constant_velocity(spec, rng, s);
      break;
    case SynthKind::CrossingGroups:
      crossing_groups(spec, rng, s);
      break;
    case SynthKind::ObstacleField:
      obstacle_field(spec, rng, s);
      break;
    case SynthKind::RingRoad:
      ring_road(spec, rng, s);
      break;
  }
  s.validate();
  return s;
}

}  // namespace trajcast::train
