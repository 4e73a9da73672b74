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

#ifndef TRAJCAST__SCENE__RASTER_HPP_
#define TRAJCAST__SCENE__RASTER_HPP_

#include "trajcast/ndgrad/tensor.hpp"

#include <cstddef>
#include <filesystem>
#include <vector>

namespace trajcast::scene
{

/// Planar (channel-major) image with values in [0, 1].
class Raster
{
public:
  Raster() = default;
  Raster(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  bool empty() const noexcept { return data_.empty(); }

  double & operator()(std::size_t c, std::size_t y, std::size_t x) { return data_[(c * height_ + y) * width_ + x]; }
  double operator()(std::size_t c, std::size_t y, std::size_t x) const
  {
    return data_[(c * height_ + y) * width_ + x];
  }

  const std::vector<double> & data() const noexcept { return data_; }
  std::vector<double> & data() noexcept { return data_; }

  /// Shape [C, H, W].
  ndgrad::Tensor to_tensor() const;

  friend bool operator==(const Raster &, const Raster &) = default;

private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Bilinear resampling with half-pixel centers and edge clamping.
Raster resize(const Raster & src, std::size_t out_height, std::size_t out_width);
inline Raster resize(const Raster & src, std::size_t side) { return resize(src, side, side); }

/// 8-bit RGB PNG. Grayscale and alpha inputs are converted to RGB.
Raster read_png(const std::filesystem::path & path);
void write_png(const std::filesystem::path & path, const Raster & raster);

}  // namespace trajcast::scene

#endif  // TRAJCAST__SCENE__RASTER_HPP_
