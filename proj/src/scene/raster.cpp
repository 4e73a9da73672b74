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

#include "trajcast/scene/raster.hpp"

#include "trajcast/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace trajcast::scene
{

Raster::Raster(std::size_t channels, std::size_t height, std::size_t width, double fill)
: channels_(channels), height_(height), width_(width), data_(channels * height * width, fill)
{
}

ndgrad::Tensor Raster::to_tensor() const
{
  return ndgrad::Tensor(ndgrad::Shape{channels_, height_, width_}, data_);
}

Raster resize(const Raster & src, std::size_t out_height, std::size_t out_width)
{
  if (out_height == 0 || out_width == 0) throw ContractError("resize: target size must be positive");
  if (src.empty()) throw ContractError("resize: empty source raster");
  Raster out(src.channels(), out_height, out_width);
  const double sy = static_cast<double>(src.height()) / static_cast<double>(out_height);
  const double sx = static_cast<double>(src.width()) / static_cast<double>(out_width);
  const double max_y = static_cast<double>(src.height() - 1);
  const double max_x = static_cast<double>(src.width() - 1);

  for (std::size_t y = 0; y < out_height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(std::floor(fy));
    const std::size_t y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(std::floor(fx));
      const std::size_t x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < src.channels(); ++c) {
        const double top = (1.0 - wx) * src(c, y0, x0) + wx * src(c, y0, x1);
        const double bottom = (1.0 - wx) * src(c, y1, x0) + wx * src(c, y1, x1);
        out(c, y, x) = (1.0 - wy) * top + wy * bottom;
      }
    }
  }
  return out;
}

Raster read_png(const std::filesystem::path & path)
{
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DataError("cannot decode PNG '" + path.string() + "': " + msg);
  }
  Raster out(3, image.height, image.width);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        out(c, y, x) = buffer[(y * image.width + x) * 3 + c] / 255.0;
      }
    }
  }
  return out;
}

void write_png(const std::filesystem::path & path, const Raster & raster)
{
  if (raster.channels() != 3 && raster.channels() != 1) {
    throw ContractError("write_png: expected 1 or 3 channels");
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width());
  image.height = static_cast<png_uint_32>(raster.height());
  image.format = raster.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  const std::size_t nc = raster.channels();
  for (std::size_t y = 0; y < raster.height(); ++y) {
    for (std::size_t x = 0; x < raster.width(); ++x) {
      for (std::size_t c = 0; c < nc; ++c) {
        const double v = std::clamp(raster(c, y, x), 0.0, 1.0);
        buffer[(y * raster.width() + x) * nc + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw DataError("cannot write PNG '" + path.string() + "': " + image.message);
  }
}

}  // namespace trajcast::scene
