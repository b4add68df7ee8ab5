#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace adgen {

/// Axis-aligned integer rectangle in pixel coordinates (x right, y down).
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  int right() const { return x + width; }
  int bottom() const { return y + height; }
  bool empty() const { return width <= 0 || height <= 0; }
  bool contains(int px, int py) const { return px >= x && py >= y && px < right() && py < bottom(); }
  bool inside(int canvas_w, int canvas_h) const {
    return x >= 0 && y >= 0 && right() <= canvas_w && bottom() <= canvas_h;
  }
  friend bool operator==(const Rect &, const Rect &) = default;
};

/// Interleaved 8-bit image with 1 (mask / gray), 3 (RGB) or 4 (RGBA, straight alpha) channels.
class Raster {
public:
  Raster() = default;
  Raster(int width, int height, int channels, std::uint8_t fill = 0);
  Raster(int width, int height, int channels, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return width_ == 0 || height_ == 0; }
  bool has_alpha() const { return channels_ == 4; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  std::uint8_t &at(int x, int y, int c) { return data_[index(x, y) + c]; }
  std::uint8_t at(int x, int y, int c) const { return data_[index(x, y) + c]; }
  std::uint8_t *pixel(int x, int y) { return data_.data() + index(x, y); }
  const std::uint8_t *pixel(int x, int y) const { return data_.data() + index(x, y); }

  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> bytes() { return data_; }

  friend bool operator==(const Raster &, const Raster &) = default;

private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel floating-point image, row-major.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}
  double &operator()(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double operator()(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
};

Raster to_rgba(const Raster &src);
Raster to_rgb(const Raster &src);

/// ITU-R BT.601 luma in [0, 255]; alpha is ignored.
Plane luminance(const Raster &src);

/// Bilinear resampling with pixel-center alignment. RGBA is interpolated premultiplied.
Raster resize_bilinear(const Raster &src, int width, int height);
Raster resize_nearest(const Raster &src, int width, int height);

/// Throws InputError when the rectangle is empty or leaves the raster.
Raster crop(const Raster &src, const Rect &rect);

/// Count of pixels whose first channel is nonzero.
std::size_t count_nonzero(const Raster &mask);

} // namespace adgen
