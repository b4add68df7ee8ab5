#include "adgen/raster.hpp"

#include "adgen/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adgen {

namespace {

void check_shape(int width, int height, int channels) {
  if (width < 0 || height < 0)
    throw InputError("raster dimensions must be non-negative");
  if (channels != 1 && channels != 3 && channels != 4)
    throw InputError("raster channel count must be 1, 3 or 4, got " + std::to_string(channels));
}

std::uint8_t clamp_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

struct Tap {
  int i0, i1;
  double w1;
};

// Pixel-center aligned source coordinate for each destination index.
std::vector<Tap> make_taps(int src_len, int dst_len) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst_len));
  const double ratio = static_cast<double>(src_len) / dst_len;
  for (int i = 0; i < dst_len; ++i) {
    double s = (i + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src_len - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, src_len - 1);
    taps[i] = {i0, i1, s - i0};
  }
  return taps;
}

} // namespace

Raster::Raster(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  check_shape(width, height, channels);
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Raster::Raster(int width, int height, int channels, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), channels_(channels), data_(std::move(pixels)) {
  check_shape(width, height, channels);
  if (data_.size() != static_cast<std::size_t>(width) * height * channels)
    throw InputError("pixel buffer size does not match raster dimensions");
}

Raster to_rgba(const Raster &src) {
  if (src.channels() == 4)
    return src;
  Raster out(src.width(), src.height(), 4, 255);
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) {
      const auto *p = src.pixel(x, y);
      auto *q = out.pixel(x, y);
      if (src.channels() == 1) {
        q[0] = q[1] = q[2] = p[0];
      } else {
        q[0] = p[0];
        q[1] = p[1];
        q[2] = p[2];
      }
    }
  return out;
}

Raster to_rgb(const Raster &src) {
  if (src.channels() == 3)
    return src;
  Raster out(src.width(), src.height(), 3);
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) {
      const auto *p = src.pixel(x, y);
      auto *q = out.pixel(x, y);
      if (src.channels() == 1) {
        q[0] = q[1] = q[2] = p[0];
      } else {
        q[0] = p[0];
        q[1] = p[1];
        q[2] = p[2];
      }
    }
  return out;
}

Plane luminance(const Raster &src) {
  Plane out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) {
      const auto *p = src.pixel(x, y);
      if (src.channels() == 1)
        out(x, y) = p[0];
      else
        out(x, y) = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
  return out;
}

Raster resize_bilinear(const Raster &src, int width, int height) {
  if (width <= 0 || height <= 0)
    throw InputError("resize target must be positive");
  if (src.empty())
    throw InputError("cannot resize an empty raster");
  if (width == src.width() && height == src.height())
    return src;

  const auto xs = make_taps(src.width(), width);
  const auto ys = make_taps(src.height(), height);
  const int ch = src.channels();
  const bool premultiply = ch == 4;
  Raster out(width, height, ch);

  for (int y = 0; y < height; ++y) {
    const Tap &ty = ys[y];
    for (int x = 0; x < width; ++x) {
      const Tap &tx = xs[x];
      const std::uint8_t *p00 = src.pixel(tx.i0, ty.i0);
      const std::uint8_t *p10 = src.pixel(tx.i1, ty.i0);
      const std::uint8_t *p01 = src.pixel(tx.i0, ty.i1);
      const std::uint8_t *p11 = src.pixel(tx.i1, ty.i1);
      const double w00 = (1 - tx.w1) * (1 - ty.w1);
      const double w10 = tx.w1 * (1 - ty.w1);
      const double w01 = (1 - tx.w1) * ty.w1;
      const double w11 = tx.w1 * ty.w1;
      std::uint8_t *q = out.pixel(x, y);
      if (!premultiply) {
        for (int c = 0; c < ch; ++c)
          q[c] = clamp_byte(w00 * p00[c] + w10 * p10[c] + w01 * p01[c] + w11 * p11[c]);
        continue;
      }
      const double a = w00 * p00[3] + w10 * p10[3] + w01 * p01[3] + w11 * p11[3];
      q[3] = clamp_byte(a);
      for (int c = 0; c < 3; ++c) {
        const double pm = w00 * p00[c] * p00[3] + w10 * p10[c] * p10[3] +
                          w01 * p01[c] * p01[3] + w11 * p11[c] * p11[3];
        q[c] = a > 0 ? clamp_byte(pm / a) : 0;
      }
    }
  }
  return out;
}

Raster resize_nearest(const Raster &src, int width, int height) {
  if (width <= 0 || height <= 0)
    throw InputError("resize target must be positive");
  if (src.empty())
    throw InputError("cannot resize an empty raster");
  Raster out(width, height, src.channels());
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(
        src.height() - 1,
        static_cast<int>(std::floor((y + 0.5) * src.height() / static_cast<double>(height))));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(
          src.width() - 1,
          static_cast<int>(std::floor((x + 0.5) * src.width() / static_cast<double>(width))));
      std::copy_n(src.pixel(sx, sy), src.channels(), out.pixel(x, y));
    }
  }
  return out;
}

Raster crop(const Raster &src, const Rect &rect) {
  if (rect.empty() || !rect.inside(src.width(), src.height()))
    throw InputError("crop rectangle is empty or outside the raster");
  Raster out(rect.width, rect.height, src.channels());
  const auto row_bytes = static_cast<std::size_t>(rect.width) * src.channels();
  for (int y = 0; y < rect.height; ++y)
    std::copy_n(src.pixel(rect.x, rect.y + y), row_bytes, out.pixel(0, y));
  return out;
}

std::size_t count_nonzero(const Raster &mask) {
  std::size_t n = 0;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      n += mask.at(x, y, 0) != 0;
  return n;
}

} // namespace adgen
