// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fmstereo/error.hpp"

namespace fmstereo {

/// Dense height x width x channels array, row-major with interleaved channels.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int height, int width, int channels, T fill = T{})
      : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels < 1) {
      throw ShapeError("raster dimensions must be non-negative with >= 1 channel");
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int y, int x, int c = 0) noexcept { return data_[index(y, x, c)]; }
  const T& operator()(int y, int x, int c = 0) const noexcept { return data_[index(y, x, c)]; }

  std::size_t index(int y, int x, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  bool contains(int y, int x) const noexcept {
    return y >= 0 && y < height_ && x >= 0 && x < width_;
  }

  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::vector<T>& values() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  template <typename U>
  bool same_shape(const Raster<U>& o) const noexcept {
    return height_ == o.height() && width_ == o.width() && channels_ == o.channels();
  }
  template <typename U>
  bool same_extent(const Raster<U>& o) const noexcept {
    return height_ == o.height() && width_ == o.width();
  }

  friend bool operator==(const Raster& a, const Raster& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.channels_ == b.channels_ &&
           a.data_ == b.data_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

/// H x W x 3 color in [0, 1].
using Image = Raster<float>;
/// H x W x 1, 1 = valid / known.
using Mask = Raster<std::uint8_t>;
/// H x W x 1, meters.
using DepthMap = Raster<float>;

inline Image make_image(int h, int w, float fill = 0.0f) { return Image(h, w, 3, fill); }
inline Mask make_mask(int h, int w, std::uint8_t fill = 0) { return Mask(h, w, 1, fill); }
inline DepthMap make_depth(int h, int w, float fill = 0.0f) { return DepthMap(h, w, 1, fill); }

template <typename A, typename B>
void require_same_extent(const Raster<A>& a, const Raster<B>& b, const std::string& what) {
  if (!a.same_extent(b)) {
    throw ShapeError(what + ": extent mismatch (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()) + ")");
  }
}

template <typename A, typename B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b, const std::string& what) {
  if (!a.same_shape(b)) {
    throw ShapeError(what + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                     std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                     std::to_string(b.channels()) + ")");
  }
}

/// Copy of columns [x0, x0 + width) of every row.
template <typename T>
Raster<T> crop_columns(const Raster<T>& src, int x0, int width) {
  Raster<T> out(src.height(), width, src.channels());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < src.channels(); ++c) out(y, x, c) = src(y, x0 + x, c);
  return out;
}

/// Copy of the top-left height x width window.
template <typename T>
Raster<T> crop(const Raster<T>& src, int height, int width) {
  Raster<T> out(height, width, src.channels());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < src.channels(); ++c) out(y, x, c) = src(y, x, c);
  return out;
}

}  // namespace fmstereo
