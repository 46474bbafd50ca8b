/* Copyright 2026 The Promotion Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PROMOTION_IMAGE_HPP_
#define PROMOTION_IMAGE_HPP_

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "promotion/error.hpp"

namespace promotion {

// Single-channel H x W map of doubles, row-major.
class GrayMap {
 public:
  GrayMap() = default;
  GrayMap(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        values_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw ShapeError("GrayMap: negative dimension");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int r, int c) {
    return values_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    return values_[static_cast<std::size_t>(r) * cols_ + c];
  }
  // Clamped access (replicate padding).
  double at_clamped(int r, int c) const {
    r = std::clamp(r, 0, rows_ - 1);
    c = std::clamp(c, 0, cols_ - 1);
    return (*this)(r, c);
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double max() const {
    double m = values_.empty() ? 0.0 : values_.front();
    for (double v : values_) m = std::max(m, v);
    return m;
  }

  bool same_shape(const GrayMap& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  friend bool operator==(const GrayMap&, const GrayMap&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

// Planar (channel-major) RGB image, values nominally in [0,1].
class RgbImage {
 public:
  static constexpr int kChannels = 3;

  RgbImage() = default;
  RgbImage(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        values_(static_cast<std::size_t>(kChannels) * rows * cols, fill) {
    if (rows < 0 || cols < 0) throw ShapeError("RgbImage: negative dimension");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(rows_) * cols_;
  }

  double& operator()(int ch, int r, int c) {
    return values_[ch * plane_size() + static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int ch, int r, int c) const {
    return values_[ch * plane_size() + static_cast<std::size_t>(r) * cols_ + c];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  GrayMap channel(int ch) const {
    GrayMap out(rows_, cols_);
    std::copy_n(values_.begin() + ch * plane_size(), plane_size(),
                out.values().begin());
    return out;
  }

  bool same_shape(const RgbImage& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

// ITU-R BT.601 luma, evaluated in thousandths so that white maps to exactly 1.
inline double luma(double r, double g, double b) {
  return (299.0 * r + 587.0 * g + 114.0 * b) / 1000.0;
}

inline GrayMap to_gray(const RgbImage& frame) {
  GrayMap g(frame.rows(), frame.cols());
  for (int r = 0; r < frame.rows(); ++r) {
    for (int c = 0; c < frame.cols(); ++c) {
      g(r, c) = std::clamp(luma(frame(0, r, c), frame(1, r, c), frame(2, r, c)),
                           0.0, 1.0);
    }
  }
  return g;
}

// Divides by the maximum; a map whose maximum is not positive becomes all-zero.
inline GrayMap normalize_by_max(GrayMap m) {
  double peak = m.max();
  if (!(peak > 0.0)) {
    std::fill(m.values().begin(), m.values().end(), 0.0);
    return m;
  }
  for (double& v : m.values()) v /= peak;
  return m;
}

// Min-max rescale to [0,1]; a constant map becomes all-zero.
inline GrayMap normalize_min_max(GrayMap m) {
  if (m.size() == 0) return m;
  auto [lo_it, hi_it] = std::minmax_element(m.values().begin(), m.values().end());
  double lo = *lo_it;
  double range = *hi_it - lo;
  if (!(range > 0.0)) {
    std::fill(m.values().begin(), m.values().end(), 0.0);
    return m;
  }
  for (double& v : m.values()) v = (v - lo) / range;
  return m;
}

}  // namespace promotion

#endif  // PROMOTION_IMAGE_HPP_
