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

#ifndef PROMOTION_FLOW_HPP_
#define PROMOTION_FLOW_HPP_

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "promotion/error.hpp"
#include "promotion/image.hpp"
#include "promotion/media_io.hpp"

namespace promotion {

// Per-pixel displacement in pixels per frame interval; u is horizontal
// (column) motion, v vertical (row) motion.
struct FlowField {
  GrayMap u;
  GrayMap v;

  FlowField() = default;
  FlowField(int rows, int cols) : u(rows, cols), v(rows, cols) {}

  int rows() const { return u.rows(); }
  int cols() const { return u.cols(); }

  GrayMap magnitude() const {
    GrayMap m(rows(), cols());
    for (std::size_t i = 0; i < m.size(); ++i)
      m.values()[i] = std::hypot(u.values()[i], v.values()[i]);
    return m;
  }

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

// Flow-derived per-pixel loss weights in [0,1].
struct AttentionMap {
  GrayMap values;
};

inline constexpr float kFloMagic = 202021.25f;

namespace detail {

inline std::uint32_t load_le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void store_le32(std::uint32_t x, std::string& out) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xFF));
}

}  // namespace detail

// Middlebury .flo: float32 magic, int32 width, int32 height, then
// interleaved float32 (u,v) in row-major order; all little-endian.
inline FlowField parse_flo(const std::string& bytes, const std::string& name = "<memory>") {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12) throw DataError(name + ": truncated .flo header");
  float magic = std::bit_cast<float>(detail::load_le32(p));
  if (magic != kFloMagic) throw DataError(name + ": bad .flo magic");
  auto width = static_cast<std::int32_t>(detail::load_le32(p + 4));
  auto height = static_cast<std::int32_t>(detail::load_le32(p + 8));
  if (width <= 0 || height <= 0)
    throw DataError(name + ": nonpositive .flo dimensions");
  std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - 12 < count * 8) throw DataError(name + ": truncated .flo payload");
  FlowField f(height, width);
  const unsigned char* q = p + 12;
  for (std::size_t i = 0; i < count; ++i, q += 8) {
    f.u.values()[i] = std::bit_cast<float>(detail::load_le32(q));
    f.v.values()[i] = std::bit_cast<float>(detail::load_le32(q + 4));
  }
  return f;
}

inline std::string serialize_flo(const FlowField& f) {
  std::string out;
  out.reserve(12 + f.u.size() * 8);
  detail::store_le32(std::bit_cast<std::uint32_t>(kFloMagic), out);
  detail::store_le32(static_cast<std::uint32_t>(f.cols()), out);
  detail::store_le32(static_cast<std::uint32_t>(f.rows()), out);
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    detail::store_le32(std::bit_cast<std::uint32_t>(static_cast<float>(f.u.values()[i])), out);
    detail::store_le32(std::bit_cast<std::uint32_t>(static_cast<float>(f.v.values()[i])), out);
  }
  return out;
}

inline FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_flo(bytes, path.string());
}

inline void write_flo(const std::filesystem::path& path, const FlowField& f) {
  write_text_file(path, serialize_flo(f));
}

namespace detail {

// Standard Middlebury color wheel: 15 R->Y, 6 Y->G, 4 G->C, 11 C->B,
// 13 B->M, 6 M->R; entries in 0..255 (integer ramps).
inline const std::vector<std::array<double, 3>>& color_wheel() {
  static const std::vector<std::array<double, 3>> wheel = [] {
    constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
    std::vector<std::array<double, 3>> w;
    for (int i = 0; i < RY; ++i) w.push_back({255, double(255 * i / RY), 0});
    for (int i = 0; i < YG; ++i) w.push_back({double(255 - 255 * i / YG), 255, 0});
    for (int i = 0; i < GC; ++i) w.push_back({0, 255, double(255 * i / GC)});
    for (int i = 0; i < CB; ++i) w.push_back({0, double(255 - 255 * i / CB), 255});
    for (int i = 0; i < BM; ++i) w.push_back({double(255 * i / BM), 0, 255});
    for (int i = 0; i < MR; ++i) w.push_back({255, 0, double(255 - 255 * i / MR)});
    return w;
  }();
  return wheel;
}

// fx, fy already divided by the normalizing radius.
inline std::array<double, 3> wheel_color(double fx, double fy) {
  const auto& wheel = color_wheel();
  const int ncols = static_cast<int>(wheel.size());
  double rad = std::sqrt(fx * fx + fy * fy);
  double a = std::atan2(-fy, -fx) / std::numbers::pi;
  double fk = (a + 1.0) / 2.0 * (ncols - 1);
  int k0 = static_cast<int>(fk);
  int k1 = (k0 + 1) % ncols;
  double f = fk - k0;
  std::array<double, 3> out{};
  for (int b = 0; b < 3; ++b) {
    double col0 = wheel[k0][b] / 255.0;
    double col1 = wheel[k1][b] / 255.0;
    double col = (1.0 - f) * col0 + f * col1;
    if (rad <= 1.0) col = 1.0 - rad * (1.0 - col);
    else col *= 0.75;
    out[b] = col;
  }
  return out;
}

}  // namespace detail

// Color-codes flow with the Middlebury wheel, saturation scaled by the
// field's own maximum magnitude (1 if the field is all zero).
inline RgbImage flow_to_color(const FlowField& flow) {
  double max_rad = flow.magnitude().max();
  if (!(max_rad > 0.0)) max_rad = 1.0;
  RgbImage img(flow.rows(), flow.cols());
  for (int r = 0; r < flow.rows(); ++r) {
    for (int c = 0; c < flow.cols(); ++c) {
      auto col = detail::wheel_color(flow.u(r, c) / max_rad, flow.v(r, c) / max_rad);
      for (int b = 0; b < 3; ++b) img(b, r, c) = col[b];
    }
  }
  return img;
}

// w_att: flow color image -> luma -> inverted (white means "no motion") ->
// min-max to [0,1]. Constant maps, including zero flow, give all zeros.
inline AttentionMap attention_map(const FlowField& flow) {
  GrayMap g = to_gray(flow_to_color(flow));
  for (double& v : g.values()) v = 1.0 - v;
  return {normalize_min_max(std::move(g))};
}

// Block-matching flow from `a` to `b`: each block of `a` is matched against
// displaced blocks of `b` (entirely inside the frame) within +-radius, by
// sum of absolute differences. Ties prefer the smaller displacement, then
// row-major search order. The block's vector is broadcast to its pixels.
inline FlowField estimate_flow_coarse(const GrayMap& a, const GrayMap& b, int block,
                                      int radius) {
  if (!a.same_shape(b)) throw ShapeError("estimate_flow_coarse: dimension mismatch");
  if (block < 4) throw ShapeError("estimate_flow_coarse: block must be >= 4");
  if (radius < 1) throw ShapeError("estimate_flow_coarse: radius must be >= 1");
  const int rows = a.rows(), cols = a.cols();
  FlowField flow(rows, cols);
  for (int by = 0; by < rows; by += block) {
    const int bh = std::min(block, rows - by);
    for (int bx = 0; bx < cols; bx += block) {
      const int bw = std::min(block, cols - bx);
      double best_sad = std::numeric_limits<double>::infinity();
      int best_mag = std::numeric_limits<int>::max();
      int best_dx = 0, best_dy = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        if (by + dy < 0 || by + dy + bh > rows) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          if (bx + dx < 0 || bx + dx + bw > cols) continue;
          double sad = 0.0;
          for (int y = by; y < by + bh; ++y)
            for (int x = bx; x < bx + bw; ++x) sad += std::abs(a(y, x) - b(y + dy, x + dx));
          const int mag = dx * dx + dy * dy;
          if (sad < best_sad || (sad == best_sad && mag < best_mag)) {
            best_sad = sad;
            best_mag = mag;
            best_dx = dx;
            best_dy = dy;
          }
        }
      }
      for (int y = by; y < by + bh; ++y) {
        for (int x = bx; x < bx + bw; ++x) {
          flow.u(y, x) = best_dx;
          flow.v(y, x) = best_dy;
        }
      }
    }
  }
  return flow;
}

}  // namespace promotion

#endif  // PROMOTION_FLOW_HPP_
