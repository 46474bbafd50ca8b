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

#ifndef PROMOTION_SYNTHESIS_HPP_
#define PROMOTION_SYNTHESIS_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "promotion/error.hpp"
#include "promotion/image.hpp"
#include "promotion/media_io.hpp"

namespace promotion {

// Power-law camera response g(x) = x^(1/gamma).
struct CrfParams {
  double gamma = 2.2;
};

struct SynthSpec {
  int virtual_rate_multiplier = 8;  // virtual frames per real frame interval
  int average_count = 8;            // virtual frames averaged per output frame
};

namespace detail {

inline void check_gamma(const CrfParams& p) {
  if (!(p.gamma > 0.0)) throw DataError("gamma must be positive");
}

}  // namespace detail

// x^(1/gamma) with the rounding residual of 1/gamma folded back in, so
// crf_apply(crf_invert(x)) lands within one ulp of x.
inline double crf_apply(double x, const CrfParams& p) {
  const double a = 1.0 / p.gamma;
  if (!(x > 0.0)) return std::pow(x, a);
  const double b = std::fma(-a, p.gamma, 1.0) / p.gamma;
  const double y = std::pow(x, a);
  return y + y * (b * std::log(x));
}
inline double crf_invert(double x, const CrfParams& p) { return std::pow(x, p.gamma); }

inline RgbImage crf_apply(RgbImage img, const CrfParams& p) {
  detail::check_gamma(p);
  for (double& v : img.values()) v = crf_apply(v, p);
  return img;
}

inline RgbImage crf_invert(RgbImage img, const CrfParams& p) {
  detail::check_gamma(p);
  for (double& v : img.values()) v = crf_invert(v, p);
  return img;
}

namespace detail {

// Signal-space frames at fractions k/m_up between two signal-space frames.
inline std::vector<RgbImage> blend_signal(const RgbImage& a, const RgbImage& b, int m_up) {
  std::vector<RgbImage> out;
  out.reserve(m_up);
  for (int k = 0; k < m_up; ++k) {
    const double t = static_cast<double>(k) / m_up;
    RgbImage f(a.rows(), a.cols());
    for (std::size_t i = 0; i < f.values().size(); ++i) {
      const double x = a.values()[i];
      const double y = b.values()[i];
      f.values()[i] = k == 0 ? x : (1.0 - t) * x + t * y;
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace detail

// Linear stand-in for a learned interpolator: m_up display-space frames at
// k/m_up, blended in signal space and re-encoded through g.
inline std::vector<RgbImage> interpolate_virtual(const RgbImage& a, const RgbImage& b,
                                                 int m_up, const CrfParams& p = {}) {
  if (!a.same_shape(b)) throw ShapeError("interpolate_virtual: dimension mismatch");
  if (m_up < 1) throw DataError("interpolate_virtual: m_up must be >= 1");
  auto frames = detail::blend_signal(crf_invert(a, p), crf_invert(b, p), m_up);
  for (auto& f : frames) f = crf_apply(std::move(f), p);
  return frames;
}

// Signal-space virtual frames for the whole sequence: (n-1)*m_up + 1 frames,
// real frame j sitting at index j*m_up.
inline std::vector<RgbImage> virtual_signal_frames(const FrameSequence& sharp, int m_up,
                                                   const CrfParams& p) {
  std::vector<RgbImage> signal;
  signal.reserve(sharp.frames.size());
  for (const auto& f : sharp.frames) signal.push_back(crf_invert(f, p));
  std::vector<RgbImage> out;
  for (std::size_t j = 0; j + 1 < signal.size(); ++j) {
    auto seg = detail::blend_signal(signal[j], signal[j + 1], m_up);
    for (auto& f : seg) out.push_back(std::move(f));
  }
  out.push_back(signal.back());
  return out;
}

// B = g(mean of m signal-space virtual frames). The averaging window is
// centered on each real frame (indices c - m/2 .. c - m/2 + m - 1) and
// clamped at the sequence ends, so the output has one frame per input frame.
inline FrameSequence synthesize_blur(const FrameSequence& sharp, const SynthSpec& spec,
                                     const CrfParams& p = {}) {
  detail::check_gamma(p);
  if (sharp.size() < 2) throw DataError("synthesize_blur: need at least 2 sharp frames");
  if (spec.virtual_rate_multiplier < 1) throw DataError("synthesize_blur: m_up must be >= 1");
  for (const auto& f : sharp.frames)
    if (!f.same_shape(sharp.frames.front()))
      throw ShapeError("synthesize_blur: frames differ in size");
  const int m_up = spec.virtual_rate_multiplier;
  const int m = spec.average_count;
  auto virt = virtual_signal_frames(sharp, m_up, p);
  const int total = static_cast<int>(virt.size());
  if (m < 1 || m > total)
    throw DataError("synthesize_blur: average count " + std::to_string(m) +
                    " exceeds the " + std::to_string(total) + " available virtual frames");

  FrameSequence out;
  out.center_index = sharp.center_index;
  for (int j = 0; j < sharp.size(); ++j) {
    const int start = j * m_up - m / 2;
    RgbImage acc(sharp.rows(), sharp.cols());
    for (int k = 0; k < m; ++k) {
      const auto& v = virt[std::clamp(start + k, 0, total - 1)];
      for (std::size_t i = 0; i < acc.values().size(); ++i) acc.values()[i] += v.values()[i];
    }
    for (double& x : acc.values()) x = std::clamp(crf_apply(x / m, p), 0.0, 1.0);
    out.frames.push_back(std::move(acc));
  }
  return out;
}

}  // namespace promotion

#endif  // PROMOTION_SYNTHESIS_HPP_
