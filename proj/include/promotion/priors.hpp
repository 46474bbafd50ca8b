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

#ifndef PROMOTION_PRIORS_HPP_
#define PROMOTION_PRIORS_HPP_

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "promotion/error.hpp"
#include "promotion/flow.hpp"
#include "promotion/image.hpp"
#include "promotion/media_io.hpp"
#include "promotion/numeric.hpp"

namespace promotion {

inline constexpr int kPriorDepth = 5;
inline constexpr int kPriorGroups = 3;

// Three prior groups over a 5-frame clip, channel order (contrast, gradient, motion).
struct PriorStack {
  std::array<GrayMap, kPriorDepth> contrast;
  std::array<GrayMap, kPriorDepth> gradient;
  std::array<GrayMap, kPriorDepth> motion;

  int rows() const { return contrast[0].rows(); }
  int cols() const { return contrast[0].cols(); }

  const std::array<GrayMap, kPriorDepth>& group(int g) const {
    return g == 0 ? contrast : (g == 1 ? gradient : motion);
  }

  // Row-major (group, depth, row, col) layout: shape 3 x 5 x H x W.
  std::vector<double> packed() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(kPriorGroups) * kPriorDepth * rows() * cols());
    for (int g = 0; g < kPriorGroups; ++g)
      for (const GrayMap& m : group(g))
        out.insert(out.end(), m.values().begin(), m.values().end());
    return out;
  }
};

struct BlurReasoningVector {
  std::vector<double> weights;
};

namespace detail {

inline void require_min_size(const GrayMap& g, int min_side, const char* what) {
  if (g.rows() < min_side || g.cols() < min_side)
    throw ShapeError(std::string(what) + ": map must be at least " +
                     std::to_string(min_side) + "x" + std::to_string(min_side));
}

}  // namespace detail

// Mean squared difference to the 4-neighborhood, normalized by the map's
// maximum. Off-edge neighbors replicate the border pixel.
inline GrayMap contrast_map(const GrayMap& gray) {
  detail::require_min_size(gray, 2, "contrast_map");
  GrayMap out(gray.rows(), gray.cols());
  for (int r = 0; r < gray.rows(); ++r) {
    for (int c = 0; c < gray.cols(); ++c) {
      const double g = gray(r, c);
      const double n = g - gray.at_clamped(r - 1, c);
      const double s = g - gray.at_clamped(r + 1, c);
      const double w = g - gray.at_clamped(r, c - 1);
      const double e = g - gray.at_clamped(r, c + 1);
      out(r, c) = 0.25 * (n * n + s * s + w * w + e * e);
    }
  }
  return normalize_by_max(std::move(out));
}

// Signed forward-difference sum, stored as |raw| / max|raw|.
inline GrayMap gradient_map(const GrayMap& gray) {
  detail::require_min_size(gray, 2, "gradient_map");
  GrayMap out(gray.rows(), gray.cols());
  for (int r = 0; r < gray.rows(); ++r) {
    for (int c = 0; c < gray.cols(); ++c) {
      const double g = gray(r, c);
      const double raw = (g - gray.at_clamped(r + 1, c)) + (g - gray.at_clamped(r, c + 1));
      out(r, c) = std::abs(raw);
    }
  }
  return normalize_by_max(std::move(out));
}

// Slices i != center: |gray(center) - gray(i)| self-normalized; the center
// slice is the flow magnitude self-normalized.
inline std::array<GrayMap, kPriorDepth> motion_group(const FrameSequence& clip,
                                                     const FlowField& center_flow) {
  if (clip.size() != kPriorDepth)
    throw ShapeError("motion_group: clip must have 5 frames");
  if (center_flow.rows() != clip.rows() || center_flow.cols() != clip.cols())
    throw ShapeError("motion_group: flow dimensions do not match frames");
  const GrayMap center = to_gray(clip.center());
  std::array<GrayMap, kPriorDepth> out;
  for (int i = 0; i < kPriorDepth; ++i) {
    if (i == clip.center_index) {
      out[i] = normalize_by_max(center_flow.magnitude());
      continue;
    }
    GrayMap diff = to_gray(clip[i]);
    for (std::size_t k = 0; k < diff.size(); ++k)
      diff.values()[k] = std::abs(center.values()[k] - diff.values()[k]);
    out[i] = normalize_by_max(std::move(diff));
  }
  return out;
}

// 3x3 Laplacian [[0,1,0],[1,-4,1],[0,1,0]] with replicate padding.
inline GrayMap laplacian(const GrayMap& gray) {
  GrayMap out(gray.rows(), gray.cols());
  for (int r = 0; r < gray.rows(); ++r)
    for (int c = 0; c < gray.cols(); ++c)
      out(r, c) = gray.at_clamped(r - 1, c) + gray.at_clamped(r + 1, c) +
                  gray.at_clamped(r, c - 1) + gray.at_clamped(r, c + 1) - 4.0 * gray(r, c);
  return out;
}

// Population variance of the Laplacian response; lower means blurrier.
inline double laplacian_blur_score(const GrayMap& gray) {
  detail::require_min_size(gray, 3, "laplacian_blur_score");
  const GrayMap lap = laplacian(gray);
  const double n = static_cast<double>(lap.size());
  double mean = 0.0;
  for (double v : lap.values()) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : lap.values()) var += (v - mean) * (v - mean);
  return var / n;
}

inline constexpr double kBlurVarianceFloor = 1e-12;

// weights_i = n * inv_i / sum(inv), inv_i = 1 / max(var_i, floor).
inline BlurReasoningVector blur_reasoning_from_variances(std::span<const double> variances) {
  if (variances.empty()) throw ShapeError("blur_reasoning: empty variance list");
  std::vector<double> inv(variances.size());
  for (std::size_t i = 0; i < variances.size(); ++i)
    inv[i] = 1.0 / std::max(variances[i], kBlurVarianceFloor);
  const double total = compensated_sum(inv);
  const double n = static_cast<double>(variances.size());
  BlurReasoningVector v;
  v.weights.resize(inv.size());
  for (std::size_t i = 0; i < inv.size(); ++i) v.weights[i] = n * inv[i] / total;
  return v;
}

inline std::vector<double> blur_variances(const FrameSequence& clip) {
  std::vector<double> vars;
  vars.reserve(clip.frames.size());
  for (const auto& f : clip.frames) vars.push_back(laplacian_blur_score(to_gray(f)));
  return vars;
}

inline BlurReasoningVector blur_reasoning_vector(const FrameSequence& clip) {
  if (clip.size() != kPriorDepth)
    throw ShapeError("blur_reasoning_vector: clip must have 5 frames");
  auto vars = blur_variances(clip);
  return blur_reasoning_from_variances(vars);
}

inline PriorStack compute_priors(const FrameSequence& clip, const FlowField& center_flow) {
  if (clip.size() != kPriorDepth) throw ShapeError("compute_priors: clip must have 5 frames");
  PriorStack stack;
  for (int i = 0; i < kPriorDepth; ++i) {
    GrayMap g = to_gray(clip[i]);
    stack.contrast[i] = contrast_map(g);
    stack.gradient[i] = gradient_map(g);
  }
  stack.motion = motion_group(clip, center_flow);
  return stack;
}

// Flow of the center frame towards its successor, by block matching.
inline FlowField center_flow_estimate(const FrameSequence& clip, int block = 16,
                                      int radius = 8) {
  const int next = std::min(clip.center_index + 1, clip.size() - 1);
  return estimate_flow_coarse(to_gray(clip.center()), to_gray(clip[next]), block, radius);
}

}  // namespace promotion

#endif  // PROMOTION_PRIORS_HPP_
