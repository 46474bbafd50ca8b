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

// Independent reference implementations used only by the tests.

#ifndef PROMOTION_TESTS_ORACLES_HPP_
#define PROMOTION_TESTS_ORACLES_HPP_

#include <cstddef>
#include <random>
#include <vector>

#include "promotion/nn/ops.hpp"
#include "promotion/nn/tensor.hpp"

namespace promotion::oracle {

// Direct summation for grouped 3D cross-correlation, one output element at
// a time, with explicit bounds tests for zero padding.
inline std::vector<double> conv3d(const nn::Tensor& x, const nn::Tensor& w,
                                  const std::vector<double>& bias, const nn::ConvSpec& s) {
  const long C = x.dim(0), D = x.dim(1), H = x.dim(2), W = x.dim(3);
  const long KD = s.kernel[0], KH = s.kernel[1], KW = s.kernel[2];
  const long OD = (D + 2 * long(s.padding[0]) - KD) / long(s.stride[0]) + 1;
  const long OH = (H + 2 * long(s.padding[1]) - KH) / long(s.stride[1]) + 1;
  const long OW = (W + 2 * long(s.padding[2]) - KW) / long(s.stride[2]) + 1;
  const long G = s.groups, CO = s.out_channels, CIG = C / G, COG = CO / G;
  std::vector<double> out;
  for (long co = 0; co < CO; ++co)
    for (long od = 0; od < OD; ++od)
      for (long oh = 0; oh < OH; ++oh)
        for (long ow = 0; ow < OW; ++ow) {
          double acc = bias.empty() ? 0.0 : bias[co];
          const long g = co / COG;
          for (long cig = 0; cig < CIG; ++cig)
            for (long kd = 0; kd < KD; ++kd)
              for (long kh = 0; kh < KH; ++kh)
                for (long kw = 0; kw < KW; ++kw) {
                  const long id = od * long(s.stride[0]) - long(s.padding[0]) + kd;
                  const long ih = oh * long(s.stride[1]) - long(s.padding[1]) + kh;
                  const long iw = ow * long(s.stride[2]) - long(s.padding[2]) + kw;
                  if (id < 0 || id >= D || ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                  const long ci = g * CIG + cig;
                  acc += x[((ci * D + id) * H + ih) * W + iw] *
                         w[(((co * CIG + cig) * KD + kd) * KH + kh) * KW + kw];
                }
          out.push_back(acc);
        }
  return out;
}

inline nn::Tensor random_tensor(const nn::Shape& shape, std::mt19937_64& rng, double lo = -1.0,
                                double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> d(nn::numel(shape));
  for (double& v : d) v = dist(rng);
  return nn::Tensor(shape, std::move(d));
}

// Random values whose magnitude stays at least `gap` away from zero, so
// relu kinks are not crossed by finite-difference probes.
inline nn::Tensor random_away_from_zero(const nn::Shape& shape, std::mt19937_64& rng,
                                        double gap = 0.1) {
  std::uniform_real_distribution<double> mag(gap, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> d(nn::numel(shape));
  for (double& v : d) v = sign(rng) ? mag(rng) : -mag(rng);
  return nn::Tensor(shape, std::move(d));
}

}  // namespace promotion::oracle

#endif  // PROMOTION_TESTS_ORACLES_HPP_
