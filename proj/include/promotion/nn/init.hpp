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

#ifndef PROMOTION_NN_INIT_HPP_
#define PROMOTION_NN_INIT_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "promotion/nn/tensor.hpp"

namespace promotion::nn {

// Portable uniform draw in [lo, hi) from the top 53 bits of a 64-bit word.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

// Kaiming-uniform: U(-b, b) with b = sqrt(6 / fan_in).
inline Tensor kaiming_uniform(const Shape& shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::vector<double> d(numel(shape));
  for (double& v : d) v = uniform(rng, -bound, bound);
  return Tensor(shape, std::move(d), true);
}

inline Tensor random_uniform(const Shape& shape, double lo, double hi, std::mt19937_64& rng) {
  std::vector<double> d(numel(shape));
  for (double& v : d) v = uniform(rng, lo, hi);
  return Tensor(shape, std::move(d));
}

}  // namespace promotion::nn

#endif  // PROMOTION_NN_INIT_HPP_
