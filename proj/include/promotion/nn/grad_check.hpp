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

#ifndef PROMOTION_NN_GRAD_CHECK_HPP_
#define PROMOTION_NN_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "promotion/error.hpp"
#include "promotion/nn/tensor.hpp"

namespace promotion::nn {

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

// Central-difference check of d f / d x against reverse mode. Returns the
// max relative error over all elements of x.
inline double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                         double step = 1e-5) {
  Tensor leaf = x.detach();
  leaf.set_requires_grad();
  Tensor y = f(leaf);
  if (y.size() != 1) throw ShapeError("grad_check: function output is not scalar");
  y.backward();
  std::vector<double> analytic(leaf.size(), 0.0);
  if (leaf.has_grad()) std::copy(leaf.grad().begin(), leaf.grad().end(), analytic.begin());

  double worst = 0.0;
  auto data = leaf.mutable_data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double saved = data[i];
    data[i] = saved + step;
    const double up = f(leaf).item();
    data[i] = saved - step;
    const double down = f(leaf).item();
    data[i] = saved;
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * step)));
  }
  return worst;
}

struct ParamCheckOptions {
  std::size_t per_tensor = 8;
  std::uint64_t seed = 0;
  double step = 1e-5;
  // Below this analytic magnitude the comparison is absolute: central
  // differences at step 1e-5 carry roughly 1e-12 of roundoff.
  double relative_floor = 1e-7;
  double absolute_tolerance = 1e-10;
  // Probes whose central differences at `step` and `step / 2` disagree by
  // more than kink_relative * |d| + kink_absolute straddle a relu kink
  // and are replaced by another entry of the same tensor.
  double kink_relative = 1e-5;
  double kink_absolute = 1e-11;
};

struct ParamCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;  // over entries below relative_floor
  std::size_t checked = 0;
  std::size_t checked_absolute = 0;
  std::size_t skipped_kinks = 0;
};

// Checks gradients of a scalar closure with respect to leaf parameters,
// probing up to `per_tensor` randomly chosen entries of each tensor (all
// entries when the tensor is smaller).
inline ParamCheckResult grad_check_params(const std::function<Tensor()>& f,
                                          std::vector<Tensor> params,
                                          const ParamCheckOptions& opt = {}) {
  for (auto& p : params) p.zero_grad();
  Tensor y = f();
  if (y.size() != 1) throw ShapeError("grad_check_params: function output is not scalar");
  y.backward();
  std::mt19937_64 rng(opt.seed);
  ParamCheckResult result;
  auto central = [&f](std::span<double> data, std::size_t i, double h) {
    const double saved = data[i];
    data[i] = saved + h;
    const double up = f().item();
    data[i] = saved - h;
    const double down = f().item();
    data[i] = saved;
    return (up - down) / (2.0 * h);
  };
  for (auto& p : params) {
    std::vector<double> analytic(p.size(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
    std::vector<std::size_t> idx(p.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    auto data = p.mutable_data();
    std::size_t done = 0;
    for (std::size_t i : idx) {
      if (done == opt.per_tensor) break;
      const double numeric = central(data, i, opt.step);
      const double half = central(data, i, opt.step / 2.0);
      if (std::abs(numeric - half) > opt.kink_relative * std::abs(numeric) + opt.kink_absolute) {
        ++result.skipped_kinks;
        continue;
      }
      ++done;
      if (std::abs(analytic[i]) < opt.relative_floor) {
        result.max_absolute_error =
            std::max(result.max_absolute_error, std::abs(analytic[i] - numeric));
        ++result.checked_absolute;
      } else {
        result.max_relative_error =
            std::max(result.max_relative_error, relative_error(analytic[i], numeric));
        ++result.checked;
      }
    }
  }
  return result;
}

}  // namespace promotion::nn

#endif  // PROMOTION_NN_GRAD_CHECK_HPP_
