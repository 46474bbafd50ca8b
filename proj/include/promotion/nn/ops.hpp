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

#ifndef PROMOTION_NN_OPS_HPP_
#define PROMOTION_NN_OPS_HPP_

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "promotion/error.hpp"
#include "promotion/numeric.hpp"
#include "promotion/nn/tensor.hpp"

namespace promotion::nn {

// Convolution hyperparameters. Axes are (depth, height, width); 2D
// convolutions use depth kernel 1, stride 1, padding 0.
struct ConvSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::array<std::size_t, 3> kernel{1, 1, 1};
  std::array<std::size_t, 3> stride{1, 1, 1};
  std::array<std::size_t, 3> padding{0, 0, 0};
  std::size_t groups = 1;

  static ConvSpec conv2d(std::size_t in, std::size_t out, std::size_t k,
                         std::size_t stride = 1, std::size_t pad = 0,
                         std::size_t groups = 1) {
    return {in, out, {1, k, k}, {1, stride, stride}, {0, pad, pad}, groups};
  }

  void validate() const {
    if (groups == 0 || in_channels % groups != 0 || out_channels % groups != 0)
      throw ShapeError("ConvSpec: channels " + std::to_string(in_channels) + "->" +
                       std::to_string(out_channels) + " not divisible by groups " +
                       std::to_string(groups));
    for (int a = 0; a < 3; ++a)
      if (kernel[a] == 0 || stride[a] == 0) throw ShapeError("ConvSpec: zero kernel or stride");
  }

  Shape weight_shape_3d() const {
    return {out_channels, in_channels / groups, kernel[0], kernel[1], kernel[2]};
  }
  Shape weight_shape_2d() const {
    return {out_channels, in_channels / groups, kernel[1], kernel[2]};
  }

  std::size_t out_extent(int axis, std::size_t in) const {
    const std::size_t padded = in + 2 * padding[axis];
    if (padded < kernel[axis])
      throw ShapeError("conv: kernel larger than padded input on axis " + std::to_string(axis));
    return (padded - kernel[axis]) / stride[axis] + 1;
  }
};

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

struct ConvGeometry {
  ConvSpec spec;
  std::size_t D, H, W;     // input extents
  std::size_t OD, OH, OW;  // output extents
  std::size_t cin_g, cout_g;
  std::size_t patch() const { return cin_g * spec.kernel[0] * spec.kernel[1] * spec.kernel[2]; }
  std::size_t points() const { return OD * OH * OW; }
};

inline ConvGeometry make_geometry(const Shape& x, const ConvSpec& spec) {
  spec.validate();
  if (x.size() != 4) throw ShapeError("conv3d: expected input (C,D,H,W), got " + to_string(x));
  if (x[0] != spec.in_channels)
    throw ShapeError("conv: input has " + std::to_string(x[0]) + " channels, spec expects " +
                     std::to_string(spec.in_channels));
  ConvGeometry g{spec, x[1], x[2], x[3], 0, 0, 0, spec.in_channels / spec.groups,
                 spec.out_channels / spec.groups};
  g.OD = spec.out_extent(0, g.D);
  g.OH = spec.out_extent(1, g.H);
  g.OW = spec.out_extent(2, g.W);
  return g;
}

// Visits (patch row, output point, input offset) for every in-bounds tap of group `grp`.
template <typename Fn>
void for_each_tap(const ConvGeometry& g, std::size_t grp, Fn&& fn) {
  const auto& s = g.spec;
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.cin_g; ++c) {
    const std::size_t ci = grp * g.cin_g + c;
    for (std::size_t kd = 0; kd < s.kernel[0]; ++kd)
      for (std::size_t kh = 0; kh < s.kernel[1]; ++kh)
        for (std::size_t kw = 0; kw < s.kernel[2]; ++kw, ++row) {
          std::size_t p = 0;
          for (std::size_t od = 0; od < g.OD; ++od) {
            const long id = static_cast<long>(od * s.stride[0] + kd) - static_cast<long>(s.padding[0]);
            for (std::size_t oh = 0; oh < g.OH; ++oh) {
              const long ih = static_cast<long>(oh * s.stride[1] + kh) - static_cast<long>(s.padding[1]);
              const bool row_ok = id >= 0 && id < static_cast<long>(g.D) && ih >= 0 &&
                                  ih < static_cast<long>(g.H);
              for (std::size_t ow = 0; ow < g.OW; ++ow, ++p) {
                const long iw = static_cast<long>(ow * s.stride[2] + kw) - static_cast<long>(s.padding[2]);
                if (!row_ok || iw < 0 || iw >= static_cast<long>(g.W)) continue;
                fn(row, p, ((ci * g.D + id) * g.H + ih) * g.W + iw);
              }
            }
          }
        }
  }
}

inline void im2col(const ConvGeometry& g, std::size_t grp, const double* x, std::vector<double>& col) {
  const std::size_t P = g.points();
  col.assign(g.patch() * P, 0.0);
  for_each_tap(g, grp, [&](std::size_t row, std::size_t p, std::size_t off) {
    col[row * P + p] = x[off];
  });
}

inline void col2im_add(const ConvGeometry& g, std::size_t grp, const std::vector<double>& col,
                       double* dx) {
  const std::size_t P = g.points();
  for_each_tap(g, grp, [&](std::size_t row, std::size_t p, std::size_t off) {
    dx[off] += col[row * P + p];
  });
}

}  // namespace detail

// Grouped cross-correlation over (C,D,H,W) with weights
// (Cout, Cin/groups, kd, kh, kw) and optional bias (Cout).
inline Tensor conv3d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                     const ConvSpec& spec) {
  const auto g = detail::make_geometry(x.shape(), spec);
  if (weight.shape() != spec.weight_shape_3d())
    throw ShapeError("conv3d: weight shape " + to_string(weight.shape()) + " expected " +
                     to_string(spec.weight_shape_3d()));
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{spec.out_channels})
    throw ShapeError("conv3d: bias shape " + to_string(bias.shape()));

  const std::size_t P = g.points(), K = g.patch();
  std::vector<double> out(spec.out_channels * P, 0.0);
  std::vector<double> col;
  for (std::size_t grp = 0; grp < spec.groups; ++grp) {
    detail::im2col(g, grp, x.data().data(), col);
    detail::ConstMatMap wmat(weight.data().data() + grp * g.cout_g * K, g.cout_g, K);
    detail::ConstMatMap cmat(col.data(), K, P);
    detail::MatMap omat(out.data() + grp * g.cout_g * P, g.cout_g, P);
    omat.noalias() = wmat * cmat;
  }
  if (has_bias)
    for (std::size_t co = 0; co < spec.out_channels; ++co)
      for (std::size_t p = 0; p < P; ++p) out[co * P + p] += bias[co];

  std::vector<Tensor> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return Tensor::from_op(
      {spec.out_channels, g.OD, g.OH, g.OW}, std::move(out), std::move(parents),
      [g, has_bias](Tensor::Node& n) {
        const auto& spec = g.spec;
        const std::size_t P = g.points(), K = g.patch();
        const double* dy = n.grad.data();
        const double* xd = n.parents[0]->data.data();
        const double* wd = n.parents[1]->data.data();
        double* dx = grad_target(n, 0);
        double* dw = grad_target(n, 1);
        std::vector<double> col;
        for (std::size_t grp = 0; grp < spec.groups; ++grp) {
          detail::ConstMatMap dymat(dy + grp * g.cout_g * P, g.cout_g, P);
          if (dw) {
            detail::im2col(g, grp, xd, col);
            detail::ConstMatMap cmat(col.data(), K, P);
            detail::MatMap dwmat(dw + grp * g.cout_g * K, g.cout_g, K);
            dwmat.noalias() += dymat * cmat.transpose();
          }
          if (dx) {
            detail::ConstMatMap wmat(wd + grp * g.cout_g * K, g.cout_g, K);
            col.assign(K * P, 0.0);
            detail::MatMap cmat(col.data(), K, P);
            cmat.noalias() = wmat.transpose() * dymat;
            detail::col2im_add(g, grp, col, dx);
          }
        }
        if (has_bias) {
          if (double* db = grad_target(n, 2))
            for (std::size_t co = 0; co < spec.out_channels; ++co)
              for (std::size_t p = 0; p < P; ++p) db[co] += dy[co * P + p];
        }
      });
}

inline Tensor reshape(const Tensor& x, Shape shape);

// Grouped 2D cross-correlation over (C,H,W) with weights (Cout, Cin/groups, kh, kw).
inline Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                     const ConvSpec& spec) {
  if (x.rank() != 3) throw ShapeError("conv2d: expected input (C,H,W), got " + to_string(x.shape()));
  if (spec.kernel[0] != 1 || spec.stride[0] != 1 || spec.padding[0] != 0)
    throw ShapeError("conv2d: spec has a depth extent");
  if (weight.shape() != spec.weight_shape_2d())
    throw ShapeError("conv2d: weight shape " + to_string(weight.shape()) + " expected " +
                     to_string(spec.weight_shape_2d()));
  Tensor x4 = reshape(x, {x.dim(0), 1, x.dim(1), x.dim(2)});
  Tensor w5 = reshape(weight, spec.weight_shape_3d());
  Tensor y = conv3d(x4, w5, bias, spec);
  return reshape(y, {y.dim(0), y.dim(2), y.dim(3)});
}

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size())
    throw ShapeError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
  std::vector<double> d(x.data().begin(), x.data().end());
  return Tensor::from_op(std::move(shape), std::move(d), {x}, [](Tensor::Node& n) {
    double* dx = grad_target(n, 0);
    for (std::size_t i = 0; i < n.grad.size(); ++i) dx[i] += n.grad[i];
  });
}

// Max over k x k windows of the last two axes; ties route the gradient to
// the first element in row-major window order.
inline Tensor maxpool2d(const Tensor& x, std::size_t k = 2, std::size_t stride = 2) {
  if (x.rank() < 2) throw ShapeError("maxpool2d: rank < 2");
  const std::size_t H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
  if (H % stride != 0 || W % stride != 0 || H < k || W < k)
    throw ShapeError("maxpool2d: spatial dims " + std::to_string(H) + "x" + std::to_string(W) +
                     " not divisible by stride " + std::to_string(stride));
  const std::size_t OH = (H - k) / stride + 1, OW = (W - k) / stride + 1;
  const std::size_t planes = x.size() / (H * W);
  Shape out_shape = x.shape();
  out_shape[out_shape.size() - 2] = OH;
  out_shape[out_shape.size() - 1] = OW;
  std::vector<double> out(planes * OH * OW);
  std::vector<std::size_t> argmax(out.size());
  const double* xd = x.data().data();
  for (std::size_t pl = 0; pl < planes; ++pl)
    for (std::size_t oh = 0; oh < OH; ++oh)
      for (std::size_t ow = 0; ow < OW; ++ow) {
        std::size_t best = pl * H * W + oh * stride * W + ow * stride;
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j) {
            std::size_t idx = pl * H * W + (oh * stride + i) * W + ow * stride + j;
            if (xd[idx] > xd[best]) best = idx;
          }
        const std::size_t o = (pl * OH + oh) * OW + ow;
        out[o] = xd[best];
        argmax[o] = best;
      }
  return Tensor::from_op(std::move(out_shape), std::move(out), {x},
                         [argmax = std::move(argmax)](Tensor::Node& n) {
                           double* dx = grad_target(n, 0);
                           for (std::size_t o = 0; o < n.grad.size(); ++o) dx[argmax[o]] += n.grad[o];
                         });
}

namespace detail {

template <typename F, typename DF>
Tensor unary(const Tensor& x, F f, DF df) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  return Tensor::from_op(x.shape(), std::move(out), {x}, [df](Tensor::Node& n) {
    double* dx = grad_target(n, 0);
    const auto& xd = n.parents[0]->data;
    for (std::size_t i = 0; i < n.grad.size(); ++i) dx[i] += n.grad[i] * df(xd[i], n.data[i]);
  });
}

inline void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
}

}  // namespace detail

// relu'(0) is taken as 0.
inline Tensor relu(const Tensor& x) {
  return detail::unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
                       [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

inline Tensor sigmoid(const Tensor& x) {
  return detail::unary(x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                       [](double, double y) { return y * (1.0 - y); });
}

inline Tensor square(const Tensor& x) {
  return detail::unary(x, [](double v) { return v * v; },
                       [](double v, double) { return 2.0 * v; });
}

inline Tensor sqrt(const Tensor& x) {
  return detail::unary(x, [](double v) { return std::sqrt(v); },
                       [](double, double y) { return 0.5 / y; });
}

inline Tensor scale(const Tensor& x, double s) {
  return detail::unary(x, [s](double v) { return s * v; }, [s](double, double) { return s; });
}

inline Tensor add_scalar(const Tensor& x, double s) {
  return detail::unary(x, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return Tensor::from_op(a.shape(), std::move(out), {a, b}, [](Tensor::Node& n) {
    for (std::size_t k = 0; k < 2; ++k)
      if (double* d = grad_target(n, k))
        for (std::size_t i = 0; i < n.grad.size(); ++i) d[i] += n.grad[i];
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return Tensor::from_op(a.shape(), std::move(out), {a, b}, [](Tensor::Node& n) {
    if (double* d = grad_target(n, 0))
      for (std::size_t i = 0; i < n.grad.size(); ++i) d[i] += n.grad[i];
    if (double* d = grad_target(n, 1))
      for (std::size_t i = 0; i < n.grad.size(); ++i) d[i] -= n.grad[i];
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return Tensor::from_op(a.shape(), std::move(out), {a, b}, [](Tensor::Node& n) {
    const auto& ad = n.parents[0]->data;
    const auto& bd = n.parents[1]->data;
    if (double* d = grad_target(n, 0))
      for (std::size_t i = 0; i < n.grad.size(); ++i) d[i] += n.grad[i] * bd[i];
    if (double* d = grad_target(n, 1))
      for (std::size_t i = 0; i < n.grad.size(); ++i) d[i] += n.grad[i] * ad[i];
  });
}

// x of shape (C, ...) times per-channel factors g of shape (C).
inline Tensor mul_channel(const Tensor& x, const Tensor& g) {
  if (g.rank() != 1 || x.rank() < 1 || g.dim(0) != x.dim(0))
    throw ShapeError("mul_channel: " + to_string(x.shape()) + " by " + to_string(g.shape()));
  const std::size_t C = x.dim(0), inner = x.size() / C;
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < inner; ++i) out[c * inner + i] = x[c * inner + i] * g[c];
  return Tensor::from_op(x.shape(), std::move(out), {x, g}, [C, inner](Tensor::Node& n) {
    const auto& xd = n.parents[0]->data;
    const auto& gd = n.parents[1]->data;
    double* dx = grad_target(n, 0);
    double* dg = grad_target(n, 1);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < inner; ++i) {
        const double gy = n.grad[c * inner + i];
        if (dx) dx[c * inner + i] += gy * gd[c];
        if (dg) dg[c] += gy * xd[c * inner + i];
      }
  });
}

// Scales slice i along `axis` by the constant coeffs[i].
inline Tensor scale_slices(const Tensor& x, std::span<const double> coeffs,
                           std::size_t axis = 0) {
  if (axis >= x.rank() || x.dim(axis) != coeffs.size())
    throw ShapeError("scale_slices: " + std::to_string(coeffs.size()) +
                     " coefficients for shape " + to_string(x.shape()) + " on axis " +
                     std::to_string(axis));
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < x.rank(); ++a) inner *= x.dim(a);
  const std::size_t n = coeffs.size();
  std::vector<double> c(coeffs.begin(), coeffs.end());
  auto coeff_at = [inner, n](std::size_t i) { return (i / inner) % n; };
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * c[coeff_at(i)];
  return Tensor::from_op(x.shape(), std::move(out), {x}, [c, coeff_at](Tensor::Node& n) {
    double* dx = grad_target(n, 0);
    for (std::size_t i = 0; i < n.grad.size(); ++i) dx[i] += n.grad[i] * c[coeff_at(i)];
  });
}

// Slice `index` along `axis`, with that axis removed.
inline Tensor select(const Tensor& x, std::size_t axis, std::size_t index) {
  if (axis >= x.rank() || index >= x.dim(axis))
    throw ShapeError("select: index " + std::to_string(index) + " on axis " +
                     std::to_string(axis) + " of " + to_string(x.shape()));
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= x.dim(a);
  for (std::size_t a = axis + 1; a < x.rank(); ++a) inner *= x.dim(a);
  const std::size_t n = x.dim(axis);
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> out(outer * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] = x[(o * n + index) * inner + i];
  return Tensor::from_op(std::move(shape), std::move(out), {x},
                         [outer, inner, n, index](Tensor::Node& node) {
                           double* dx = grad_target(node, 0);
                           for (std::size_t o = 0; o < outer; ++o)
                             for (std::size_t i = 0; i < inner; ++i)
                               dx[(o * n + index) * inner + i] += node.grad[o * inner + i];
                         });
}

inline Tensor sum(const Tensor& x) {
  double s = compensated_sum(x.data());
  return Tensor::from_op({}, {s}, {x}, [](Tensor::Node& n) {
    double* dx = grad_target(n, 0);
    const double g = n.grad[0];
    for (std::size_t i = 0; i < n.parents[0]->data.size(); ++i) dx[i] += g;
  });
}

inline Tensor mean(const Tensor& x) {
  const double count = static_cast<double>(x.size());
  double s = compensated_sum(x.data()) / count;
  return Tensor::from_op({}, {s}, {x}, [count](Tensor::Node& n) {
    double* dx = grad_target(n, 0);
    const double g = n.grad[0] / count;
    for (std::size_t i = 0; i < n.parents[0]->data.size(); ++i) dx[i] += g;
  });
}

// Mean over every axis but the first: (C, ...) -> (C).
inline Tensor global_avg_pool(const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("global_avg_pool: rank < 2");
  const std::size_t C = x.dim(0), inner = x.size() / C;
  std::vector<double> out(C);
  for (std::size_t c = 0; c < C; ++c)
    out[c] = compensated_sum(x.data().subspan(c * inner, inner)) / static_cast<double>(inner);
  return Tensor::from_op({C}, std::move(out), {x}, [C, inner](Tensor::Node& n) {
    double* dx = grad_target(n, 0);
    for (std::size_t c = 0; c < C; ++c) {
      const double g = n.grad[c] / static_cast<double>(inner);
      for (std::size_t i = 0; i < inner; ++i) dx[c * inner + i] += g;
    }
  });
}

// Stacks equally shaped tensors along a new first axis.
inline Tensor stack(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ShapeError("stack: empty input");
  for (const auto& t : xs) detail::require_same(xs.front(), t, "stack");
  const std::size_t inner = xs.front().size();
  Shape shape{xs.size()};
  shape.insert(shape.end(), xs.front().shape().begin(), xs.front().shape().end());
  std::vector<double> out;
  out.reserve(inner * xs.size());
  for (const auto& t : xs) out.insert(out.end(), t.data().begin(), t.data().end());
  return Tensor::from_op(std::move(shape), std::move(out), xs, [inner](Tensor::Node& n) {
    for (std::size_t k = 0; k < n.parents.size(); ++k)
      if (double* d = grad_target(n, k))
        for (std::size_t i = 0; i < inner; ++i) d[i] += n.grad[k * inner + i];
  });
}

// Nearest-neighbour x2 upsampling of the last two axes.
inline Tensor upsample_nearest2x(const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("upsample_nearest2x: rank < 2");
  const std::size_t H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
  const std::size_t planes = x.size() / (H * W);
  Shape shape = x.shape();
  shape[shape.size() - 2] = 2 * H;
  shape[shape.size() - 1] = 2 * W;
  std::vector<double> out(planes * 4 * H * W);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t r = 0; r < 2 * H; ++r)
      for (std::size_t c = 0; c < 2 * W; ++c)
        out[(p * 2 * H + r) * 2 * W + c] = x[(p * H + r / 2) * W + c / 2];
  return Tensor::from_op(std::move(shape), std::move(out), {x}, [planes, H, W](Tensor::Node& n) {
    double* dx = grad_target(n, 0);
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t r = 0; r < 2 * H; ++r)
        for (std::size_t c = 0; c < 2 * W; ++c)
          dx[(p * H + r / 2) * W + c / 2] += n.grad[(p * 2 * H + r) * 2 * W + c];
  });
}

// Per spatial position of a (C,H,W) tensor, divides the channel vector by
// sqrt(sum of squares + eps).
inline Tensor channel_unit_normalize(const Tensor& x, double eps = 1e-10) {
  if (x.rank() != 3) throw ShapeError("channel_unit_normalize: expected (C,H,W)");
  const std::size_t C = x.dim(0), P = x.dim(1) * x.dim(2);
  std::vector<double> out(x.size());
  std::vector<double> norm(P);
  for (std::size_t p = 0; p < P; ++p) {
    double s = eps;
    for (std::size_t c = 0; c < C; ++c) s += x[c * P + p] * x[c * P + p];
    norm[p] = std::sqrt(s);
    for (std::size_t c = 0; c < C; ++c) out[c * P + p] = x[c * P + p] / norm[p];
  }
  return Tensor::from_op(x.shape(), std::move(out), {x},
                         [C, P, norm = std::move(norm)](Tensor::Node& n) {
                           double* dx = grad_target(n, 0);
                           // d(x/r) = (g - y * <g,y>) / r with y = x / r
                           for (std::size_t p = 0; p < P; ++p) {
                             double dot = 0.0;
                             for (std::size_t c = 0; c < C; ++c)
                               dot += n.grad[c * P + p] * n.data[c * P + p];
                             for (std::size_t c = 0; c < C; ++c)
                               dx[c * P + p] += (n.grad[c * P + p] - n.data[c * P + p] * dot) / norm[p];
                           }
                         });
}

}  // namespace promotion::nn

#endif  // PROMOTION_NN_OPS_HPP_
