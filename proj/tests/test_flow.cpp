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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "promotion/flow.hpp"

namespace promotion {
namespace {

std::string flo_bytes(float magic, std::int32_t w, std::int32_t h, const std::vector<float>& uv) {
  std::string s(12 + 4 * uv.size(), '\0');
  std::memcpy(s.data(), &magic, 4);
  std::memcpy(s.data() + 4, &w, 4);
  std::memcpy(s.data() + 8, &h, 4);
  if (!uv.empty()) std::memcpy(s.data() + 12, uv.data(), 4 * uv.size());
  return s;
}

template <typename Fn>
void expect_error_containing(Fn fn, const std::string& needle) {
  try {
    fn();
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(Flo, ZeroTwoByTwo) {
  FlowField f = parse_flo(flo_bytes(202021.25f, 2, 2, std::vector<float>(8, 0.0f)));
  EXPECT_EQ(f, FlowField(2, 2));
}

TEST(Flo, InterleavedRowMajorLayout) {
  // w=3, h=2: pixel (r,c) stores (u,v) at float index 2*(r*3+c).
  std::vector<float> uv(12);
  for (int i = 0; i < 6; ++i) {
    uv[2 * i] = static_cast<float>(i);
    uv[2 * i + 1] = -0.5f * i;
  }
  FlowField f = parse_flo(flo_bytes(202021.25f, 3, 2, uv));
  ASSERT_EQ(f.rows(), 2);
  ASSERT_EQ(f.cols(), 3);
  EXPECT_EQ(f.u(1, 0), 3.0);
  EXPECT_EQ(f.v(1, 2), -2.5);
  EXPECT_EQ(serialize_flo(f), flo_bytes(202021.25f, 3, 2, uv));
}

TEST(Flo, Errors) {
  expect_error_containing([] { parse_flo(flo_bytes(123.0f, 2, 2, std::vector<float>(8))); },
                          "magic");
  expect_error_containing([] { parse_flo(flo_bytes(202021.25f, 2, 2, std::vector<float>(7))); },
                          "truncated");
  expect_error_containing([] { parse_flo(flo_bytes(202021.25f, 0, 2, {})); }, "dimension");
  expect_error_containing([] { parse_flo(flo_bytes(202021.25f, 2, -1, {})); }, "dimension");
  expect_error_containing([] { parse_flo(std::string(6, '\0')); }, "truncated");
}

TEST(Flo, FileRoundTripIsBitExactAtFloat32) {
  testing::TempDir dir;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<float> dist(-20.0f, 20.0f);
  FlowField f(5, 7);
  for (double& x : f.u.values()) x = dist(rng);
  for (double& x : f.v.values()) x = dist(rng);
  write_flo(dir / "f.flo", f);
  EXPECT_EQ(read_flo(dir / "f.flo"), f);
  EXPECT_THROW(read_flo(dir / "missing.flo"), DataError);
}

FlowField uniform_flow(int rows, int cols, double u, double v) {
  FlowField f(rows, cols);
  for (double& x : f.u.values()) x = u;
  for (double& x : f.v.values()) x = v;
  return f;
}

TEST(FlowColor, ZeroFlowIsWhite) {
  EXPECT_EQ(flow_to_color(FlowField(4, 4)), RgbImage(4, 4, 1.0));
}

TEST(FlowColor, UniformFlowIsSingleColor) {
  RgbImage img = flow_to_color(uniform_flow(3, 4, 1.5, -2.0));
  for (int ch = 0; ch < 3; ++ch)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) EXPECT_EQ(img(ch, r, c), img(ch, 0, 0));
}

TEST(FlowColor, WheelLayoutAndAngleZero) {
  const auto& wheel = detail::color_wheel();
  ASSERT_EQ(wheel.size(), 55u);
  // Arc boundaries: red, yellow, green, cyan, blue, magenta.
  const std::array<double, 3> anchors[6] = {
      {255, 0, 0}, {255, 255, 0}, {0, 255, 0}, {0, 255, 255}, {0, 0, 255}, {255, 0, 255}};
  const int starts[6] = {0, 15, 21, 25, 36, 49};
  for (int k = 0; k < 6; ++k) EXPECT_EQ(wheel[starts[k]], anchors[k]) << k;

  FlowField f(1, 2);
  f.u(0, 0) = 4.0;
  f.u(0, 1) = 2.0;
  RgbImage img = flow_to_color(f);
  EXPECT_EQ(img(0, 0, 0), 1.0);
  EXPECT_EQ(img(1, 0, 0), 0.0);
  EXPECT_EQ(img(2, 0, 0), 0.0);
  // Half the maximum magnitude: halfway to white.
  EXPECT_DOUBLE_EQ(img(1, 0, 1), 0.5);
}

TEST(FlowColor, ChannelsInUnitRange) {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> dist(0.0, 5.0);
  FlowField f(9, 9);
  for (double& x : f.u.values()) x = dist(rng);
  for (double& x : f.v.values()) x = dist(rng);
  for (double v : flow_to_color(f).values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Attention, ZeroAndUniformFlowGiveZeros) {
  EXPECT_EQ(attention_map(FlowField(5, 5)).values, GrayMap(5, 5, 0.0));
  EXPECT_EQ(attention_map(uniform_flow(5, 5, 2.0, 1.0)).values, GrayMap(5, 5, 0.0));
}

FlowField two_region_flow() {
  FlowField f(12, 12);
  for (int r = 3; r < 8; ++r)
    for (int c = 4; c < 9; ++c) {
      f.u(r, c) = 2.0;
      f.v(r, c) = -1.0;
    }
  return f;
}

TEST(Attention, MovingRegionOutweighsBackground) {
  AttentionMap a = attention_map(two_region_flow());
  for (int r = 0; r < 12; ++r)
    for (int c = 0; c < 12; ++c) {
      const bool moving = r >= 3 && r < 8 && c >= 4 && c < 9;
      EXPECT_EQ(a.values(r, c), moving ? 1.0 : 0.0);
    }
}

TEST(Attention, ScaleInvariantAndInRange) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> dist(0.0, 3.0);
  FlowField f(10, 10);
  for (double& x : f.u.values()) x = dist(rng);
  for (double& x : f.v.values()) x = dist(rng);
  FlowField g = f;
  for (double& x : g.u.values()) x *= 2.5;
  for (double& x : g.v.values()) x *= 2.5;
  AttentionMap a = attention_map(f), b = attention_map(g);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    EXPECT_NEAR(a.values.values()[i], b.values.values()[i], 1e-12);
    EXPECT_GE(a.values.values()[i], 0.0);
    EXPECT_LE(a.values.values()[i], 1.0);
  }
}

GrayMap textured(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  GrayMap m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

GrayMap translate(const GrayMap& a, int dx, int dy) {
  GrayMap b(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) b(r, c) = a.at_clamped(r - dy, c - dx);
  return b;
}

TEST(CoarseFlow, IdenticalFramesGiveZero) {
  std::mt19937_64 rng(24);
  GrayMap a = textured(32, 32, rng);
  EXPECT_EQ(estimate_flow_coarse(a, a, 8, 4), FlowField(32, 32));
  GrayMap flat(16, 16, 0.5);
  EXPECT_EQ(estimate_flow_coarse(flat, flat, 8, 3), FlowField(16, 16));
}

TEST(CoarseFlow, RecoversIntegerTranslationsOnInteriorBlocks) {
  std::mt19937_64 rng(25);
  GrayMap a = textured(48, 48, rng);
  for (auto [dx, dy] : {std::pair{2, 0}, {-3, 1}, {0, -4}, {4, 4}}) {
    FlowField f = estimate_flow_coarse(a, translate(a, dx, dy), 8, 4);
    for (int r = 8; r < 40; ++r)
      for (int c = 8; c < 40; ++c) {
        ASSERT_EQ(f.u(r, c), dx) << dx << "," << dy;
        ASSERT_EQ(f.v(r, c), dy) << dx << "," << dy;
      }
  }
}

TEST(CoarseFlow, NoiseStaysWithinRadius) {
  std::mt19937_64 rng(26);
  GrayMap a = textured(20, 20, rng), b = textured(20, 20, rng);
  FlowField f = estimate_flow_coarse(a, b, 4, 3);
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    EXPECT_LE(std::abs(f.u.values()[i]), 3.0);
    EXPECT_LE(std::abs(f.v.values()[i]), 3.0);
  }
}

TEST(CoarseFlow, RejectsBadArguments) {
  GrayMap a(8, 8), b(8, 9);
  EXPECT_THROW(estimate_flow_coarse(a, b, 4, 1), ShapeError);
  EXPECT_THROW(estimate_flow_coarse(a, a, 3, 1), ShapeError);
  EXPECT_THROW(estimate_flow_coarse(a, a, 4, 0), ShapeError);
}

}  // namespace
}  // namespace promotion
