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

// Shared helpers for tests that touch the filesystem or need random frames.

#ifndef PROMOTION_TESTS_FIXTURES_HPP_
#define PROMOTION_TESTS_FIXTURES_HPP_

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "promotion/image.hpp"
#include "promotion/media_io.hpp"

namespace promotion::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("promotion-test-" + std::to_string(::getpid()) + "-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Random frame already on the 8-bit grid, so PNG round trips are exact.
inline RgbImage random_frame(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dist(0, 255);
  RgbImage img(rows, cols);
  for (double& v : img.values()) v = dist(rng) / 255.0;
  return img;
}

inline FrameSequence repeat_frame(const RgbImage& img, int count) {
  FrameSequence seq;
  seq.frames.assign(count, img);
  seq.center_index = count / 2;
  return seq;
}

}  // namespace promotion::testing

#endif  // PROMOTION_TESTS_FIXTURES_HPP_
