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

#ifndef PROMOTION_MEDIA_IO_HPP_
#define PROMOTION_MEDIA_IO_HPP_

#include <fnmatch.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "promotion/error.hpp"
#include "promotion/image.hpp"

namespace promotion {

namespace fs = std::filesystem;

// Ordered RGB frames sharing one size, with the index of the center frame.
struct FrameSequence {
  std::vector<RgbImage> frames;
  int center_index = 0;

  int size() const { return static_cast<int>(frames.size()); }
  int rows() const { return frames.empty() ? 0 : frames.front().rows(); }
  int cols() const { return frames.empty() ? 0 : frames.front().cols(); }
  const RgbImage& center() const { return frames.at(center_index); }
  const RgbImage& operator[](int i) const { return frames.at(i); }
};

// 8-bit quantization: round-half-up onto 255 levels.
inline std::uint8_t quantize8(double v) {
  double s = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(s);
}
inline double dequantize8(std::uint8_t b) { return b / 255.0; }

inline RgbImage quantized(const RgbImage& img) {
  RgbImage out = img;
  for (double& v : out.values()) v = dequantize8(quantize8(v));
  return out;
}

// Writes through a sibling temp file, then renames over the target.
inline void write_atomically(const fs::path& path,
                             const std::function<void(const fs::path&)>& writer) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  try {
    writer(tmp);
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

inline void write_text_file(const fs::path& path, std::string_view text) {
  write_atomically(path, [&](const fs::path& tmp) {
    std::ofstream out(tmp, std::ios::binary);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("cannot write " + tmp.string());
  });
}

namespace detail {

inline std::vector<std::uint8_t> read_png_bytes(const fs::path& path,
                                                std::uint32_t format,
                                                int& rows, int& cols) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DataError("unreadable image " + path.string() + ": " + msg);
  }
  image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DataError("unreadable image " + path.string() + ": " + msg);
  }
  rows = static_cast<int>(image.height);
  cols = static_cast<int>(image.width);
  return buffer;
}

inline void write_png_bytes(const fs::path& path, std::uint32_t format,
                            int rows, int cols,
                            const std::vector<std::uint8_t>& buffer) {
  write_atomically(path, [&](const fs::path& tmp) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(cols);
    image.height = static_cast<png_uint_32>(rows);
    image.format = format;
    if (!png_image_write_to_file(&image, tmp.c_str(), 0, buffer.data(), 0,
                                 nullptr)) {
      std::string msg = image.message;
      png_image_free(&image);
      throw DataError("cannot write " + path.string() + ": " + msg);
    }
  });
}

}  // namespace detail

inline RgbImage read_png(const fs::path& path) {
  int rows = 0, cols = 0;
  auto bytes = detail::read_png_bytes(path, PNG_FORMAT_RGB, rows, cols);
  RgbImage img(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (int ch = 0; ch < 3; ++ch)
        img(ch, r, c) = dequantize8(bytes[(static_cast<std::size_t>(r) * cols + c) * 3 + ch]);
  return img;
}

inline void write_png(const fs::path& path, const RgbImage& img) {
  std::vector<std::uint8_t> bytes(img.plane_size() * 3);
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c)
      for (int ch = 0; ch < 3; ++ch)
        bytes[(static_cast<std::size_t>(r) * img.cols() + c) * 3 + ch] =
            quantize8(img(ch, r, c));
  detail::write_png_bytes(path, PNG_FORMAT_RGB, img.rows(), img.cols(), bytes);
}

inline void write_png(const fs::path& path, const GrayMap& map) {
  std::vector<std::uint8_t> bytes(map.size());
  std::transform(map.values().begin(), map.values().end(), bytes.begin(),
                 quantize8);
  detail::write_png_bytes(path, PNG_FORMAT_GRAY, map.rows(), map.cols(), bytes);
}

// Frame file name for position `index`: %08d.png
inline std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%08d.png", index);
  return buf;
}

inline std::vector<fs::path> list_frames(const fs::path& dir,
                                         const std::string& pattern = "*.png") {
  if (!fs::is_directory(dir))
    throw DataError("missing directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (fnmatch(pattern.c_str(), name.c_str(), 0) == 0) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return files;
}

inline FrameSequence load_sequence(const fs::path& dir,
                                   const std::string& pattern = "*.png") {
  auto files = list_frames(dir, pattern);
  if (files.empty())
    throw DataError("no frames matching '" + pattern + "' in " + dir.string());
  FrameSequence seq;
  seq.frames.reserve(files.size());
  for (const auto& f : files) {
    RgbImage img = read_png(f);
    if (!seq.frames.empty() && !img.same_shape(seq.frames.front())) {
      throw DataError("dimension mismatch in " + f.filename().string() + ": " +
                      std::to_string(img.rows()) + "x" + std::to_string(img.cols()) +
                      " vs " + std::to_string(seq.rows()) + "x" +
                      std::to_string(seq.cols()));
    }
    seq.frames.push_back(std::move(img));
  }
  seq.center_index = seq.size() / 2;
  return seq;
}

inline void save_sequence(const fs::path& dir, const FrameSequence& seq) {
  fs::create_directories(dir);
  for (int i = 0; i < seq.size(); ++i) write_png(dir / frame_name(i), seq[i]);
}

// One clip per frame of `seq`, each centered on that frame; positions past
// either end replicate the boundary frame.
inline std::vector<FrameSequence> window_clips(const FrameSequence& seq, int window) {
  if (window <= 0 || window % 2 == 0)
    throw ShapeError("window length must be a positive odd number, got " +
                     std::to_string(window));
  if (window > seq.size())
    throw ShapeError("window " + std::to_string(window) + " longer than sequence of " +
                     std::to_string(seq.size()));
  const int half = window / 2;
  std::vector<FrameSequence> clips;
  clips.reserve(seq.frames.size());
  for (int center = 0; center < seq.size(); ++center) {
    FrameSequence clip;
    clip.center_index = half;
    for (int k = -half; k <= half; ++k)
      clip.frames.push_back(seq.frames[std::clamp(center + k, 0, seq.size() - 1)]);
    clips.push_back(std::move(clip));
  }
  return clips;
}

// Run configuration. File format: one `key = value` per line, `#` starts a comment.
struct RunConfig {
  std::string input;
  std::string output;
  int window = 5;
  int crop = 64;
  std::uint64_t seed = 0;
  double lambda = 0.1;
  double epsilon = 1e-6;
  std::string flow_source = "estimator";  // "estimator" | "file"
  std::string flow_path;
  int flow_block = 16;
  int flow_radius = 8;
  int channels = 128;
  int blocks = 4;
  int reduction = 16;
  int steps = 500;
  double step_size = 1e-3;
  std::string optimizer = "adam";  // "adam" | "gd"

  void set(const std::string& key, const std::string& value);
  void validate() const;
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (!in || !(in >> std::ws).eof())
    throw DataError("config: bad value for '" + key + "': '" + text + "'");
  return value;
}

}  // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& value) {
  using detail::parse_value;
  if (key == "input") input = value;
  else if (key == "output") output = value;
  else if (key == "window") window = parse_value<int>(key, value);
  else if (key == "crop") crop = parse_value<int>(key, value);
  else if (key == "seed") seed = parse_value<std::uint64_t>(key, value);
  else if (key == "lambda") lambda = parse_value<double>(key, value);
  else if (key == "epsilon") epsilon = parse_value<double>(key, value);
  else if (key == "flow_source") flow_source = value;
  else if (key == "flow_path") flow_path = value;
  else if (key == "flow_block") flow_block = parse_value<int>(key, value);
  else if (key == "flow_radius") flow_radius = parse_value<int>(key, value);
  else if (key == "channels") channels = parse_value<int>(key, value);
  else if (key == "blocks") blocks = parse_value<int>(key, value);
  else if (key == "reduction") reduction = parse_value<int>(key, value);
  else if (key == "steps") steps = parse_value<int>(key, value);
  else if (key == "step_size") step_size = parse_value<double>(key, value);
  else if (key == "optimizer") optimizer = value;
  else throw DataError("config: unknown key '" + key + "'");
}

inline void RunConfig::validate() const {
  if (window <= 0 || window % 2 == 0) throw DataError("config: window must be odd");
  if (!(lambda >= 0.0)) throw DataError("config: lambda must be >= 0");
  if (!(epsilon >= 0.0)) throw DataError("config: epsilon must be >= 0");
  if (crop <= 0 || crop % 4 != 0) throw DataError("config: crop must be a positive multiple of 4");
  if (flow_source != "estimator" && flow_source != "file")
    throw DataError("config: flow_source must be 'estimator' or 'file'");
  if (channels <= 0 || reduction <= 0 || channels % reduction != 0)
    throw DataError("config: channels must be a positive multiple of reduction");
  if (channels % 4 != 0) throw DataError("config: channels must be a multiple of 4");
  if (blocks < 0 || steps < 0) throw DataError("config: negative count");
  if (!(step_size >= 0.0)) throw DataError("config: step_size must be >= 0");
  if (optimizer != "adam" && optimizer != "gd")
    throw DataError("config: optimizer must be 'adam' or 'gd'");
}

inline RunConfig parse_config(std::istream& in, RunConfig base = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string body = detail::trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos)
      throw DataError("config line " + std::to_string(lineno) + ": expected key = value");
    base.set(detail::trim(body.substr(0, eq)), detail::trim(body.substr(eq + 1)));
  }
  base.validate();
  return base;
}

inline RunConfig load_config(const fs::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  return parse_config(in, std::move(base));
}

}  // namespace promotion

#endif  // PROMOTION_MEDIA_IO_HPP_
