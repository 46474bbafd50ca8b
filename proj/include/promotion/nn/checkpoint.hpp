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

#ifndef PROMOTION_NN_CHECKPOINT_HPP_
#define PROMOTION_NN_CHECKPOINT_HPP_

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "promotion/error.hpp"
#include "promotion/media_io.hpp"
#include "promotion/nn/tensor.hpp"

namespace promotion::nn {

// Checkpoint byte layout (all integers and floats little-endian):
//
//   char[8]  magic "PRMCKPT\0"
//   u32      version (1)
//   u32      metadata length M, then M bytes of UTF-8 metadata (JSON)
//   u32      record count R, then R records of:
//              u32 name length N, N bytes of name
//              u32 rank K, K x u64 dims
//              prod(dims) x f64 values, row-major
inline constexpr char kCheckpointMagic[8] = {'P', 'R', 'M', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct Checkpoint {
  std::string metadata;
  std::vector<NamedTensor> tensors;
};

namespace detail {

template <typename T>
void put(std::string& out, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.append(reinterpret_cast<const char*>(bits.data()), bits.size());
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    std::array<unsigned char, sizeof(T)> bits;
    take(bits.data(), bits.size());
    if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
    return std::bit_cast<T>(bits);
  }
  std::string get_string(std::size_t n) {
    std::string s(n, '\0');
    take(s.data(), n);
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void take(void* dst, std::size_t n) {
    if (bytes_.size() - pos_ < n) throw DataError("checkpoint: truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put<std::uint32_t>(out, kCheckpointVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.metadata.size()));
  out += ck.metadata;
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& [name, t] : ck.tensors) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) detail::put<std::uint64_t>(out, d);
    for (double v : t.data()) detail::put<double>(out, v);
  }
  return out;
}

inline Checkpoint parse_checkpoint(const std::string& bytes) {
  detail::Reader in(bytes);
  if (in.get_string(sizeof(kCheckpointMagic)) != std::string(kCheckpointMagic, 8))
    throw DataError("checkpoint: bad magic");
  if (auto v = in.get<std::uint32_t>(); v != kCheckpointVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(v));
  Checkpoint ck;
  ck.metadata = in.get_string(in.get<std::uint32_t>());
  const auto count = in.get<std::uint32_t>();
  for (std::uint32_t r = 0; r < count; ++r) {
    NamedTensor nt;
    nt.name = in.get_string(in.get<std::uint32_t>());
    Shape shape(in.get<std::uint32_t>());
    for (auto& d : shape) d = static_cast<std::size_t>(in.get<std::uint64_t>());
    std::vector<double> data(numel(shape));
    for (double& v : data) v = in.get<double>();
    nt.tensor = Tensor(std::move(shape), std::move(data));
    ck.tensors.push_back(std::move(nt));
  }
  if (!in.done()) throw DataError("checkpoint: trailing bytes");
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_text_file(path, serialize_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

}  // namespace promotion::nn

#endif  // PROMOTION_NN_CHECKPOINT_HPP_
