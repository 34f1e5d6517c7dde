// Copyright 2026 The slap-cpp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "slap/geometry.hpp"

namespace slap {

// SLPC layout (all little-endian):
//   char[4]  magic "SLPC"
//   u32      version (1)
//   u64      point count n
//   u32      flags (bit 0: per-point view indices present)
//   f32[3n]  positions, xyz interleaved
//   f32[3n]  colors, rgb interleaved
//   i32[n]   view indices (only when flag bit 0 is set)
inline constexpr std::uint32_t kSlpcVersion = 1;

void write_slpc(std::ostream& out, const PointCloud& cloud);
PointCloud read_slpc(std::istream& in);
void save_slpc(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud load_slpc(const std::filesystem::path& path);

/// ASCII PLY with x y z (float), red green blue (uchar) and, when `labels`
/// is nonempty, a per-vertex uchar `label`.
void save_ply(const std::filesystem::path& path, const PointCloud& cloud,
              const std::vector<std::uint8_t>& labels = {});

struct PlyData {
  PointCloud cloud;
  std::vector<std::uint8_t> labels;
};

/// Reads the ASCII PLY subset written by save_ply.
PlyData load_ply(const std::filesystem::path& path);

// Little-endian primitive helpers shared by the binary formats.
namespace binio {
void write_bytes(std::ostream& out, const void* data, std::size_t n);
void read_bytes(std::istream& in, void* data, std::size_t n);

template <typename T>
void write(std::ostream& out, T value) {
  write_bytes(out, &value, sizeof(T));
}

template <typename T>
T read(std::istream& in) {
  T value{};
  read_bytes(in, &value, sizeof(T));
  return value;
}
}  // namespace binio

}  // namespace slap
