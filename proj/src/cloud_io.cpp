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

#include "slap/cloud_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "slap/errors.hpp"

namespace slap {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace binio {

void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw IoError("binary write failed");
}

void read_bytes(std::istream& in, void* data, std::size_t n) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) throw FormatError("unexpected end of binary data");
}

}  // namespace binio

void write_slpc(std::ostream& out, const PointCloud& cloud) {
  cloud.validate();
  binio::write_bytes(out, "SLPC", 4);
  binio::write<std::uint32_t>(out, kSlpcVersion);
  binio::write<std::uint64_t>(out, cloud.size());
  binio::write<std::uint32_t>(out, cloud.has_views() ? 1u : 0u);
  std::vector<float> buf(cloud.size() * 3);
  auto dump = [&](const std::vector<Vec3>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (int k = 0; k < 3; ++k) buf[3 * i + k] = static_cast<float>(v[i][k]);
    }
    binio::write_bytes(out, buf.data(), buf.size() * sizeof(float));
  };
  dump(cloud.positions);
  dump(cloud.colors);
  if (cloud.has_views()) {
    std::vector<std::int32_t> views(cloud.source_view.begin(), cloud.source_view.end());
    binio::write_bytes(out, views.data(), views.size() * sizeof(std::int32_t));
  }
}

PointCloud read_slpc(std::istream& in) {
  char magic[4];
  binio::read_bytes(in, magic, 4);
  if (std::memcmp(magic, "SLPC", 4) != 0) throw FormatError("SLPC: bad magic");
  const auto version = binio::read<std::uint32_t>(in);
  if (version != kSlpcVersion) throw FormatError("SLPC: unsupported version " + std::to_string(version));
  const auto n = binio::read<std::uint64_t>(in);
  const auto flags = binio::read<std::uint32_t>(in);
  if (n > (std::uint64_t{1} << 32)) throw FormatError("SLPC: implausible point count");
  PointCloud cloud;
  std::vector<float> buf(n * 3);
  auto load = [&](std::vector<Vec3>& v) {
    binio::read_bytes(in, buf.data(), buf.size() * sizeof(float));
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = Vec3(buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]);
  };
  load(cloud.positions);
  load(cloud.colors);
  if (flags & 1u) {
    std::vector<std::int32_t> views(n);
    binio::read_bytes(in, views.data(), views.size() * sizeof(std::int32_t));
    cloud.source_view.assign(views.begin(), views.end());
  }
  cloud.validate();
  return cloud;
}

void save_slpc(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_slpc(out, cloud);
}

PointCloud load_slpc(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  try {
    return read_slpc(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

namespace {

int to_byte(double c) {
  return static_cast<int>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

}  // namespace

void save_ply(const std::filesystem::path& path, const PointCloud& cloud,
              const std::vector<std::uint8_t>& labels) {
  cloud.validate();
  if (!labels.empty() && labels.size() != cloud.size()) {
    throw InvalidArgument("save_ply: label count does not match point count");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (!labels.empty()) out << "property uchar label\n";
  out << "end_header\n";
  out << std::setprecision(std::numeric_limits<float>::max_digits10);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    const Vec3& c = cloud.colors[i];
    out << static_cast<float>(p.x()) << ' ' << static_cast<float>(p.y()) << ' ' << static_cast<float>(p.z())
        << ' ' << to_byte(c.x()) << ' ' << to_byte(c.y()) << ' ' << to_byte(c.z());
    if (!labels.empty()) out << ' ' << static_cast<int>(labels[i]);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

PlyData load_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw FormatError(path.string() + ": not a PLY file");
  std::size_t count = 0;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw FormatError(path.string() + ": only ASCII PLY is supported");
    } else if (word == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex") throw FormatError(path.string() + ": unexpected element " + name);
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    }
  }
  auto column = [&](const std::string& name) {
    const auto it = std::find(props.begin(), props.end(), name);
    return it == props.end() ? -1 : static_cast<int>(it - props.begin());
  };
  const int ix = column("x"), iy = column("y"), iz = column("z");
  const int ir = column("red"), ig = column("green"), ib = column("blue");
  const int il = column("label");
  if (ix < 0 || iy < 0 || iz < 0) throw FormatError(path.string() + ": missing coordinates");

  PlyData data;
  data.cloud.reserve(count);
  std::vector<double> row(props.size());
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& v : row) {
      if (!(in >> v)) throw FormatError(path.string() + ": truncated vertex list");
    }
    Vec3 color = Vec3::Zero();
    if (ir >= 0 && ig >= 0 && ib >= 0) color = Vec3(row[ir], row[ig], row[ib]) / 255.0;
    data.cloud.positions.emplace_back(row[ix], row[iy], row[iz]);
    data.cloud.colors.push_back(color);
    if (il >= 0) data.labels.push_back(static_cast<std::uint8_t>(row[il]));
  }
  return data;
}

}  // namespace slap
