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


#include "slap/checkpoint.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstring>
#include <fstream>

#include "slap/cloud_io.hpp"
#include "slap/config.hpp"
#include "slap/errors.hpp"
#include "slap/hash.hpp"

namespace slap {

using nlohmann::json;

namespace {

void write_string(std::ostream& out, const std::string& s) {
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  binio::write_bytes(out, s.data(), s.size());
}

std::string read_string(std::istream& in, std::size_t limit) {
  const auto n = binio::read<std::uint32_t>(in);
  if (n > limit) throw FormatError("checkpoint: string field too long");
  std::string s(n, '\0');
  binio::read_bytes(in, s.data(), n);
  return s;
}

}  // namespace

Checkpoint make_checkpoint(const std::string& kind, const json& config, const nn::ParameterStore& store) {
  Checkpoint c;
  c.kind = kind;
  c.config_json = config.dump();
  c.config_hash = sha256_hex(c.config_json);
  for (const auto& p : store.all()) c.tensors.emplace_back(p.name, p.value);
  return c;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  if (ckpt.config_hash.size() != 64) throw InvalidArgument("checkpoint: config hash must be 64 hex chars");
  binio::write_bytes(out, "SLCK", 4);
  binio::write<std::uint32_t>(out, kCheckpointVersion);
  write_string(out, ckpt.kind);
  write_string(out, ckpt.config_json);
  binio::write_bytes(out, ckpt.config_hash.data(), 64);
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, m] : ckpt.tensors) {
    write_string(out, name);
    binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    binio::write_bytes(out, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[4];
  binio::read_bytes(in, magic, 4);
  if (std::memcmp(magic, "SLCK", 4) != 0) throw FormatError("checkpoint: bad magic");
  if (binio::read<std::uint32_t>(in) != kCheckpointVersion) throw FormatError("checkpoint: unsupported version");
  Checkpoint c;
  c.kind = read_string(in, 64);
  c.config_json = read_string(in, 1 << 24);
  c.config_hash.resize(64);
  binio::read_bytes(in, c.config_hash.data(), 64);
  if (sha256_hex(c.config_json) != c.config_hash) throw FormatError("checkpoint: config hash does not match its config");
  const auto count = binio::read<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = read_string(in, 1024);
    const auto rows = binio::read<std::uint32_t>(in);
    const auto cols = binio::read<std::uint32_t>(in);
    if (static_cast<std::uint64_t>(rows) * cols > (1ULL << 28)) throw FormatError("checkpoint: tensor too large");
    ad::Matrix m(rows, cols);
    binio::read_bytes(in, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    c.tensors.emplace_back(std::move(name), std::move(m));
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    write_checkpoint(out, ckpt);
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  try {
    return read_checkpoint(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void apply_checkpoint(const Checkpoint& ckpt, const std::string& expected_hash, nn::ParameterStore& store) {
  if (ckpt.config_hash != expected_hash) {
    throw CheckpointMismatch("checkpoint config hash " + ckpt.config_hash + " differs from expected " + expected_hash);
  }
  auto& params = store.all();
  if (params.size() != ckpt.tensors.size()) throw CheckpointMismatch("checkpoint tensor count differs from the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, m] = ckpt.tensors[i];
    if (name != params[i].name) throw CheckpointMismatch("checkpoint tensor '" + name + "' where '" + params[i].name + "' expected");
    if (m.rows() != params[i].value.rows() || m.cols() != params[i].value.cols()) {
      throw CheckpointMismatch("checkpoint tensor '" + name + "' has the wrong shape");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = ckpt.tensors[i].second;
}

json ipm_checkpoint_config(const IpmModel& model) {
  return {{"kind", "ipm"}, {"model", ipm_model_json(model.config())}, {"vocabulary", model.vocab().words()}};
}

json apm_checkpoint_config(const ApmModel& model) {
  return {{"kind", "apm"}, {"model", apm_model_json(model.config())}, {"vocabulary", model.vocab().words()}};
}

Checkpoint ipm_checkpoint(const IpmModel& model) {
  return make_checkpoint("ipm", ipm_checkpoint_config(model), model.params());
}

Checkpoint apm_checkpoint(const ApmModel& model) {
  return make_checkpoint("apm", apm_checkpoint_config(model), model.params());
}

std::unique_ptr<IpmModel> ipm_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "ipm") throw CheckpointMismatch("expected an ipm checkpoint, got '" + ckpt.kind + "'");
  const json j = json::parse(ckpt.config_json);
  auto model = std::make_unique<IpmModel>(ipm_model_from_json(j.at("model")),
                                          Vocabulary(j.at("vocabulary").get<std::vector<std::string>>()), 0);
  apply_checkpoint(ckpt, sha256_hex(ipm_checkpoint_config(*model).dump()), model->params());
  return model;
}

std::unique_ptr<ApmModel> apm_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "apm") throw CheckpointMismatch("expected an apm checkpoint, got '" + ckpt.kind + "'");
  const json j = json::parse(ckpt.config_json);
  auto model = std::make_unique<ApmModel>(apm_model_from_json(j.at("model")),
                                          Vocabulary(j.at("vocabulary").get<std::vector<std::string>>()), 0);
  apply_checkpoint(ckpt, sha256_hex(apm_checkpoint_config(*model).dump()), model->params());
  return model;
}

void write_run_manifest(const std::filesystem::path& path, const RunManifest& m) {
  const json j = {{"command", m.command},
                  {"config_hash", m.config_hash},
                  {"dataset_hash", m.dataset_hash},
                  {"seed", m.seed},
                  {"code_version", std::string(kVersion)},
                  {"code_version_hash", m.code_version_hash},
                  {"extra", m.extra}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write run manifest " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing run manifest " + path.string());
}

RunLock::RunLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) throw IoError("run directory is locked by another run: " + dir.string());
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace slap
