// Copyright 2026 The Dropfield Authors
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

#include "dropfield/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "dropfield/common.hpp"
#include "dropfield/config.hpp"

namespace dropfield {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'D', 'F', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("checkpoint: truncated file");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  require(ckpt.params.layout() == field_layout(ckpt.field),
          "serialize_checkpoint: parameters do not match the field config");
  json slices = json::array();
  for (const ad::Slice& s : ckpt.params.layout().slices()) {
    slices.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}});
  }
  const json header = {{"field", to_json(ckpt.field)},
                       {"iteration", ckpt.iteration},
                       {"seed", ckpt.seed},
                       {"samples_per_ray", ckpt.samples_per_ray},
                       {"background", {ckpt.background[0], ckpt.background[1], ckpt.background[2]}},
                       {"slices", slices},
                       {"count", ckpt.params.size()}};
  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  put_le<std::uint64_t>(out, ckpt.params.size());
  for (double v : ckpt.params.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw IoError("checkpoint: bad magic, not a checkpoint file");
  }
  std::size_t pos = sizeof kMagic;
  const auto header_len = get_le<std::uint32_t>(bytes, pos);
  if (pos + header_len > bytes.size()) throw IoError("checkpoint: truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(pos, header_len));
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: corrupt header: ") + e.what());
  }
  pos += header_len;
  Checkpoint ckpt;
  try {
    ckpt.field = parse_field_config(header.at("field"));
    ckpt.iteration = header.at("iteration").get<int>();
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.samples_per_ray = header.at("samples_per_ray").get<int>();
    const auto bg = header.at("background").get<std::vector<double>>();
    if (bg.size() != 3) throw IoError("checkpoint: background needs 3 values");
    ckpt.background = {bg[0], bg[1], bg[2]};
    ckpt.params = ad::ParamVector(field_layout(ckpt.field));
    const json& slices = header.at("slices");
    const auto& expected = ckpt.params.layout().slices();
    if (slices.size() != expected.size()) throw IoError("checkpoint: slice table mismatch");
    for (std::size_t k = 0; k < expected.size(); ++k) {
      if (slices[k].at("name").get<std::string>() != expected[k].name ||
          slices[k].at("rows").get<Eigen::Index>() != expected[k].rows ||
          slices[k].at("cols").get<Eigen::Index>() != expected[k].cols) {
        throw IoError("checkpoint: slice '" + expected[k].name + "' does not match the field config");
      }
    }
    if (header.at("count").get<std::size_t>() != ckpt.params.size()) {
      throw IoError("checkpoint: parameter count mismatch");
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
  const auto count = get_le<std::uint64_t>(bytes, pos);
  if (count != ckpt.params.size() || bytes.size() - pos != count * 8) {
    throw IoError("checkpoint: payload size mismatch");
  }
  for (std::size_t i = 0; i < count; ++i) {
    ckpt.params[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  }
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace dropfield
