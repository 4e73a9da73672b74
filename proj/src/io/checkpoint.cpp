// Copyright 2026 The trajcast Authors
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

#include "trajcast/io/checkpoint.hpp"

#include "trajcast/error.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace trajcast::io
{

namespace
{

constexpr std::array<char, 8> kMagic{'T', 'R', 'J', 'C', 'K', 'P', 'T', '\0'};

template <class U>
void put_le(std::ostream & out, U value)
{
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <class U>
U get_le(std::istream & in)
{
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char *>(bytes.data()), bytes.size());
  if (!in) throw ParseError("checkpoint: truncated header", 0);
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_checkpoint(std::ostream & out, const Checkpoint & checkpoint)
{
  nlohmann::json manifest;
  manifest["version"] = checkpoint.version;
  manifest["config"] = checkpoint.config;
  manifest["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto & [name, t] : checkpoint.params) {
    manifest["tensors"].push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.size() * sizeof(double);
  }
  const std::string text = manifest.dump();

  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, checkpoint.version);
  put_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto & [name, t] : checkpoint.params) {
    for (double v : t.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw DataError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream & in)
{
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ParseError("checkpoint: bad magic", 0);
  Checkpoint cp;
  cp.version = get_le<std::uint32_t>(in);
  if (cp.version != Checkpoint::kVersion) {
    throw ParseError("checkpoint: unsupported version " + std::to_string(cp.version), 0);
  }
  const auto len = get_le<std::uint64_t>(in);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError("checkpoint: truncated manifest", 0);

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception & e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what(), 0);
  }
  cp.config = manifest.value("config", nlohmann::json::object());

  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  for (const auto & entry : manifest.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<ndgrad::Shape>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const std::size_t count = ndgrad::shape_size(shape);
    if (offset + count * sizeof(double) > blob.size()) {
      throw ParseError("checkpoint: tensor '" + name + "' extends past end of data", 0);
    }
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t bits = 0;
      for (std::size_t b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[offset + i * 8 + b])) << (8 * b);
      }
      data[i] = std::bit_cast<double>(bits);
    }
    cp.params.add(name, ndgrad::Tensor(shape, std::move(data)));
  }
  return cp;
}

void save_checkpoint(const std::filesystem::path & path, const Checkpoint & checkpoint)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace trajcast::io
