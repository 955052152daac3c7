// Copyright 2026 The GRIP Engine Authors
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

#include "grip/checkpoint.hpp"

#include "grip/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace grip
{
namespace
{
constexpr char kMagic[8] = {'G', 'R', 'I', 'P', 'C', 'K', 'P', 'T'};
constexpr std::string_view kDtype = "f64";

template <class T>
void put_le(std::vector<std::uint8_t> & out, T value)
{
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

class Reader
{
public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <class T>
  T le()
  {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }

  std::string str(std::size_t n)
  {
    need(n);
    std::string s(reinterpret_cast<const char *>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

private:
  void need(std::size_t n) const
  {
    if (pos_ + n > bytes_.size()) throw DataError("checkpoint truncated at byte " + std::to_string(pos_));
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};
}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParameterSet & tensors)
{
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto & [name, t] : tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(static_cast<std::uint8_t>(kDtype.size()));
    out.insert(out.end(), kDtype.begin(), kDtype.end());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put_le<std::uint64_t>(out, d);
  }
  for (const auto & nt : tensors) {
    for (double v : nt.tensor.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

ParameterSet decode_checkpoint(std::span<const std::uint8_t> bytes)
{
  Reader in(bytes);
  if (in.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const auto version = in.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = in.le<std::uint32_t>();
  ParameterSet out;
  std::vector<Shape> shapes;
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor nt;
    nt.name = in.str(in.le<std::uint32_t>());
    const auto dtype = in.str(in.le<std::uint8_t>());
    if (dtype != kDtype) throw DataError("checkpoint entry '" + nt.name + "' has unsupported dtype " + dtype);
    Shape shape(in.le<std::uint32_t>());
    for (auto & d : shape) d = static_cast<std::size_t>(in.le<std::uint64_t>());
    shapes.push_back(std::move(shape));
    out.push_back(std::move(nt));
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::vector<double> values(shape_numel(shapes[k]));
    for (auto & v : values) v = std::bit_cast<double>(in.le<std::uint64_t>());
    out[k].tensor = Tensor(shapes[k], std::move(values));
  }
  if (!in.done()) throw DataError("checkpoint has trailing bytes");
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path & checkpoint)
{
  auto p = checkpoint;
  p += ".json";
  return p;
}

void save_checkpoint(
  const std::filesystem::path & path, const ParameterSet & tensors, const nlohmann::json & config)
{
  const auto bytes = encode_checkpoint(tensors);
  std::ofstream bin(path, std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot write checkpoint " + path.string());
  bin.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!bin) throw IoError("short write to " + path.string());

  std::ofstream side(sidecar_path(path), std::ios::trunc);
  if (!side) throw IoError("cannot write " + sidecar_path(path).string());
  side << config.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path & path)
{
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  Checkpoint ck;
  ck.tensors = decode_checkpoint(bytes);

  std::ifstream side(sidecar_path(path));
  if (!side) throw IoError("missing configuration sidecar " + sidecar_path(path).string());
  try {
    ck.config = nlohmann::json::parse(side);
  } catch (const nlohmann::json::exception & e) {
    throw DataError("bad checkpoint sidecar " + sidecar_path(path).string() + ": " + e.what());
  }
  return ck;
}
}  // namespace grip
