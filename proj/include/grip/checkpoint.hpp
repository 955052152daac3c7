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

#ifndef GRIP__CHECKPOINT_HPP_
#define GRIP__CHECKPOINT_HPP_

#include "grip/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace grip
{
struct NamedTensor
{
  std::string name;
  Tensor tensor;
};

using ParameterSet = std::vector<NamedTensor>;

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container layout (all integers little-endian):
///   "GRIPCKPT" | u32 version | u32 count
///   count x { u32 name_len, name, u8 dtype_len, dtype ("f64"), u32 rank, u64 dims[rank] }
///   payloads in manifest order, little-endian IEEE-754 binary64
std::vector<std::uint8_t> encode_checkpoint(const ParameterSet & tensors);
ParameterSet decode_checkpoint(std::span<const std::uint8_t> bytes);

struct Checkpoint
{
  ParameterSet tensors;
  nlohmann::json config;
};

std::filesystem::path sidecar_path(const std::filesystem::path & checkpoint);

/// Writes the binary container and `<path>.json` with the model configuration.
void save_checkpoint(
  const std::filesystem::path & path, const ParameterSet & tensors, const nlohmann::json & config);
Checkpoint load_checkpoint(const std::filesystem::path & path);
}  // namespace grip

#endif  // GRIP__CHECKPOINT_HPP_
