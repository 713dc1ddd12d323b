/*
 * Copyright 2026 The Artisyn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "artisyn/params.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace artisyn {

/// Named-parameter archive plus the serialized model config.
///
/// Layout (all integers little-endian):
///   "ACKP" | version u32 = 1 | kind: u32 length + bytes | config JSON: u64 length + bytes |
///   param count u32 | per param: name (u32 length + bytes), rows u64, cols u64,
///   rows * cols float32 values, row-major.
struct Checkpoint {
  std::string kind;  // "encoder" or "decoder"
  std::string config_json;
  nn::ParamSet params;
};

std::vector<char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const char> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace artisyn
