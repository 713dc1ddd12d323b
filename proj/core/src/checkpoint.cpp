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

#include "artisyn/checkpoint.hpp"

#include "binary_io.hpp"

#include <array>

namespace artisyn {

namespace {
constexpr std::array<char, 4> kMagic{'A', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::vector<char> encode_checkpoint(const Checkpoint& ckpt) {
  detail::ByteWriter w;
  w.bytes(kMagic.data(), kMagic.size());
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.kind.size()));
  w.bytes(ckpt.kind.data(), ckpt.kind.size());
  w.u64(ckpt.config_json.size());
  w.bytes(ckpt.config_json.data(), ckpt.config_json.size());
  w.u32(static_cast<std::uint32_t>(ckpt.params.size()));
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const std::string& name = ckpt.params.name(i);
    const Mat& v = ckpt.params.value(i);
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u64(static_cast<std::uint64_t>(v.rows()));
    w.u64(static_cast<std::uint64_t>(v.cols()));
    for (Eigen::Index k = 0; k < v.size(); ++k) w.f32(static_cast<float>(v.data()[k]));
  }
  return std::move(w.buffer());
}

Checkpoint decode_checkpoint(std::span<const char> bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw FormatError("checkpoint: bad magic bytes");
  }
  if (r.u32() != kVersion) throw FormatError("checkpoint: unsupported version");
  auto read_string = [&r](std::size_t n) {
    auto s = r.take(n);
    return std::string(s.begin(), s.end());
  };
  Checkpoint ckpt;
  ckpt.kind = read_string(r.u32());
  const std::uint64_t config_len = r.u64();
  if (config_len > r.remaining()) throw FormatError("checkpoint: truncated payload");
  ckpt.config_json = read_string(config_len);
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = read_string(r.u32());
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (cols != 0 && rows > r.remaining() / 4 / cols) throw FormatError("checkpoint: truncated payload");
    Mat v(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] = static_cast<double>(r.f32());
    ckpt.params.add(std::move(name), std::move(v));
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  detail::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file(path));
}

}  // namespace artisyn
