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

#include "artisyn/seqdata.hpp"

#include "binary_io.hpp"

#include <array>
#include <fstream>

namespace artisyn {

namespace detail {

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const char> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace detail

namespace {
constexpr std::array<char, 4> kAfsMagic{'A', 'F', 'S', '1'};
}

std::vector<char> encode_afs(const FrameSequence& seq) {
  detail::ByteWriter w;
  w.bytes(kAfsMagic.data(), kAfsMagic.size());
  w.u32(static_cast<std::uint32_t>(seq.channels()));
  w.f64(seq.rate());
  w.u64(static_cast<std::uint64_t>(seq.frames()));
  const FloatMatrix& d = seq.data();
  for (Eigen::Index i = 0; i < d.size(); ++i) w.f32(d.data()[i]);
  return std::move(w.buffer());
}

FrameSequence decode_afs(std::span<const char> bytes) {
  detail::ByteReader r(bytes, "AFS");
  auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), kAfsMagic.begin())) {
    throw FormatError("AFS: bad magic bytes");
  }
  const std::uint32_t channels = r.u32();
  const double rate = r.f64();
  const std::uint64_t frames = r.u64();
  if (channels == 0 || frames == 0) throw FormatError("AFS: empty sequence");
  const std::uint64_t available = r.remaining() / 4;
  if (frames > available / channels) throw FormatError("AFS: truncated payload");
  if (frames * channels * 4 != r.remaining()) throw FormatError("AFS: trailing bytes after payload");
  FloatMatrix data(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(channels));
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = r.f32();
  try {
    return FrameSequence(std::move(data), rate);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("AFS: ") + e.what());
  }
}

void write_afs(const FrameSequence& seq, const std::filesystem::path& path) {
  detail::write_file(path, encode_afs(seq));
}

FrameSequence read_afs(const std::filesystem::path& path) {
  const std::vector<char> bytes = detail::read_file(path);
  return decode_afs(bytes);
}

}  // namespace artisyn
