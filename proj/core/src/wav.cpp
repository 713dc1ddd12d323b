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

#include "artisyn/wav.hpp"

#include "binary_io.hpp"

#include <algorithm>
#include <cmath>

namespace artisyn {

std::vector<char> encode_wav_pcm16(const FrameSequence& wav) {
  if (wav.channels() != 1) throw std::invalid_argument("wav export: sequence must be mono");
  const double r = std::round(wav.rate());
  if (std::abs(wav.rate() - r) > 1e-9 || r < 1.0 || r > 4294967295.0) {
    throw std::invalid_argument("wav export: rate must be a whole number of Hz");
  }
  const auto rate = static_cast<std::uint32_t>(r);
  const auto data_bytes = static_cast<std::uint64_t>(wav.frames()) * 2;
  if (data_bytes > 0xFFFFFFFFull - 36) throw std::invalid_argument("wav export: too long for RIFF");
  detail::ByteWriter w;
  w.bytes("RIFF", 4);
  w.u32(static_cast<std::uint32_t>(36 + data_bytes));
  w.bytes("WAVEfmt ", 8);
  w.u32(16);
  w.u16(1);  // PCM
  w.u16(1);  // mono
  w.u32(rate);
  w.u32(rate * 2);
  w.u16(2);
  w.u16(16);
  w.bytes("data", 4);
  w.u32(static_cast<std::uint32_t>(data_bytes));
  for (Eigen::Index i = 0; i < wav.frames(); ++i) {
    const double v = std::clamp(static_cast<double>(wav.data()(i, 0)), -1.0, 1.0);
    w.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(v * 32767.0))));
  }
  return std::move(w.buffer());
}

void write_wav_pcm16(const FrameSequence& wav, const std::filesystem::path& path) {
  const auto bytes = encode_wav_pcm16(wav);
  detail::write_file(path, bytes);
}

}  // namespace artisyn
