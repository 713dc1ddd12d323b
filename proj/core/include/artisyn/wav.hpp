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

#include "artisyn/seqdata.hpp"

#include <filesystem>
#include <vector>

namespace artisyn {

/// 16-bit PCM RIFF/WAVE bytes of a mono sequence; samples are clipped to [-1, 1].
std::vector<char> encode_wav_pcm16(const FrameSequence& wav);
void write_wav_pcm16(const FrameSequence& wav, const std::filesystem::path& path);

}  // namespace artisyn
