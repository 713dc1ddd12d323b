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

#include "artisyn/autograd.hpp"

#include <span>
#include <vector>

namespace artisyn {

struct SpectralConfig {
  int frame_length = 1024;
  int hop = 256;
  int mel_bands = 64;
  double sample_rate = 16000.0;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 1e-10;

  void validate() const;
};

/// Periodic Hann window.
std::vector<double> hann_window(int length);

/// HTK-mel triangular filterbank without area normalization: (n/2 + 1) x bands.
Mat mel_filterbank(const SpectralConfig& cfg);

/// floor((samples - frame_length) / hop) + 1, or 0 when shorter than one frame.
Eigen::Index frame_count(Eigen::Index samples, int frame_length, int hop);

/// |rfft(window * frame)| for every full frame; frames x (frame_length / 2 + 1).
Mat stft_magnitude(std::span<const double> signal, std::span<const double> window, int hop);

/// log(max(mel energies, floor)) of a mono signal; frames x mel_bands.
Mat log_mel_spectrogram(std::span<const double> signal, const SpectralConfig& cfg);

namespace nn {

/// Differentiable STFT magnitude of an L x 1 signal, sqrt(re^2 + im^2 + eps).
Var stft_magnitude(Var signal, std::span<const double> window, int hop, double eps);

}  // namespace nn

/// Differentiable log-mel spectrogram with magnitude smoothing `eps`.
nn::Var log_mel_spectrogram(nn::Var signal, const SpectralConfig& cfg, double eps);

}  // namespace artisyn
