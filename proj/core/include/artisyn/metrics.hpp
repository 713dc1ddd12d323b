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

#include "artisyn/decoder.hpp"
#include "artisyn/encoder.hpp"
#include "artisyn/seqdata.hpp"
#include "artisyn/spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace artisyn {

struct MelCepstrumConfig {
  int frame_length = 1024;
  int hop = 256;
  int mel_bands = 64;
  int order = 13;  // coefficients 1..order, c0 excluded
  double sample_rate = 16000.0;
  double log_floor = 1e-10;

  void validate() const;
  SpectralConfig spectral() const;
};

/// Orthonormal DCT-II matrix, n x n, row k = basis function k.
Mat dct2_matrix(int n);

/// Windowed magnitude -> mel energies -> log -> orthonormal DCT-II, keeping 1..order.
/// Output rate is sample_rate / hop.
FrameSequence mel_cepstrum(const FrameSequence& wav, const MelCepstrumConfig& cfg);

/// Mean over frames of (10 / ln 10) * sqrt(2 * sum_d (a_d - b_d)^2).
double mcd_from_cepstra(const Mat& a, const Mat& b);
double mcd(const FrameSequence& a, const FrameSequence& b, const MelCepstrumConfig& cfg);

struct UtteranceScore {
  std::string id;
  double mcd = 0.0;
  double feature_l1 = 0.0;
};

struct EvalReport {
  std::string split;
  std::optional<std::string> input_modality;  // nullopt: every present modality
  std::vector<UtteranceScore> utterances;
  double mean_mcd = 0.0;
  double mean_feature_l1 = 0.0;

  std::string to_json() const;
  std::string to_table() const;
};

struct EvalOptions {
  Split split = Split::test;
  /// Encode from this modality alone (others treated as absent).
  std::optional<std::string> input_modality;
  MelCepstrumConfig cepstrum;
};

/// Encodes each utterance of the split, vocodes the predicted features and scores
/// MCD against the reference waveform and L1 against the reference features.
EvalReport evaluate(const MultimodalEncoder& encoder, const ChunkedVocoder& decoder, const Dataset& dataset,
                    const EvalOptions& options);

/// Keeps only `modality` present; throws if the sample lacks it.
AlignedSample only_modality(const AlignedSample& sample, const std::string& modality);

}  // namespace artisyn
