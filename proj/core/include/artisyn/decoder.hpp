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
#include "artisyn/checkpoint.hpp"
#include "artisyn/seqdata.hpp"
#include "artisyn/spectral.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace artisyn {

struct DecoderConfig {
  int input_dim = 256;
  int base_width = 64;
  std::vector<int> upsample_strides{8, 5, 4, 2};
  std::vector<int> resblock_kernels{3, 7, 11};
  std::vector<int> resblock_dilations{1, 3, 5};
  int ar_input = 512;
  std::vector<int> ar_hidden{256, 256, 256, 256};
  int ar_output = 128;
  int chunk_frames = 25;
  double leaky_slope = 0.1;
  int pre_kernel = 7;
  int post_kernel = 7;
  double feature_rate = 50.0;
  double audio_rate = 16000.0;

  /// Samples generated per feature frame (product of upsample strides).
  int hop() const;
  /// Channel width after upsampling stage i: base_width halved per stage, at least 1.
  int stage_width(std::size_t stage) const;
  void validate() const;
  std::string to_json() const;
  static DecoderConfig from_json(std::string_view text);
};

/// Upsampling conv vocoder conditioned on an embedding of the previous chunk's audio.
class ChunkedVocoder {
 public:
  ChunkedVocoder(DecoderConfig config, std::uint64_t seed);
  ChunkedVocoder(DecoderConfig config, nn::ParamSet params);

  static ChunkedVocoder from_checkpoint(const Checkpoint& ckpt);
  Checkpoint to_checkpoint() const;

  const DecoderConfig& config() const { return config_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }

  /// features: frames x input_dim; prev_audio: 1 x ar_input. Returns (frames * hop) x 1.
  nn::Var decode_chunk(nn::Tape& tape, nn::Var features, nn::Var prev_audio) const;
  /// 1 x ar_output embedding of the previous chunk's audio.
  nn::Var ar_embedding(nn::Tape& tape, nn::Var prev_audio) const;
  /// Conv stack conditioned on a given AR embedding.
  nn::Var decode_from_embedding(nn::Tape& tape, nn::Var features, nn::Var embedding) const;

  /// Teacher-forced decode of feature frames [start, start + frames) of `sample`:
  /// each chunk is conditioned on the ground-truth samples preceding it.
  nn::Var teacher_forced(nn::Tape& tape, const AlignedSample& sample, Eigen::Index start,
                         Eigen::Index frames) const;

  std::vector<float> decode_chunk(const FrameSequence& features, std::span<const float> prev_audio) const;

  /// Free-running chunked synthesis; each chunk sees the last ar_input generated samples.
  FrameSequence synthesize(const FrameSequence& features) const;

 private:
  void declare_params();

  DecoderConfig config_;
  nn::ParamSet params_;
};

/// Reconstruction loss: mean |pred - gt| + mean |logmel(pred) - logmel(gt)|.
nn::Var decoder_recon_loss(nn::Var pred, nn::Var gt, const SpectralConfig& cfg);
double decoder_recon_loss(const FrameSequence& pred, const FrameSequence& gt, const SpectralConfig& cfg);

/// Magnitude smoothing used inside the reconstruction loss.
inline constexpr double kReconMagnitudeEps = 1e-12;

}  // namespace artisyn
