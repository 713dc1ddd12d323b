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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace artisyn {

struct TransformerConfig {
  int layers = 6;
  int hidden = 768;
  int heads = 8;
  int feedforward = 3072;
  double dropout = 0.2;
};

struct EncoderConfig {
  std::vector<ModalitySpec> modalities;
  int fusion_dim = 768;
  int unimodal_kernel = 5;
  std::vector<int> trunk_strides{2, 1, 1};
  int trunk_kernel = 3;
  TransformerConfig transformer;
  int output_dim = 256;

  /// Throws ConfigError unless widths line up and the trunk halves the frame rate.
  void validate() const;
  std::string to_json() const;
  static EncoderConfig from_json(std::string_view text);
};

/// Sums the given per-modality encodings and divides by the number of present
/// modalities. Absent slots must hold the zero-imputed encoding, which the bias-free
/// unimodal encoders guarantee is exactly zero; anything else is a logic error.
nn::Var fuse(std::span<const nn::Var> encodings, const PresenceMask& mask);

/// Value-level fusion: (sum over present encodings) / N. Absent slots may be empty.
FrameSequence fuse(std::span<const std::optional<FrameSequence>> encodings, const PresenceMask& mask);

/// Unimodal encoders -> presence-scaled fusion -> residual-conv + transformer trunk.
class MultimodalEncoder {
 public:
  /// Fresh parameters drawn from `seed`.
  MultimodalEncoder(EncoderConfig config, std::uint64_t seed);
  /// Adopts existing parameters; shapes must match the config.
  MultimodalEncoder(EncoderConfig config, nn::ParamSet params);

  static MultimodalEncoder from_checkpoint(const Checkpoint& ckpt);
  Checkpoint to_checkpoint() const;

  const EncoderConfig& config() const { return config_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  std::size_t modality_index(std::string_view modality) const;
  /// Names of the unimodal encoder parameters of one modality.
  std::vector<std::string> unimodal_param_names(std::string_view modality) const;

  // Graph builders. Dropout is active iff dropout_rng is non-null.
  nn::Var unimodal(nn::Tape& tape, std::size_t modality, nn::Var x) const;
  nn::Var shared(nn::Tape& tape, nn::Var z, Rng* dropout_rng) const;

  struct Trace {
    std::vector<nn::Var> unimodal;  // per modality in config order, zero-imputed if absent
    nn::Var fused;
    nn::Var output;
    PresenceMask mask;
  };
  Trace forward(nn::Tape& tape, const AlignedSample& sample, Rng* dropout_rng) const;

  // Value API.
  FrameSequence unimodal_encode(std::string_view modality, const FrameSequence& x) const;
  FrameSequence shared_encode(const FrameSequence& z, bool train_mode, Rng* rng = nullptr) const;
  FrameSequence encode(const AlignedSample& sample, bool train_mode, Rng* rng = nullptr) const;

 private:
  void declare_params();
  nn::Var transformer_layer(nn::Tape& tape, int layer, nn::Var x, Rng* dropout_rng) const;

  EncoderConfig config_;
  nn::ParamSet params_;
};

/// Sinusoidal positional table, frames x dim.
Mat positional_encoding(Eigen::Index frames, Eigen::Index dim);

}  // namespace artisyn
