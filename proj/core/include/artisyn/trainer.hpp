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

#include "artisyn/adam.hpp"
#include "artisyn/checkpoint.hpp"
#include "artisyn/decoder.hpp"
#include "artisyn/encoder.hpp"
#include "artisyn/losses.hpp"
#include "artisyn/seqdata.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace artisyn {

struct TrainConfig {
  nn::AdamConfig adam;
  std::size_t batch_size = 64;
  double min_crop_s = 0.6;
  double max_crop_s = 2.0;
  long steps = 1000;
  std::uint64_t seed = 0;
  double lambda_l2 = 1.0;
  std::optional<std::string> finetune_modality;
  /// Checkpoint and dev-evaluation cadence in steps; 0 means only at the end.
  long checkpoint_every = 0;
  bool dropout = true;

  /// Decoder schedule: batch 32, 0.16-1.0 s crops.
  static TrainConfig decoder_defaults();
  void validate() const;
};

struct DevPoint {
  long step = 0;
  double value = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossBreakdown> losses;  // one per step
  std::vector<DevPoint> dev;
};

/// Where a run writes its artifacts; nullopt keeps everything in memory.
using RunDir = std::optional<std::filesystem::path>;

/// Crop-batched multimodal training on total_loss with per-sample presence masks.
/// Writes loss_log.jsonl, dev_log.jsonl and encoder checkpoints under `out`.
TrainResult pretrain_encoder(const EncoderConfig& model, const TrainConfig& config, const Dataset& dataset,
                             const RunDir& out = std::nullopt);

/// Continues from `init` on config.finetune_modality alone: every other modality is
/// masked absent and the optimizer starts fresh.
TrainResult finetune_encoder(const Checkpoint& init, const TrainConfig& config, const Dataset& dataset,
                             const RunDir& out = std::nullopt);

/// Teacher-forced training of the vocoder on the reconstruction loss.
TrainResult train_decoder(const DecoderConfig& model, const TrainConfig& config, const Dataset& dataset,
                          const RunDir& out = std::nullopt);

/// Mean L1 between encoder output and target over whole (even-trimmed) utterances
/// of `split`. With `modality`, only utterances carrying it count and it is the
/// sole input.
double encoder_split_l1(const MultimodalEncoder& model, const Dataset& dataset, Split split,
                        const std::optional<std::string>& modality = std::nullopt);

/// Mean over utterances of the split of the mean pairwise |e_m - e_n| between the
/// unimodal encodings of the modalities present.
double unimodal_gap(const MultimodalEncoder& model, const Dataset& dataset, Split split);

/// Mean teacher-forced reconstruction loss over whole utterances of `split`.
double decoder_split_loss(const ChunkedVocoder& model, const Dataset& dataset, Split split,
                          const SpectralConfig& spectral = {});

std::string decoder_log_line(long step, double recon);

}  // namespace artisyn
