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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace artisyn {

enum class ObservationMap { linear, tanh_linear, rectified_derivative };

std::string_view to_string(ObservationMap map);
ObservationMap observation_map_from_string(std::string_view text);

struct WorldModality {
  std::string name;
  int channels = 0;
  double rate = 100.0;
  ObservationMap map = ObservationMap::linear;
  double noise = 0.0;
};

/// A set of modalities recorded together for one utterance, chosen with `weight`.
struct PresenceGroup {
  std::vector<std::string> modalities;
  double weight = 1.0;
};

struct WorldConfig {
  int latent_dim = 8;
  int sinusoids = 3;
  double min_frequency = 0.5;
  double max_frequency = 8.0;
  std::vector<WorldModality> modalities{
      {"ema", 12, 100.0, ObservationMap::linear, 0.1},
      {"mri", 24, 250.0 / 3.0, ObservationMap::tanh_linear, 0.1},
      {"emg", 8, 1000.0, ObservationMap::rectified_derivative, 0.1},
  };
  int target_dim = 16;
  double target_rate = 50.0;
  double common_rate = 100.0;
  bool waveform = true;
  double audio_rate = 16000.0;
  std::size_t utterances = 100;
  double min_duration = 2.0;
  double max_duration = 4.0;
  double dev_fraction = 0.1;
  double test_fraction = 0.1;
  /// Presence for train utterances; empty means every modality.
  std::vector<PresenceGroup> presence;
  /// Presence for dev/test utterances; empty means every modality.
  std::vector<PresenceGroup> eval_presence;
  std::uint64_t seed = 0;

  void validate() const;
  std::string to_json() const;
  static WorldConfig from_json(std::string_view text);
};

/// One presence group per modality: every utterance carries exactly one.
std::vector<PresenceGroup> one_modality_per_utterance(const WorldConfig& config);

/// K channels at the common rate, each a sum of random-phase sinusoids scaled to unit variance.
FrameSequence latent_trajectory(const WorldConfig& config, std::uint64_t seed, double duration);

struct WorldDataset {
  WorldConfig config;
  DatasetManifest manifest;  // paths relative to the dataset directory
  std::vector<RawEntry> raw;
  std::vector<FrameSequence> latents;
  std::map<std::string, Mat> observation_matrices;  // channels x K
  Mat target_matrix;                                // target_dim x K

  /// Samples prepared in memory, as load_dataset would return them after write_world.
  Dataset prepare() const;
};

WorldDataset generate_world(const WorldConfig& config);

/// Writes manifest.json, one AFS file per sequence and the ground-truth sidecar world.json.
/// Returns the manifest path.
std::filesystem::path write_world(const WorldDataset& world, const std::filesystem::path& dir);

}  // namespace artisyn
