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

#include "artisyn/tensor.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace artisyn {

/// A channels x time block of 32-bit samples at a fixed frame rate.
///
/// Storage is time-major (row = frame). Construction enforces the invariants:
/// at least one frame and one channel, every value finite, rate > 0.
class FrameSequence {
 public:
  FrameSequence(FloatMatrix data, double rate);

  static FrameSequence zeros(Eigen::Index frames, Eigen::Index channels, double rate);
  static FrameSequence from_mat(const Mat& data, double rate);

  Eigen::Index frames() const { return data_.rows(); }
  Eigen::Index channels() const { return data_.cols(); }
  double rate() const { return rate_; }
  double duration() const { return static_cast<double>(frames()) / rate_; }

  const FloatMatrix& data() const { return data_; }
  Mat to_mat() const { return data_.cast<double>(); }

  /// Frames [start, start + count).
  FrameSequence slice(Eigen::Index start, Eigen::Index count) const;

  friend bool operator==(const FrameSequence& a, const FrameSequence& b) {
    return a.rate_ == b.rate_ && a.data_.rows() == b.data_.rows() &&
           a.data_.cols() == b.data_.cols() && a.data_ == b.data_;
  }

 private:
  FloatMatrix data_;
  double rate_;
};

struct ModalitySpec {
  std::string name;
  int channels = 0;
  double native_rate = 100.0;
};

struct TargetSpec {
  int channels = 0;
  double rate = 50.0;
};

/// One utterance with temporally aligned views.
///
/// Absent modalities are std::nullopt, never zero-filled sequences.
struct AlignedSample {
  std::string id;
  std::map<std::string, std::optional<FrameSequence>> modalities;
  FrameSequence target;
  std::optional<FrameSequence> waveform;

  /// Frame count shared by all present modalities (0 if none present).
  Eigen::Index modality_frames() const;
  std::size_t present_count() const;
  bool has(std::string_view modality) const;
  /// Throws std::invalid_argument if the alignment invariants do not hold.
  void validate() const;
};

/// Per-modality presence flags, ordered like the model's modality list.
struct PresenceMask {
  std::vector<bool> present;

  std::size_t count() const;
  std::size_t size() const { return present.size(); }
  bool operator[](std::size_t i) const { return present[i]; }
};

PresenceMask presence_of(const AlignedSample& sample, std::span<const ModalitySpec> order);

enum class Split { train, dev, test };
std::string_view to_string(Split split);
Split split_from_string(std::string_view text);

struct ManifestEntry {
  std::string id;
  Split split = Split::train;
  std::map<std::string, std::optional<std::string>> modality_paths;  // nullopt = ABSENT
  std::string target_path;
  std::optional<std::string> waveform_path;
};

struct DatasetManifest {
  std::vector<ModalitySpec> modality_specs;
  TargetSpec target_spec;
  double common_rate = 100.0;
  double waveform_rate = 16000.0;
  std::vector<ManifestEntry> entries;

  const ModalitySpec& spec(std::string_view modality) const;
  void validate() const;
};

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(std::string_view text);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Raw per-entry sequences at their native rates, as stored on disk.
struct RawEntry {
  std::map<std::string, std::optional<FrameSequence>> modalities;
  FrameSequence target;
  std::optional<FrameSequence> waveform;
};

/// Loaded dataset: samples resampled to the manifest's common rate.
struct Dataset {
  DatasetManifest manifest;
  std::vector<AlignedSample> samples;
  std::vector<Split> splits;

  std::vector<AlignedSample> select(Split split) const;
  std::vector<std::string> modality_names() const;
};

/// Resamples each present modality to the common rate, trims all views to a
/// shared length and trims the target (and waveform) to the aligned half-rate window.
AlignedSample prepare_sample(const DatasetManifest& manifest, const ManifestEntry& entry,
                             RawEntry raw);

Dataset prepare_dataset(DatasetManifest manifest, std::vector<RawEntry> raw);

/// Drops a trailing odd modality frame so the sample can be encoded whole; the
/// target keeps T/2 frames and the waveform the matching number of samples.
AlignedSample trim_even(const AlignedSample& sample);
Dataset load_dataset(const std::filesystem::path& manifest_path);

// AFS binary sequence files.
void write_afs(const FrameSequence& seq, const std::filesystem::path& path);
FrameSequence read_afs(const std::filesystem::path& path);
std::vector<char> encode_afs(const FrameSequence& seq);
FrameSequence decode_afs(std::span<const char> bytes);

/// Per-channel linear interpolation onto a new frame grid.
///
/// Output frame count is round(duration * target_rate); frame i sits at time
/// i / target_rate and times past the last input frame clamp to it.
FrameSequence resample_linear(const FrameSequence& seq, double target_rate);

struct Batch {
  std::vector<AlignedSample> items;
  Eigen::Index window_frames = 0;  // at modality rate, always even
};

/// Draws batch_size samples (with replacement) and crops each to one shared
/// window length drawn uniformly in [min_s, max_s].
Batch crop_batch(std::span<const AlignedSample> samples, std::size_t batch_size, double min_s,
                 double max_s, Rng& rng);

/// A decoder training window: which sample, and which feature frames.
/// The aligned waveform window starts at start_frame * samples-per-frame.
struct DecoderCrop {
  std::size_t sample_index = 0;
  Eigen::Index start_frame = 0;
};

struct DecoderBatch {
  std::vector<DecoderCrop> items;
  Eigen::Index window_frames = 0;  // at feature rate
};

DecoderBatch crop_decoder_batch(std::span<const AlignedSample> samples, std::size_t batch_size,
                                double min_s, double max_s, Rng& rng);

}  // namespace artisyn
