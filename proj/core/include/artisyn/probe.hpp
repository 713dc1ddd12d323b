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

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace artisyn {

struct LinearMap {
  Mat weight;  // out_dim x in_dim
  Mat bias;    // 1 x out_dim
  double ridge = 0.0;

  Mat apply(const Mat& x) const;
};

/// Minimizes |Y - X W^T - b|^2 + ridge |W|^2 via the normal equations on centered data.
/// With ridge 0 a (numerically) singular system is an error.
LinearMap fit_linear(const Mat& x, const Mat& y, double ridge);

struct PearsonResult {
  double mean = 0.0;  // over non-degenerate channels
  std::vector<std::optional<double>> per_channel;  // nullopt where either side has zero variance
  std::size_t degenerate = 0;
};

/// Per-channel Pearson correlation. Throws if every channel is degenerate or frames < 2.
PearsonResult pearson(const Mat& pred, const Mat& truth);

struct ProbeConfig {
  std::size_t train_frames = 2000;
  std::size_t test_frames = 200;
  double ridge = 1e-6;
  std::uint64_t seed = 0;
  Split split = Split::train;
};

struct ProbeEntry {
  std::string input;
  std::string output;
  PearsonResult correlation;
  std::size_t train_frames = 0;
  std::size_t test_frames = 0;
  bool same_representation = false;
};

struct ProbeReport {
  ProbeConfig config;
  std::vector<ProbeEntry> entries;

  const ProbeEntry& at(std::string_view input, std::string_view output) const;
  std::string to_json() const;
  /// Inputs as rows, outputs as columns; same-representation cells shown as "-".
  std::string to_table() const;
};

/// Names usable as representations: every modality plus "target".
std::vector<std::string> representation_names(const Dataset& dataset);

/// For each (input, output) pair: pools frames of the split's utterances that carry both
/// representations (target upsampled to the common rate), draws disjoint train and test
/// frames, fits a linear map and reports test-set Pearson correlation.
ProbeReport correlation_table(const Dataset& dataset, std::span<const std::pair<std::string, std::string>> pairs,
                              const ProbeConfig& config);

}  // namespace artisyn
