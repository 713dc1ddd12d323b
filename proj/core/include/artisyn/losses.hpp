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
#include "artisyn/seqdata.hpp"

#include <optional>
#include <span>
#include <string>

namespace artisyn {

struct LossBreakdown {
  double l1 = 0.0;
  double l2 = 0.0;
  double lambda_l2 = 0.0;
  double total = 0.0;
};

/// Mean absolute difference between prediction and target.
double l1_loss(const FrameSequence& pred, const FrameSequence& target);

/// Mean over unordered present pairs (m, n) of mean |e_m - e_n|; 0 when fewer
/// than two modalities are present. Absent slots may be empty.
double deep_feature_loss(std::span<const std::optional<FrameSequence>> encodings, const PresenceMask& mask);

/// total = l1 + lambda_l2 * l2. Throws std::invalid_argument for negative lambda_l2.
LossBreakdown total_loss(const FrameSequence& pred, const FrameSequence& target,
                         std::span<const std::optional<FrameSequence>> encodings, const PresenceMask& mask,
                         double lambda_l2);

namespace losses {

nn::Var l1(nn::Var pred, nn::Var target);
/// Returns nullopt when fewer than two modalities are present.
std::optional<nn::Var> deep_feature(std::span<const nn::Var> encodings, const PresenceMask& mask);

}  // namespace losses

/// One JSON line: {"step":..,"l1":..,"l2":..,"lambda_l2":..,"total":..}
std::string loss_log_line(long step, const LossBreakdown& loss);

}  // namespace artisyn
