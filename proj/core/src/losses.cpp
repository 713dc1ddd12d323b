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

#include "artisyn/losses.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <vector>

namespace artisyn {

namespace losses {

nn::Var l1(nn::Var pred, nn::Var target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw std::invalid_argument("l1 loss: prediction and target shapes differ");
  }
  return nn::mean_abs_diff(pred, target);
}

std::optional<nn::Var> deep_feature(std::span<const nn::Var> encodings, const PresenceMask& mask) {
  if (encodings.size() != mask.size()) throw std::invalid_argument("deep feature loss: mask size mismatch");
  std::vector<nn::Var> present;
  for (std::size_t i = 0; i < encodings.size(); ++i) {
    if (mask[i]) present.push_back(encodings[i]);
  }
  if (present.size() < 2) return std::nullopt;
  std::vector<nn::Var> pairs;
  for (std::size_t m = 0; m < present.size(); ++m) {
    for (std::size_t n = m + 1; n < present.size(); ++n) {
      if (present[m].rows() != present[n].rows() || present[m].cols() != present[n].cols()) {
        throw std::invalid_argument("deep feature loss: encodings differ in shape");
      }
      pairs.push_back(nn::mean_abs_diff(present[m], present[n]));
    }
  }
  // Dividing by C(N, 2) keeps the scale independent of how many views are present.
  return nn::scale(nn::sum(pairs), 1.0 / static_cast<double>(pairs.size()));
}

}  // namespace losses

double l1_loss(const FrameSequence& pred, const FrameSequence& target) {
  nn::Tape tape;
  return losses::l1(tape.constant(pred.to_mat()), tape.constant(target.to_mat())).value()(0, 0);
}

double deep_feature_loss(std::span<const std::optional<FrameSequence>> encodings, const PresenceMask& mask) {
  if (encodings.size() != mask.size()) throw std::invalid_argument("deep feature loss: mask size mismatch");
  nn::Tape tape;
  std::vector<nn::Var> vars;
  for (std::size_t i = 0; i < encodings.size(); ++i) {
    if (mask[i] && !encodings[i]) throw std::invalid_argument("deep feature loss: present modality without encoding");
    vars.push_back(mask[i] ? tape.constant(encodings[i]->to_mat()) : tape.constant(Mat::Zero(1, 1)));
  }
  const auto l2 = losses::deep_feature(vars, mask);
  return l2 ? l2->value()(0, 0) : 0.0;
}

LossBreakdown total_loss(const FrameSequence& pred, const FrameSequence& target,
                         std::span<const std::optional<FrameSequence>> encodings, const PresenceMask& mask,
                         double lambda_l2) {
  if (!(lambda_l2 >= 0.0)) throw std::invalid_argument("total loss: lambda_l2 must be >= 0");
  LossBreakdown out;
  out.l1 = l1_loss(pred, target);
  out.l2 = deep_feature_loss(encodings, mask);
  out.lambda_l2 = lambda_l2;
  out.total = lambda_l2 == 0.0 ? out.l1 : out.l1 + lambda_l2 * out.l2;
  return out;
}

std::string loss_log_line(long step, const LossBreakdown& loss) {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["l1"] = loss.l1;
  j["l2"] = loss.l2;
  j["lambda_l2"] = loss.lambda_l2;
  j["total"] = loss.total;
  return j.dump();
}

}  // namespace artisyn
