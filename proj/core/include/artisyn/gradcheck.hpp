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
#include "artisyn/decoder.hpp"
#include "artisyn/encoder.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace artisyn {

struct GradCheckOptions {
  double tolerance = 1e-4;
  /// Central-difference step. Branches of piecewise ops are frozen at the
  /// base point, so the step need not be tiny to avoid kinks.
  double step = 3e-4;
  /// Denominator floor of the relative error.
  double floor = 1e-7;
  /// Entries probed per tensor; 0 checks every entry.
  std::size_t max_entries = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::string component;
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  std::vector<GradCheckEntry> params;

  /// Strict comparison, so a zero tolerance can never pass.
  bool passed() const { return max_rel_error < tolerance; }
  std::string to_json() const;
  std::string to_text() const;
};

using LossBuilder = std::function<nn::Var(nn::Tape&)>;
using ParamFilter = std::function<bool(const std::string&)>;

/// Compares tape gradients of `loss` against central differences,
/// rel = |a - n| / max(|a|, |n|, floor). `loss` must build the same op sequence
/// on every call.
GradCheckReport grad_check(nn::ParamSet& params, const LossBuilder& loss, const GradCheckOptions& options,
                           std::string component, const ParamFilter& filter = {});

/// Tolerance and step used for a component ("encoder", "decoder", "losses").
/// The losses are piecewise linear, so with frozen branches a long step is exact.
GradCheckOptions gradcheck_defaults(std::string_view component);

EncoderConfig encoder_micro_config();
DecoderConfig decoder_micro_config();

/// L1 + deep-feature loss through the encoder micro config, three modalities present.
GradCheckReport grad_check_encoder(const GradCheckOptions& options);
/// Decoder micro config, checked in three parts whose chain rule composes to
/// the full gradient: the AR module under a readout of its embedding, the conv
/// stack over two chunks with the embeddings as free inputs, and the
/// reconstruction loss against a free waveform. (Through the whole stack the AR
/// gradients sit below what double-precision differences can resolve.)
GradCheckReport grad_check_decoder(const GradCheckOptions& options);
/// L1 + deep-feature loss on free random tensors.
GradCheckReport grad_check_losses(const GradCheckOptions& options);

}  // namespace artisyn
