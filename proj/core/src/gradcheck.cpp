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

#include "artisyn/gradcheck.hpp"

#include "artisyn/losses.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace artisyn {

using nn::Var;

namespace {

double evaluate(const nn::ParamSet& params, const LossBuilder& loss) {
  nn::Tape tape(&params);
  return loss(tape).value()(0, 0);
}

std::vector<Eigen::Index> probe_entries(Eigen::Index size, std::size_t max_entries, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(size));
  std::iota(idx.begin(), idx.end(), 0);
  if (max_entries == 0 || idx.size() <= max_entries) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(max_entries);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Mat random_mat(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

FrameSequence random_seq(Eigen::Index frames, Eigen::Index channels, double rate, Rng& rng) {
  return FrameSequence::from_mat(random_mat(frames, channels, rng), rate);
}

}  // namespace

GradCheckReport grad_check(nn::ParamSet& params, const LossBuilder& loss, const GradCheckOptions& options,
                           std::string component, const ParamFilter& filter) {
  if (options.step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");
  nn::Gradients grads(params);
  nn::BranchFreeze freeze;
  {
    nn::Tape tape(&params);
    tape.backward(loss(tape), grads);
  }
  GradCheckReport report;
  report.component = std::move(component);
  report.tolerance = options.tolerance;
  Rng rng(options.seed);
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (filter && !filter(params.name(p))) continue;
    GradCheckEntry entry{params.name(p), 0, 0.0};
    for (Eigen::Index i : probe_entries(params.value(p).size(), options.max_entries, rng)) {
      double& x = params.value(p).data()[i];
      const double saved = x;
      x = saved + options.step;
      freeze.replay();
      const double up = evaluate(params, loss);
      x = saved - options.step;
      freeze.replay();
      const double down = evaluate(params, loss);
      x = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = grads[p].data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
      entry.max_rel_error = std::max(entry.max_rel_error, std::abs(analytic - numeric) / denom);
      ++entry.checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.params.push_back(std::move(entry));
  }
  return report;
}

std::string GradCheckReport::to_json() const {
  nlohmann::ordered_json j;
  j["component"] = component;
  j["tolerance"] = tolerance;
  j["max_rel_error"] = max_rel_error;
  j["passed"] = passed();
  j["params"] = nlohmann::ordered_json::array();
  for (const auto& p : params) {
    j["params"].push_back({{"name", p.name}, {"checked", p.checked}, {"max_rel_error", p.max_rel_error}});
  }
  return j.dump(2);
}

std::string GradCheckReport::to_text() const {
  std::ostringstream out;
  std::size_t width = 9;
  for (const auto& p : params) width = std::max(width, p.name.size());
  for (const auto& p : params) {
    out << p.name << std::string(width - p.name.size() + 2, ' ') << p.checked << "  " << p.max_rel_error << '\n';
  }
  out << component << ": max rel error " << max_rel_error << " (tol " << tolerance << ") "
      << (passed() ? "PASS" : "FAIL") << '\n';
  return out.str();
}

GradCheckOptions gradcheck_defaults(std::string_view component) {
  GradCheckOptions o;
  if (component == "encoder" || component == "decoder") {
    o.tolerance = 1e-4;
    o.step = 3e-4;
  } else if (component == "losses") {
    o.tolerance = 1e-6;
    o.step = 1e-2;
  } else {
    throw ConfigError("gradcheck: unknown component '" + std::string(component) + "'");
  }
  return o;
}

EncoderConfig encoder_micro_config() {
  EncoderConfig c;
  c.modalities = {{"ema", 3, 100.0}, {"mri", 4, 100.0}, {"emg", 2, 100.0}};
  c.fusion_dim = 8;
  c.transformer = TransformerConfig{1, 8, 2, 16, 0.0};
  c.output_dim = 4;
  return c;
}

DecoderConfig decoder_micro_config() {
  DecoderConfig c;
  c.input_dim = 4;
  c.base_width = 4;
  c.resblock_kernels = {3};
  c.ar_hidden = {16, 16, 16, 16};
  c.ar_output = 8;
  c.chunk_frames = 4;
  return c;
}

GradCheckReport grad_check_encoder(const GradCheckOptions& options) {
  MultimodalEncoder model(encoder_micro_config(), options.seed);
  Rng rng(options.seed + 1);
  constexpr Eigen::Index kFrames = 8;
  AlignedSample sample{"gradcheck", {}, random_seq(kFrames / 2, 4, 50.0, rng), std::nullopt};
  for (const auto& m : model.config().modalities) {
    sample.modalities[m.name] = random_seq(kFrames, m.channels, 100.0, rng);
  }
  const LossBuilder loss = [&](nn::Tape& tape) {
    const auto trace = model.forward(tape, sample, nullptr);
    Var total = losses::l1(trace.output, tape.constant(sample.target.to_mat()));
    if (auto l2 = losses::deep_feature(trace.unimodal, trace.mask)) total = nn::add(total, *l2);
    return total;
  };
  return grad_check(model.params(), loss, options, "encoder");
}

namespace {

void merge(GradCheckReport& into, const GradCheckReport& part) {
  into.params.insert(into.params.end(), part.params.begin(), part.params.end());
  into.max_rel_error = std::max(into.max_rel_error, part.max_rel_error);
}

}  // namespace

GradCheckReport grad_check_decoder(const GradCheckOptions& options) {
  ChunkedVocoder model(decoder_micro_config(), options.seed);
  const DecoderConfig& cfg = model.config();
  Rng rng(options.seed + 1);
  constexpr Eigen::Index kChunks = 2;
  const Eigen::Index frames = kChunks * cfg.chunk_frames;
  const Eigen::Index samples = frames * cfg.hop();
  const ParamFilter ar_only = [](const std::string& n) { return n.starts_with("ar."); };
  const ParamFilter body_only = [](const std::string& n) { return !n.starts_with("ar."); };

  // AR module.
  const Mat prev = random_mat(1, cfg.ar_input, rng) * 0.3;
  const Mat ar_readout = random_mat(1, cfg.ar_output, rng);
  const LossBuilder ar_loss = [&](nn::Tape& tape) {
    return nn::matmul_nt(tape.constant(ar_readout), model.ar_embedding(tape, tape.constant(prev)));
  };
  GradCheckReport report = grad_check(model.params(), ar_loss, options, "decoder", ar_only);

  // Conv stack, with the per-chunk embeddings as free inputs.
  nn::ParamSet body = model.params();
  for (Eigen::Index c = 0; c < kChunks; ++c) {
    body.add("ar_embedding.chunk" + std::to_string(c), random_mat(1, cfg.ar_output, rng));
  }
  const Mat features = random_mat(frames, cfg.input_dim, rng);
  const Mat readout = random_mat(1, samples, rng);
  const LossBuilder body_loss = [&](nn::Tape& tape) {
    std::vector<Var> chunks;
    for (Eigen::Index c = 0; c < kChunks; ++c) {
      const Var f = tape.constant(features.middleRows(c * cfg.chunk_frames, cfg.chunk_frames));
      chunks.push_back(model.decode_from_embedding(tape, f, tape.param("ar_embedding.chunk" + std::to_string(c))));
    }
    return nn::matmul(tape.constant(readout), nn::concat_rows(chunks));
  };
  merge(report, grad_check(body, body_loss, options, "decoder", body_only));

  // Reconstruction loss.
  nn::ParamSet wave;
  wave.add("recon_loss.pred", random_mat(samples, 1, rng) * 0.3);
  const Mat gt = random_mat(samples, 1, rng) * 0.3;
  const SpectralConfig spectral;
  const LossBuilder recon = [&](nn::Tape& tape) {
    return decoder_recon_loss(tape.param(std::size_t{0}), tape.constant(gt), spectral);
  };
  merge(report, grad_check(wave, recon, options, "decoder"));
  return report;
}

GradCheckReport grad_check_losses(const GradCheckOptions& options) {
  Rng rng(options.seed);
  nn::ParamSet params;
  params.add("pred", random_mat(6, 3, rng));
  params.add("target", random_mat(6, 3, rng));
  for (int m = 0; m < 3; ++m) params.add("encoding" + std::to_string(m), random_mat(12, 5, rng));
  const PresenceMask mask{{true, true, true}};
  const LossBuilder loss = [&](nn::Tape& tape) {
    std::vector<Var> enc;
    for (int m = 0; m < 3; ++m) enc.push_back(tape.param("encoding" + std::to_string(m)));
    return nn::add(losses::l1(tape.param("pred"), tape.param("target")), *losses::deep_feature(enc, mask));
  };
  return grad_check(params, loss, options, "losses");
}

}  // namespace artisyn
