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

#include "artisyn/decoder.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace artisyn {

using nlohmann::json;
using nn::Var;

int DecoderConfig::hop() const {
  int h = 1;
  for (int s : upsample_strides) h *= s;
  return h;
}

int DecoderConfig::stage_width(std::size_t stage) const {
  return std::max(1, base_width >> (stage + 1));
}

void DecoderConfig::validate() const {
  if (input_dim <= 0 || base_width <= 0) throw ConfigError("decoder: widths must be positive");
  if (upsample_strides.empty()) throw ConfigError("decoder: need at least one upsampling stage");
  for (int s : upsample_strides) {
    if (s <= 0) throw ConfigError("decoder: strides must be positive");
  }
  if (std::abs(hop() * feature_rate - audio_rate) > 1e-9 * audio_rate) {
    throw ConfigError("decoder: stride product must equal audio_rate / feature_rate");
  }
  if (resblock_kernels.empty() || resblock_dilations.empty()) {
    throw ConfigError("decoder: need residual kernels and dilations");
  }
  for (int k : resblock_kernels) {
    if (k <= 0 || k % 2 == 0) throw ConfigError("decoder: residual kernels must be odd");
  }
  for (int d : resblock_dilations) {
    if (d <= 0) throw ConfigError("decoder: dilations must be positive");
  }
  if (ar_input <= 0 || ar_output <= 0) throw ConfigError("decoder: AR sizes must be positive");
  for (int h : ar_hidden) {
    if (h <= 0) throw ConfigError("decoder: AR hidden widths must be positive");
  }
  if (chunk_frames <= 0) throw ConfigError("decoder: chunk size must be positive");
  if (pre_kernel % 2 == 0 || post_kernel % 2 == 0) throw ConfigError("decoder: pre/post kernels must be odd");
}

std::string DecoderConfig::to_json() const {
  json j;
  j["input_dim"] = input_dim;
  j["base_width"] = base_width;
  j["upsample_strides"] = upsample_strides;
  j["resblock_kernels"] = resblock_kernels;
  j["resblock_dilations"] = resblock_dilations;
  j["ar_input"] = ar_input;
  j["ar_hidden"] = ar_hidden;
  j["ar_output"] = ar_output;
  j["chunk_frames"] = chunk_frames;
  j["leaky_slope"] = leaky_slope;
  j["pre_kernel"] = pre_kernel;
  j["post_kernel"] = post_kernel;
  j["feature_rate"] = feature_rate;
  j["audio_rate"] = audio_rate;
  return j.dump();
}

DecoderConfig DecoderConfig::from_json(std::string_view text) {
  DecoderConfig c;
  try {
    const json j = json::parse(text);
    c.input_dim = j.at("input_dim").get<int>();
    c.base_width = j.at("base_width").get<int>();
    c.upsample_strides = j.at("upsample_strides").get<std::vector<int>>();
    c.resblock_kernels = j.at("resblock_kernels").get<std::vector<int>>();
    c.resblock_dilations = j.at("resblock_dilations").get<std::vector<int>>();
    c.ar_input = j.at("ar_input").get<int>();
    c.ar_hidden = j.at("ar_hidden").get<std::vector<int>>();
    c.ar_output = j.at("ar_output").get<int>();
    c.chunk_frames = j.at("chunk_frames").get<int>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    c.pre_kernel = j.at("pre_kernel").get<int>();
    c.post_kernel = j.at("post_kernel").get<int>();
    c.feature_rate = j.at("feature_rate").get<double>();
    c.audio_rate = j.at("audio_rate").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("decoder config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

std::string res_name(std::size_t stage, std::size_t block, std::size_t conv) {
  return "res" + std::to_string(stage) + "." + std::to_string(block) + ".conv" + std::to_string(conv);
}

int transpose_kernel(int stride) { return 2 * stride; }

}  // namespace

ChunkedVocoder::ChunkedVocoder(DecoderConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  declare_params();
  Rng rng(seed);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string& name = params_.name(i);
    Mat& v = params_.value(i);
    if (name.ends_with(".bias")) {
      nn::init_uniform(v, params_.value(i - 1).rows(), rng);
    } else {
      nn::init_uniform(v, v.rows(), rng);
    }
  }
  params_.round_to_float();
}

ChunkedVocoder::ChunkedVocoder(DecoderConfig config, nn::ParamSet params) : config_(std::move(config)) {
  config_.validate();
  declare_params();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string& name = params_.name(i);
    if (!params.contains(name)) throw FormatError("decoder: missing parameter " + name);
    const Mat& src = params.value(name);
    if (src.rows() != params_.value(i).rows() || src.cols() != params_.value(i).cols()) {
      throw FormatError("decoder: parameter " + name + " has the wrong shape");
    }
    params_.value(i) = src;
  }
  if (params.size() != params_.size()) throw FormatError("decoder: unexpected extra parameters");
}

ChunkedVocoder ChunkedVocoder::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "decoder") throw FormatError("checkpoint is a " + ckpt.kind + ", not a decoder");
  return ChunkedVocoder(DecoderConfig::from_json(ckpt.config_json), ckpt.params);
}

Checkpoint ChunkedVocoder::to_checkpoint() const { return Checkpoint{"decoder", config_.to_json(), params_}; }

void ChunkedVocoder::declare_params() {
  int in = config_.ar_input;
  for (std::size_t i = 0; i <= config_.ar_hidden.size(); ++i) {
    const int out = i < config_.ar_hidden.size() ? config_.ar_hidden[i] : config_.ar_output;
    params_.add("ar.layer" + std::to_string(i) + ".weight", in, out);
    params_.add("ar.layer" + std::to_string(i) + ".bias", 1, out);
    in = out;
  }
  const int cond = config_.input_dim + config_.ar_output;
  params_.add("pre.weight", config_.pre_kernel * cond, config_.base_width);
  params_.add("pre.bias", 1, config_.base_width);
  int width = config_.base_width;
  for (std::size_t s = 0; s < config_.upsample_strides.size(); ++s) {
    const int out = config_.stage_width(s);
    const int k = transpose_kernel(config_.upsample_strides[s]);
    params_.add("up" + std::to_string(s) + ".weight", width, k * out);
    params_.add("up" + std::to_string(s) + ".bias", 1, out);
    for (std::size_t b = 0; b < config_.resblock_kernels.size(); ++b) {
      for (std::size_t d = 0; d < config_.resblock_dilations.size(); ++d) {
        params_.add(res_name(s, b, d) + ".weight", config_.resblock_kernels[b] * out, out);
        params_.add(res_name(s, b, d) + ".bias", 1, out);
      }
    }
    width = out;
  }
  params_.add("post.weight", config_.post_kernel * width, 1);
  params_.add("post.bias", 1, 1);
}

Var ChunkedVocoder::ar_embedding(nn::Tape& tape, Var prev_audio) const {
  Var x = prev_audio;
  const std::size_t layers = config_.ar_hidden.size() + 1;
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string p = "ar.layer" + std::to_string(i);
    x = nn::add_row(nn::matmul(x, tape.param(p + ".weight")), tape.param(p + ".bias"));
    if (i + 1 < layers) x = nn::leaky_relu(x, config_.leaky_slope);
  }
  return x;
}

Var ChunkedVocoder::decode_chunk(nn::Tape& tape, Var features, Var prev_audio) const {
  if (prev_audio.rows() != 1 || prev_audio.cols() != config_.ar_input) {
    throw std::invalid_argument("decoder: previous audio must hold " + std::to_string(config_.ar_input) +
                                " samples");
  }
  return decode_from_embedding(tape, features, ar_embedding(tape, prev_audio));
}

Var ChunkedVocoder::decode_from_embedding(nn::Tape& tape, Var features, Var embedding) const {
  if (features.cols() != config_.input_dim) throw std::invalid_argument("decoder: feature width mismatch");
  if (embedding.rows() != 1 || embedding.cols() != config_.ar_output) {
    throw std::invalid_argument("decoder: AR embedding must be 1 x " + std::to_string(config_.ar_output));
  }
  const Eigen::Index frames = features.rows();
  const double slope = config_.leaky_slope;
  const std::vector<Var> parts{features, nn::repeat_row(embedding, frames)};
  Var x = nn::conv1d(nn::concat_cols(parts), tape.param("pre.weight"), tape.param("pre.bias"),
                     nn::Conv1dShape{config_.pre_kernel, 1, config_.pre_kernel / 2, 1});
  Eigen::Index length = frames;
  for (std::size_t s = 0; s < config_.upsample_strides.size(); ++s) {
    const int stride = config_.upsample_strides[s];
    const int k = transpose_kernel(stride);
    length *= stride;
    const std::string up = "up" + std::to_string(s);
    x = nn::conv_transpose1d(nn::leaky_relu(x, slope), tape.param(up + ".weight"), tape.param(up + ".bias"),
                             nn::ConvTranspose1dShape{k, stride, (k - stride) / 2, length});
    std::vector<Var> branches;
    for (std::size_t b = 0; b < config_.resblock_kernels.size(); ++b) {
      const int kernel = config_.resblock_kernels[b];
      Var y = x;
      for (std::size_t d = 0; d < config_.resblock_dilations.size(); ++d) {
        const int dil = config_.resblock_dilations[d];
        const std::string conv = res_name(s, b, d);
        const Var h = nn::conv1d(nn::leaky_relu(y, slope), tape.param(conv + ".weight"),
                                 tape.param(conv + ".bias"), nn::Conv1dShape{kernel, 1, dil * (kernel - 1) / 2, dil});
        y = nn::add(y, h);
      }
      branches.push_back(y);
    }
    x = nn::scale(nn::sum(branches), 1.0 / static_cast<double>(branches.size()));
  }
  x = nn::conv1d(nn::leaky_relu(x, slope), tape.param("post.weight"), tape.param("post.bias"),
                 nn::Conv1dShape{config_.post_kernel, 1, config_.post_kernel / 2, 1});
  return nn::tanh(x);
}

namespace {

Mat previous_samples(const FloatMatrix& wave, Eigen::Index end, int count) {
  Mat prev = Mat::Zero(1, count);
  for (int i = 0; i < count; ++i) {
    const Eigen::Index src = end - count + i;
    if (src >= 0 && src < wave.rows()) prev(0, i) = wave(src, 0);
  }
  return prev;
}

}  // namespace

Var ChunkedVocoder::teacher_forced(nn::Tape& tape, const AlignedSample& sample, Eigen::Index start,
                                   Eigen::Index frames) const {
  if (!sample.waveform) throw std::invalid_argument("decoder: sample " + sample.id + " has no waveform");
  if (start < 0 || frames <= 0 || start + frames > sample.target.frames()) {
    throw std::out_of_range("decoder: crop outside the sample");
  }
  const Mat features = sample.target.to_mat();
  const FloatMatrix& wave = sample.waveform->data();
  std::vector<Var> chunks;
  for (Eigen::Index c = start; c < start + frames; c += config_.chunk_frames) {
    const Eigen::Index n = std::min<Eigen::Index>(config_.chunk_frames, start + frames - c);
    const Var f = tape.constant(features.middleRows(c, n));
    const Var prev = tape.constant(previous_samples(wave, c * config_.hop(), config_.ar_input));
    chunks.push_back(decode_chunk(tape, f, prev));
  }
  return chunks.size() == 1 ? chunks.front() : nn::concat_rows(chunks);
}

std::vector<float> ChunkedVocoder::decode_chunk(const FrameSequence& features,
                                                std::span<const float> prev_audio) const {
  if (static_cast<int>(prev_audio.size()) != config_.ar_input) {
    throw std::invalid_argument("decoder: previous audio must hold " + std::to_string(config_.ar_input) +
                                " samples");
  }
  nn::Tape tape(&params_);
  Mat prev(1, config_.ar_input);
  for (int i = 0; i < config_.ar_input; ++i) prev(0, i) = prev_audio[static_cast<std::size_t>(i)];
  const Var out = decode_chunk(tape, tape.constant(features.to_mat()), tape.constant(std::move(prev)));
  const Mat& v = out.value();
  return std::vector<float>(v.data(), v.data() + v.size());
}

FrameSequence ChunkedVocoder::synthesize(const FrameSequence& features) const {
  if (features.frames() < 1) throw std::invalid_argument("decoder: no feature frames");
  const Mat all = features.to_mat();
  const int hop = config_.hop();
  FloatMatrix wave(features.frames() * hop, 1);
  for (Eigen::Index c = 0; c < features.frames(); c += config_.chunk_frames) {
    const Eigen::Index n = std::min<Eigen::Index>(config_.chunk_frames, features.frames() - c);
    nn::Tape tape(&params_);
    const Var out = decode_chunk(tape, tape.constant(all.middleRows(c, n)),
                                 tape.constant(previous_samples(wave, c * hop, config_.ar_input)));
    wave.middleRows(c * hop, n * hop) = out.value().cast<float>();
  }
  return FrameSequence(std::move(wave), config_.audio_rate);
}

Var decoder_recon_loss(Var pred, Var gt, const SpectralConfig& cfg) {
  if (pred.rows() != gt.rows() || pred.cols() != 1 || gt.cols() != 1) {
    throw std::invalid_argument("decoder loss: waveforms must be mono and equally long");
  }
  const Var wave = nn::mean_abs_diff(pred, gt);
  const Var spec = nn::mean_abs_diff(log_mel_spectrogram(pred, cfg, kReconMagnitudeEps),
                                     log_mel_spectrogram(gt, cfg, kReconMagnitudeEps));
  return nn::add(wave, spec);
}

double decoder_recon_loss(const FrameSequence& pred, const FrameSequence& gt, const SpectralConfig& cfg) {
  if (pred.frames() != gt.frames() || pred.channels() != 1 || gt.channels() != 1) {
    throw std::invalid_argument("decoder loss: waveforms must be mono and equally long");
  }
  nn::Tape tape;
  return decoder_recon_loss(tape.constant(pred.to_mat()), tape.constant(gt.to_mat()), cfg).value()(0, 0);
}

}  // namespace artisyn
