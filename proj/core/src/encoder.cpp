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

#include "artisyn/encoder.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace artisyn {

using nlohmann::json;
using nn::Var;

void EncoderConfig::validate() const {
  if (modalities.empty()) throw ConfigError("encoder: at least one modality required");
  for (const ModalitySpec& m : modalities) {
    if (m.channels <= 0) throw ConfigError("encoder: modality " + m.name + " needs channels > 0");
  }
  if (fusion_dim <= 0 || output_dim <= 0) throw ConfigError("encoder: widths must be positive");
  if (unimodal_kernel <= 0 || unimodal_kernel % 2 == 0) {
    throw ConfigError("encoder: unimodal kernel must be odd so lengths are preserved");
  }
  if (trunk_kernel <= 0 || trunk_kernel % 2 == 0) throw ConfigError("encoder: trunk kernel must be odd");
  int product = 1;
  for (int s : trunk_strides) {
    if (s <= 0) throw ConfigError("encoder: trunk strides must be positive");
    product *= s;
  }
  if (product != 2) throw ConfigError("encoder: trunk strides must multiply to 2");
  if (transformer.hidden != fusion_dim) {
    throw ConfigError("encoder: transformer hidden width must equal fusion_dim");
  }
  if (transformer.layers < 0 || transformer.heads <= 0 || transformer.hidden % transformer.heads != 0) {
    throw ConfigError("encoder: transformer heads must divide hidden width");
  }
  if (transformer.feedforward <= 0) throw ConfigError("encoder: feedforward width must be positive");
  if (transformer.dropout < 0.0 || transformer.dropout >= 1.0) {
    throw ConfigError("encoder: dropout must lie in [0, 1)");
  }
}

std::string EncoderConfig::to_json() const {
  json j;
  j["modalities"] = json::array();
  for (const ModalitySpec& m : modalities) {
    j["modalities"].push_back({{"name", m.name}, {"channels", m.channels}, {"native_rate", m.native_rate}});
  }
  j["fusion_dim"] = fusion_dim;
  j["unimodal_kernel"] = unimodal_kernel;
  j["trunk_strides"] = trunk_strides;
  j["trunk_kernel"] = trunk_kernel;
  j["transformer"] = {{"layers", transformer.layers},   {"hidden", transformer.hidden},
                      {"heads", transformer.heads},     {"feedforward", transformer.feedforward},
                      {"dropout", transformer.dropout}};
  j["output_dim"] = output_dim;
  return j.dump();
}

EncoderConfig EncoderConfig::from_json(std::string_view text) {
  EncoderConfig c;
  try {
    const json j = json::parse(text);
    c.modalities.clear();
    for (const json& m : j.at("modalities")) {
      c.modalities.push_back({m.at("name").get<std::string>(), m.at("channels").get<int>(),
                              m.value("native_rate", 100.0)});
    }
    c.fusion_dim = j.at("fusion_dim").get<int>();
    c.unimodal_kernel = j.at("unimodal_kernel").get<int>();
    c.trunk_strides = j.at("trunk_strides").get<std::vector<int>>();
    c.trunk_kernel = j.at("trunk_kernel").get<int>();
    const json& t = j.at("transformer");
    c.transformer = {t.at("layers").get<int>(), t.at("hidden").get<int>(), t.at("heads").get<int>(),
                     t.at("feedforward").get<int>(), t.at("dropout").get<double>()};
    c.output_dim = j.at("output_dim").get<int>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("encoder config: ") + e.what());
  }
  c.validate();
  return c;
}

Var fuse(std::span<const Var> encodings, const PresenceMask& mask) {
  if (encodings.size() != mask.size()) throw std::invalid_argument("fuse: mask size mismatch");
  const std::size_t n = mask.count();
  if (n == 0) throw std::invalid_argument("fuse: no modality present");
  for (std::size_t i = 0; i < encodings.size(); ++i) {
    if (!mask[i] && !encodings[i].value().isZero(0.0)) {
      throw std::logic_error("fuse: absent modality produced a non-zero encoding");
    }
  }
  return nn::scale(nn::sum(encodings), 1.0 / static_cast<double>(n));
}

FrameSequence fuse(std::span<const std::optional<FrameSequence>> encodings, const PresenceMask& mask) {
  if (encodings.size() != mask.size()) throw std::invalid_argument("fuse: mask size mismatch");
  const std::size_t n = mask.count();
  if (n == 0) throw std::invalid_argument("fuse: no modality present");
  std::optional<Mat> total;
  double rate = 0.0;
  for (std::size_t i = 0; i < encodings.size(); ++i) {
    if (!mask[i]) continue;
    if (!encodings[i]) throw std::invalid_argument("fuse: present modality without encoding");
    Mat v = encodings[i]->to_mat();
    if (!total) {
      total = std::move(v);
      rate = encodings[i]->rate();
      continue;
    }
    if (v.rows() != total->rows() || v.cols() != total->cols()) {
      throw std::invalid_argument("fuse: encodings differ in shape");
    }
    *total += v;
  }
  return FrameSequence::from_mat(*total / static_cast<double>(n), rate);
}

Mat positional_encoding(Eigen::Index frames, Eigen::Index dim) {
  Mat pe(frames, dim);
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(t) * freq;
      pe(t, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

namespace {

std::string block_name(std::size_t b) { return "trunk.block" + std::to_string(b); }
std::string layer_name(int l) { return "transformer.layer" + std::to_string(l); }

}  // namespace

MultimodalEncoder::MultimodalEncoder(EncoderConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  declare_params();
  Rng rng(seed);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string& name = params_.name(i);
    Mat& v = params_.value(i);
    if (name.ends_with(".gamma")) {
      v.setOnes();
    } else if (name.ends_with(".beta")) {
      v.setZero();
    } else if (name.ends_with(".bias")) {
      // Biases share the fan-in of their weight, which precedes them.
      nn::init_uniform(v, params_.value(i - 1).rows(), rng);
    } else {
      nn::init_uniform(v, v.rows(), rng);
    }
  }
  params_.round_to_float();
}

MultimodalEncoder::MultimodalEncoder(EncoderConfig config, nn::ParamSet params) : config_(std::move(config)) {
  config_.validate();
  declare_params();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string& name = params_.name(i);
    if (!params.contains(name)) throw FormatError("encoder: missing parameter " + name);
    const Mat& src = params.value(name);
    if (src.rows() != params_.value(i).rows() || src.cols() != params_.value(i).cols()) {
      throw FormatError("encoder: parameter " + name + " has the wrong shape");
    }
    params_.value(i) = src;
  }
  if (params.size() != params_.size()) throw FormatError("encoder: unexpected extra parameters");
}

MultimodalEncoder MultimodalEncoder::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "encoder") throw FormatError("checkpoint is a " + ckpt.kind + ", not an encoder");
  return MultimodalEncoder(EncoderConfig::from_json(ckpt.config_json), ckpt.params);
}

Checkpoint MultimodalEncoder::to_checkpoint() const { return Checkpoint{"encoder", config_.to_json(), params_}; }

void MultimodalEncoder::declare_params() {
  const int d = config_.fusion_dim;
  for (const ModalitySpec& m : config_.modalities) {
    params_.add("unimodal." + m.name + ".weight", config_.unimodal_kernel * m.channels, d);
  }
  for (std::size_t b = 0; b < config_.trunk_strides.size(); ++b) {
    for (int j = 0; j < 3; ++j) {
      const std::string conv = block_name(b) + ".conv" + std::to_string(j);
      params_.add(conv + ".weight", config_.trunk_kernel * d, d);
      params_.add(conv + ".bias", 1, d);
    }
    if (config_.trunk_strides[b] != 1) {
      params_.add(block_name(b) + ".skip.weight", d, d);
      params_.add(block_name(b) + ".skip.bias", 1, d);
    }
  }
  const int ff = config_.transformer.feedforward;
  for (int l = 0; l < config_.transformer.layers; ++l) {
    const std::string p = layer_name(l);
    for (const char* proj : {"q", "k", "v", "o"}) {
      params_.add(p + ".attn." + proj + ".weight", d, d);
      params_.add(p + ".attn." + proj + ".bias", 1, d);
    }
    params_.add(p + ".norm1.gamma", 1, d);
    params_.add(p + ".norm1.beta", 1, d);
    params_.add(p + ".ff1.weight", d, ff);
    params_.add(p + ".ff1.bias", 1, ff);
    params_.add(p + ".ff2.weight", ff, d);
    params_.add(p + ".ff2.bias", 1, d);
    params_.add(p + ".norm2.gamma", 1, d);
    params_.add(p + ".norm2.beta", 1, d);
  }
  params_.add("proj.weight", d, config_.output_dim);
  params_.add("proj.bias", 1, config_.output_dim);
}

std::size_t MultimodalEncoder::modality_index(std::string_view modality) const {
  for (std::size_t i = 0; i < config_.modalities.size(); ++i) {
    if (config_.modalities[i].name == modality) return i;
  }
  throw std::invalid_argument("encoder: unknown modality " + std::string(modality));
}

std::vector<std::string> MultimodalEncoder::unimodal_param_names(std::string_view modality) const {
  return {"unimodal." + config_.modalities[modality_index(modality)].name + ".weight"};
}

Var MultimodalEncoder::unimodal(nn::Tape& tape, std::size_t modality, Var x) const {
  const ModalitySpec& spec = config_.modalities.at(modality);
  if (x.cols() != spec.channels) {
    throw std::invalid_argument("encoder: modality " + spec.name + " expects " +
                                std::to_string(spec.channels) + " channels");
  }
  const int k = config_.unimodal_kernel;
  return nn::conv1d(x, tape.param("unimodal." + spec.name + ".weight"), std::nullopt,
                    nn::Conv1dShape{k, 1, k / 2, 1});
}

Var MultimodalEncoder::transformer_layer(nn::Tape& tape, int layer, Var x, Rng* rng) const {
  const std::string p = layer_name(layer);
  const TransformerConfig& tc = config_.transformer;
  auto linear = [&](Var in, const std::string& name) {
    return nn::add_row(nn::matmul(in, tape.param(name + ".weight")), tape.param(name + ".bias"));
  };
  auto drop = [&](Var v) { return rng ? nn::dropout(v, tc.dropout, *rng) : v; };

  const Var q = linear(x, p + ".attn.q");
  const Var k = linear(x, p + ".attn.k");
  const Var v = linear(x, p + ".attn.v");
  const Eigen::Index dh = tc.hidden / tc.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  for (int h = 0; h < tc.heads; ++h) {
    const Var qh = nn::col_slice(q, h * dh, dh);
    const Var kh = nn::col_slice(k, h * dh, dh);
    const Var vh = nn::col_slice(v, h * dh, dh);
    const Var attn = nn::softmax_rows(nn::scale(nn::matmul_nt(qh, kh), inv_sqrt));
    heads.push_back(nn::matmul(attn, vh));
  }
  const Var attended = drop(linear(nn::concat_cols(heads), p + ".attn.o"));
  x = nn::layer_norm(nn::add(x, attended), tape.param(p + ".norm1.gamma"), tape.param(p + ".norm1.beta"));
  const Var hidden = drop(nn::relu(linear(x, p + ".ff1")));
  const Var ff = drop(linear(hidden, p + ".ff2"));
  return nn::layer_norm(nn::add(x, ff), tape.param(p + ".norm2.gamma"), tape.param(p + ".norm2.beta"));
}

Var MultimodalEncoder::shared(nn::Tape& tape, Var z, Rng* dropout_rng) const {
  if (z.cols() != config_.fusion_dim) throw std::invalid_argument("encoder: fused input has wrong width");
  if (z.rows() % 2 != 0) throw std::invalid_argument("encoder: trunk input needs an even frame count");
  const int k = config_.trunk_kernel;
  Var x = z;
  for (std::size_t b = 0; b < config_.trunk_strides.size(); ++b) {
    const int stride = config_.trunk_strides[b];
    const std::string p = block_name(b);
    Var y = x;
    for (int j = 0; j < 3; ++j) {
      const std::string conv = p + ".conv" + std::to_string(j);
      y = nn::conv1d(y, tape.param(conv + ".weight"), tape.param(conv + ".bias"),
                     nn::Conv1dShape{k, j == 0 ? stride : 1, k / 2, 1});
    }
    Var skip = x;
    if (stride != 1) {
      skip = nn::conv1d(x, tape.param(p + ".skip.weight"), tape.param(p + ".skip.bias"),
                        nn::Conv1dShape{1, stride, 0, 1});
    }
    x = nn::relu(nn::add(y, skip));
  }
  x = nn::add_const(x, positional_encoding(x.rows(), x.cols()));
  for (int l = 0; l < config_.transformer.layers; ++l) x = transformer_layer(tape, l, x, dropout_rng);
  return nn::add_row(nn::matmul(x, tape.param("proj.weight")), tape.param("proj.bias"));
}

MultimodalEncoder::Trace MultimodalEncoder::forward(nn::Tape& tape, const AlignedSample& sample,
                                                    Rng* dropout_rng) const {
  Trace trace;
  trace.mask = presence_of(sample, config_.modalities);
  if (trace.mask.count() == 0) throw std::invalid_argument("encoder: sample " + sample.id + " has no modality");
  const Eigen::Index frames = sample.modality_frames();
  for (std::size_t m = 0; m < config_.modalities.size(); ++m) {
    const ModalitySpec& spec = config_.modalities[m];
    Mat x;
    if (trace.mask[m]) {
      const FrameSequence& seq = *sample.modalities.at(spec.name);
      if (seq.frames() != frames) throw std::invalid_argument("encoder: modality lengths differ");
      x = seq.to_mat();
    } else {
      x = Mat::Zero(frames, spec.channels);
    }
    trace.unimodal.push_back(unimodal(tape, m, tape.constant(std::move(x))));
  }
  trace.fused = fuse(trace.unimodal, trace.mask);
  trace.output = shared(tape, trace.fused, dropout_rng);
  return trace;
}

FrameSequence MultimodalEncoder::unimodal_encode(std::string_view modality, const FrameSequence& x) const {
  nn::Tape tape(&params_);
  const Var out = unimodal(tape, modality_index(modality), tape.constant(x.to_mat()));
  return FrameSequence::from_mat(out.value(), x.rate());
}

FrameSequence MultimodalEncoder::shared_encode(const FrameSequence& z, bool train_mode, Rng* rng) const {
  if (train_mode && rng == nullptr) throw std::invalid_argument("encoder: train mode needs a dropout rng");
  nn::Tape tape(&params_);
  const Var out = shared(tape, tape.constant(z.to_mat()), train_mode ? rng : nullptr);
  return FrameSequence::from_mat(out.value(), z.rate() / 2.0);
}

FrameSequence MultimodalEncoder::encode(const AlignedSample& sample, bool train_mode, Rng* rng) const {
  if (train_mode && rng == nullptr) throw std::invalid_argument("encoder: train mode needs a dropout rng");
  nn::Tape tape(&params_);
  const Trace trace = forward(tape, sample, train_mode ? rng : nullptr);
  double rate = 0.0;
  for (const auto& [name, seq] : sample.modalities) {
    if (seq) rate = seq->rate();
  }
  return FrameSequence::from_mat(trace.output.value(), rate / 2.0);
}

}  // namespace artisyn
