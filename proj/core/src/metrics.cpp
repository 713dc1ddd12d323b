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

#include "artisyn/metrics.hpp"

#include "artisyn/losses.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace artisyn {

void MelCepstrumConfig::validate() const {
  spectral().validate();
  if (order < 1 || order >= mel_bands) throw ConfigError("mel cepstrum: order must be in [1, mel_bands)");
}

SpectralConfig MelCepstrumConfig::spectral() const {
  SpectralConfig s;
  s.frame_length = frame_length;
  s.hop = hop;
  s.mel_bands = mel_bands;
  s.sample_rate = sample_rate;
  s.fmin = 0.0;
  s.fmax = sample_rate / 2.0;
  s.log_floor = log_floor;
  return s;
}

Mat dct2_matrix(int n) {
  Mat d(n, n);
  for (int k = 0; k < n; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
    for (int i = 0; i < n; ++i) d(k, i) = scale * std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * n));
  }
  return d;
}

FrameSequence mel_cepstrum(const FrameSequence& wav, const MelCepstrumConfig& cfg) {
  cfg.validate();
  if (wav.channels() != 1) throw std::invalid_argument("mel_cepstrum: waveform must be mono");
  if (std::abs(wav.rate() - cfg.sample_rate) > 1e-9 * cfg.sample_rate) {
    throw std::invalid_argument("mel_cepstrum: waveform rate does not match the config");
  }
  if (wav.frames() < cfg.frame_length) throw std::invalid_argument("mel_cepstrum: waveform shorter than one frame");
  const Mat signal = wav.to_mat();
  const Mat logmel = log_mel_spectrogram(std::span<const double>(signal.data(), signal.size()), cfg.spectral());
  const Mat cep = logmel * dct2_matrix(cfg.mel_bands).transpose();
  return FrameSequence::from_mat(cep.middleCols(1, cfg.order), cfg.sample_rate / cfg.hop);
}

double mcd_from_cepstra(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("mcd: cepstra shapes differ");
  if (a.rows() == 0) throw std::invalid_argument("mcd: no frames");
  const double k = 10.0 / std::numbers::ln10;
  double total = 0.0;
  for (Eigen::Index f = 0; f < a.rows(); ++f) total += k * std::sqrt(2.0 * (a.row(f) - b.row(f)).squaredNorm());
  return total / static_cast<double>(a.rows());
}

double mcd(const FrameSequence& a, const FrameSequence& b, const MelCepstrumConfig& cfg) {
  if (a.frames() != b.frames()) throw std::invalid_argument("mcd: waveform lengths differ");
  return mcd_from_cepstra(mel_cepstrum(a, cfg).to_mat(), mel_cepstrum(b, cfg).to_mat());
}

AlignedSample only_modality(const AlignedSample& sample, const std::string& modality) {
  if (!sample.has(modality)) throw std::invalid_argument("sample " + sample.id + " lacks modality " + modality);
  AlignedSample out = sample;
  for (auto& [name, seq] : out.modalities) {
    if (name != modality) seq.reset();
  }
  return out;
}

EvalReport evaluate(const MultimodalEncoder& encoder, const ChunkedVocoder& decoder, const Dataset& dataset,
                    const EvalOptions& options) {
  if (encoder.config().output_dim != decoder.config().input_dim) {
    throw ConfigError("evaluate: encoder output width does not match decoder input width");
  }
  EvalReport report;
  report.split = std::string(to_string(options.split));
  report.input_modality = options.input_modality;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (dataset.splits[i] != options.split) continue;
    AlignedSample s = trim_even(dataset.samples[i]);
    if (options.input_modality) {
      if (!s.has(*options.input_modality)) continue;
      s = only_modality(s, *options.input_modality);
    }
    if (!s.waveform) throw std::invalid_argument("evaluate: sample " + s.id + " has no waveform");
    const FrameSequence features = encoder.encode(s, false);
    const FrameSequence wav = decoder.synthesize(features);
    const FrameSequence ref = s.waveform->slice(0, std::min(s.waveform->frames(), wav.frames()));
    const FrameSequence gen = wav.slice(0, ref.frames());
    report.utterances.push_back({s.id, mcd(gen, ref, options.cepstrum), l1_loss(features, s.target)});
  }
  if (report.utterances.empty()) throw std::invalid_argument("evaluate: split " + report.split + " has no usable utterances");
  for (const auto& u : report.utterances) {
    report.mean_mcd += u.mcd;
    report.mean_feature_l1 += u.feature_l1;
  }
  report.mean_mcd /= static_cast<double>(report.utterances.size());
  report.mean_feature_l1 /= static_cast<double>(report.utterances.size());
  return report;
}

namespace {

constexpr const char* kExternal = "external - not computed";

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "artisyn-eval/1";
  j["split"] = split;
  j["input_modality"] = input_modality ? nlohmann::ordered_json(*input_modality) : nlohmann::ordered_json(nullptr);
  j["metrics"] = {{"CER", kExternal},
                  {"WER", kExternal},
                  {"MCD", mean_mcd},
                  {"SpeechBERTScore", kExternal},
                  {"MOS", kExternal},
                  {"feature_L1", mean_feature_l1}};
  j["utterances"] = nlohmann::ordered_json::array();
  for (const auto& u : utterances) {
    j["utterances"].push_back({{"id", u.id}, {"mcd", u.mcd}, {"feature_l1", u.feature_l1}});
  }
  return j.dump(2);
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %-24s %-24s %10s %-24s %-24s %10s\n", "input", "CER", "WER", "MCD",
                "SpeechBERTScore", "MOS", "feat L1");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-12s %-24s %-24s %10.3f %-24s %-24s %10.4f\n",
                input_modality ? input_modality->c_str() : "all", kExternal, kExternal, mean_mcd, kExternal, kExternal,
                mean_feature_l1);
  out << buf;
  return out.str();
}

}  // namespace artisyn
