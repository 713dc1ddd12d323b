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

#include "artisyn/seqdata.hpp"

#include "binary_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace artisyn {

using nlohmann::json;

FrameSequence::FrameSequence(FloatMatrix data, double rate) : data_(std::move(data)), rate_(rate) {
  if (!(rate_ > 0.0) || !std::isfinite(rate_)) {
    throw std::invalid_argument("FrameSequence: rate must be finite and > 0");
  }
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw std::invalid_argument("FrameSequence: need at least one frame and one channel");
  }
  if (!data_.allFinite()) throw std::invalid_argument("FrameSequence: non-finite value");
}

FrameSequence FrameSequence::zeros(Eigen::Index frames, Eigen::Index channels, double rate) {
  return FrameSequence(FloatMatrix::Zero(frames, channels), rate);
}

FrameSequence FrameSequence::from_mat(const Mat& data, double rate) {
  return FrameSequence(data.cast<float>(), rate);
}

FrameSequence FrameSequence::slice(Eigen::Index start, Eigen::Index count) const {
  if (start < 0 || count < 1 || start + count > frames()) {
    throw std::out_of_range("FrameSequence::slice: range outside sequence");
  }
  return FrameSequence(data_.middleRows(start, count), rate_);
}

Eigen::Index AlignedSample::modality_frames() const {
  for (const auto& [name, seq] : modalities) {
    if (seq) return seq->frames();
  }
  return 0;
}

std::size_t AlignedSample::present_count() const {
  return static_cast<std::size_t>(std::count_if(modalities.begin(), modalities.end(),
                                                [](const auto& kv) { return kv.second.has_value(); }));
}

bool AlignedSample::has(std::string_view modality) const {
  auto it = modalities.find(std::string(modality));
  return it != modalities.end() && it->second.has_value();
}

void AlignedSample::validate() const {
  if (present_count() == 0) throw std::invalid_argument("sample " + id + ": no modality present");
  const Eigen::Index frames = modality_frames();
  double rate = 0.0;
  for (const auto& [name, seq] : modalities) {
    if (!seq) continue;
    if (seq->frames() != frames) {
      throw std::invalid_argument("sample " + id + ": modality frame counts differ");
    }
    if (rate == 0.0) rate = seq->rate();
    if (seq->rate() != rate) throw std::invalid_argument("sample " + id + ": modality rates differ");
  }
  if (target.frames() != frames / 2) {
    throw std::invalid_argument("sample " + id + ": target must have floor(frames / 2) frames");
  }
}

std::size_t PresenceMask::count() const {
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), true));
}

PresenceMask presence_of(const AlignedSample& sample, std::span<const ModalitySpec> order) {
  PresenceMask mask;
  for (const ModalitySpec& spec : order) mask.present.push_back(sample.has(spec.name));
  for (const auto& [name, seq] : sample.modalities) {
    if (!seq) continue;
    const bool known = std::any_of(order.begin(), order.end(),
                                   [&](const ModalitySpec& s) { return s.name == name; });
    if (!known) throw std::invalid_argument("sample " + sample.id + ": unknown modality " + name);
  }
  return mask;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "dev") return Split::dev;
  if (text == "test") return Split::test;
  throw ConfigError("unknown split '" + std::string(text) + "'");
}

const ModalitySpec& DatasetManifest::spec(std::string_view modality) const {
  for (const ModalitySpec& s : modality_specs) {
    if (s.name == modality) return s;
  }
  throw std::out_of_range("manifest: unknown modality " + std::string(modality));
}

void DatasetManifest::validate() const {
  std::set<std::string> names;
  for (const ModalitySpec& s : modality_specs) {
    if (s.name.empty()) throw FormatError("manifest: empty modality name");
    if (!names.insert(s.name).second) throw FormatError("manifest: duplicate modality " + s.name);
    if (s.channels <= 0) throw FormatError("manifest: modality " + s.name + " needs channels > 0");
    if (!(s.native_rate > 0.0)) throw FormatError("manifest: modality " + s.name + " needs rate > 0");
  }
  if (target_spec.channels <= 0 || !(target_spec.rate > 0.0)) {
    throw FormatError("manifest: invalid target spec");
  }
  if (!(common_rate > 0.0) || !(waveform_rate > 0.0)) throw FormatError("manifest: invalid rates");
  std::set<std::string> ids;
  for (const ManifestEntry& e : entries) {
    if (!ids.insert(e.id).second) throw FormatError("manifest: duplicate entry id " + e.id);
    bool any = false;
    for (const auto& [name, path] : e.modality_paths) {
      if (!names.contains(name)) throw FormatError("manifest: entry " + e.id + " unknown modality " + name);
      any = any || path.has_value();
    }
    if (!any) throw FormatError("manifest: entry " + e.id + " has no modality present");
  }
}

std::string manifest_to_json(const DatasetManifest& m) {
  json doc;
  doc["format"] = "artisyn-manifest/1";
  doc["common_rate"] = m.common_rate;
  doc["waveform_rate"] = m.waveform_rate;
  doc["modalities"] = json::array();
  for (const ModalitySpec& s : m.modality_specs) {
    doc["modalities"].push_back({{"name", s.name}, {"channels", s.channels}, {"native_rate", s.native_rate}});
  }
  doc["target"] = {{"channels", m.target_spec.channels}, {"rate", m.target_spec.rate}};
  doc["entries"] = json::array();
  for (const ManifestEntry& e : m.entries) {
    json je;
    je["id"] = e.id;
    je["split"] = std::string(to_string(e.split));
    json mods = json::object();
    for (const ModalitySpec& s : m.modality_specs) {
      auto it = e.modality_paths.find(s.name);
      mods[s.name] = (it != e.modality_paths.end() && it->second) ? json(*it->second) : json(nullptr);
    }
    je["modalities"] = std::move(mods);
    je["target"] = e.target_path;
    je["waveform"] = e.waveform_path ? json(*e.waveform_path) : json(nullptr);
    doc["entries"].push_back(std::move(je));
  }
  return doc.dump(2) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text) {
  DatasetManifest m;
  try {
    const json doc = json::parse(text);
    if (doc.value("format", "") != "artisyn-manifest/1") throw FormatError("manifest: unknown format tag");
    m.common_rate = doc.at("common_rate").get<double>();
    m.waveform_rate = doc.value("waveform_rate", 16000.0);
    for (const json& s : doc.at("modalities")) {
      m.modality_specs.push_back({s.at("name").get<std::string>(), s.at("channels").get<int>(),
                                  s.at("native_rate").get<double>()});
    }
    m.target_spec = {doc.at("target").at("channels").get<int>(), doc.at("target").at("rate").get<double>()};
    for (const json& je : doc.at("entries")) {
      ManifestEntry e;
      e.id = je.at("id").get<std::string>();
      e.split = split_from_string(je.value("split", "train"));
      for (const auto& [name, path] : je.at("modalities").items()) {
        e.modality_paths[name] = path.is_null() ? std::nullopt
                                                : std::optional<std::string>(path.get<std::string>());
      }
      e.target_path = je.at("target").get<std::string>();
      if (je.contains("waveform") && !je.at("waveform").is_null()) {
        e.waveform_path = je.at("waveform").get<std::string>();
      }
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  const std::string text = manifest_to_json(manifest);
  detail::write_file(path, std::span<const char>(text.data(), text.size()));
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  const std::vector<char> bytes = detail::read_file(path);
  return manifest_from_json(std::string_view(bytes.data(), bytes.size()));
}

std::vector<AlignedSample> Dataset::select(Split split) const {
  std::vector<AlignedSample> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (splits[i] == split) out.push_back(samples[i]);
  }
  return out;
}

std::vector<std::string> Dataset::modality_names() const {
  std::vector<std::string> names;
  for (const ModalitySpec& s : manifest.modality_specs) names.push_back(s.name);
  return names;
}

namespace {

bool same_rate(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(a, b); }

}  // namespace

AlignedSample prepare_sample(const DatasetManifest& manifest, const ManifestEntry& entry, RawEntry raw) {
  const std::string& id = entry.id;
  std::map<std::string, std::optional<FrameSequence>> mods;
  Eigen::Index frames = std::numeric_limits<Eigen::Index>::max();
  for (const ModalitySpec& spec : manifest.modality_specs) {
    auto it = raw.modalities.find(spec.name);
    if (it == raw.modalities.end() || !it->second) {
      mods.emplace(spec.name, std::nullopt);
      continue;
    }
    const FrameSequence& seq = *it->second;
    if (seq.channels() != spec.channels) {
      throw FormatError("entry " + id + ": modality " + spec.name + " has wrong channel count");
    }
    if (!same_rate(seq.rate(), spec.native_rate)) {
      throw FormatError("entry " + id + ": modality " + spec.name + " has wrong rate");
    }
    FrameSequence common = same_rate(seq.rate(), manifest.common_rate)
                               ? seq
                               : resample_linear(seq, manifest.common_rate);
    frames = std::min(frames, common.frames());
    mods.emplace(spec.name, std::move(common));
  }
  if (frames == std::numeric_limits<Eigen::Index>::max()) {
    throw FormatError("entry " + id + ": no modality present");
  }
  if (raw.target.channels() != manifest.target_spec.channels ||
      !same_rate(raw.target.rate(), manifest.target_spec.rate)) {
    throw FormatError("entry " + id + ": target does not match target spec");
  }
  frames = std::min(frames, 2 * raw.target.frames());
  if (frames < 2) throw FormatError("entry " + id + ": utterance shorter than two frames");
  for (auto& [name, seq] : mods) {
    if (seq && seq->frames() != frames) seq = seq->slice(0, frames);
  }
  const Eigen::Index target_frames = frames / 2;
  AlignedSample sample{id, std::move(mods), raw.target.slice(0, target_frames), std::nullopt};
  if (raw.waveform) {
    const double per_frame = manifest.waveform_rate / manifest.target_spec.rate;
    const auto needed = static_cast<Eigen::Index>(std::llround(per_frame * target_frames));
    if (raw.waveform->channels() != 1 || !same_rate(raw.waveform->rate(), manifest.waveform_rate)) {
      throw FormatError("entry " + id + ": waveform must be mono at the manifest waveform rate");
    }
    if (raw.waveform->frames() < needed) throw FormatError("entry " + id + ": waveform too short");
    sample.waveform = raw.waveform->slice(0, needed);
  }
  sample.validate();
  return sample;
}

AlignedSample trim_even(const AlignedSample& sample) {
  const Eigen::Index t = sample.modality_frames() / 2 * 2;
  if (t < 2) throw std::invalid_argument("sample " + sample.id + " is shorter than two frames");
  AlignedSample out{sample.id, {}, sample.target.slice(0, t / 2), std::nullopt};
  for (const auto& [name, seq] : sample.modalities) {
    out.modalities[name] = seq ? std::optional<FrameSequence>(seq->slice(0, t)) : std::nullopt;
  }
  if (sample.waveform) {
    const auto per_frame = static_cast<Eigen::Index>(std::llround(sample.waveform->rate() / sample.target.rate()));
    out.waveform = sample.waveform->slice(0, std::min(sample.waveform->frames(), t / 2 * per_frame));
  }
  return out;
}

Dataset prepare_dataset(DatasetManifest manifest, std::vector<RawEntry> raw) {
  if (raw.size() != manifest.entries.size()) {
    throw std::invalid_argument("prepare_dataset: entry count mismatch");
  }
  Dataset ds;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    ds.samples.push_back(prepare_sample(manifest, manifest.entries[i], std::move(raw[i])));
    ds.splits.push_back(manifest.entries[i].split);
  }
  ds.manifest = std::move(manifest);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  DatasetManifest manifest = read_manifest(manifest_path);
  const std::filesystem::path root = manifest_path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : root / fp;
  };
  std::vector<RawEntry> raw;
  for (const ManifestEntry& e : manifest.entries) {
    std::map<std::string, std::optional<FrameSequence>> mods;
    for (const auto& [name, path] : e.modality_paths) {
      mods.emplace(name, path ? std::optional<FrameSequence>(read_afs(resolve(*path))) : std::nullopt);
    }
    std::optional<FrameSequence> wav;
    if (e.waveform_path) wav = read_afs(resolve(*e.waveform_path));
    raw.push_back(RawEntry{std::move(mods), read_afs(resolve(e.target_path)), std::move(wav)});
  }
  return prepare_dataset(std::move(manifest), std::move(raw));
}

FrameSequence resample_linear(const FrameSequence& seq, double target_rate) {
  if (!(target_rate > 0.0) || !std::isfinite(target_rate)) {
    throw std::invalid_argument("resample_linear: target rate must be > 0");
  }
  if (target_rate == seq.rate()) return seq;
  const Eigen::Index n = seq.frames();
  const auto m = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(static_cast<double>(n) * target_rate / seq.rate())));
  const FloatMatrix& in = seq.data();
  FloatMatrix out(m, seq.channels());
  for (Eigen::Index i = 0; i < m; ++i) {
    const double pos = static_cast<double>(i) * seq.rate() / target_rate;
    const auto lo = static_cast<Eigen::Index>(std::floor(pos));
    if (lo >= n - 1) {
      out.row(i) = in.row(n - 1);
      continue;
    }
    const double frac = pos - static_cast<double>(lo);
    out.row(i) = ((1.0 - frac) * in.row(lo).cast<double>() + frac * in.row(lo + 1).cast<double>())
                     .cast<float>();
  }
  return FrameSequence(std::move(out), target_rate);
}

Batch crop_batch(std::span<const AlignedSample> samples, std::size_t batch_size, double min_s,
                 double max_s, Rng& rng) {
  if (samples.empty()) throw std::invalid_argument("crop_batch: no samples");
  if (batch_size == 0) throw std::invalid_argument("crop_batch: batch size must be >= 1");
  if (!(min_s > 0.0) || min_s > max_s) throw std::invalid_argument("crop_batch: need 0 < min_s <= max_s");
  const double rate = [&] {
    for (const auto& [name, seq] : samples.front().modalities) {
      if (seq) return seq->rate();
    }
    throw std::invalid_argument("crop_batch: sample without modalities");
  }();

  std::uniform_real_distribution<double> len_dist(min_s, max_s);
  const double seconds = min_s == max_s ? min_s : len_dist(rng);
  Eigen::Index window = static_cast<Eigen::Index>(std::floor(seconds * rate + 1e-9));
  window -= window % 2;
  if (window < 2) throw std::invalid_argument("crop_batch: window shorter than two frames");

  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  Batch batch;
  batch.window_frames = window;
  for (std::size_t b = 0; b < batch_size; ++b) {
    const AlignedSample& s = samples[pick(rng)];
    const Eigen::Index frames = s.modality_frames();
    if (frames < window) {
      throw std::invalid_argument("crop_batch: sample " + s.id + " shorter than the window");
    }
    std::uniform_int_distribution<Eigen::Index> start_dist(0, (frames - window) / 2);
    const Eigen::Index start = 2 * start_dist(rng);
    AlignedSample item{s.id, {}, s.target.slice(start / 2, window / 2), std::nullopt};
    for (const auto& [name, seq] : s.modalities) {
      item.modalities.emplace(name, seq ? std::optional<FrameSequence>(seq->slice(start, window))
                                        : std::nullopt);
    }
    batch.items.push_back(std::move(item));
  }
  return batch;
}

DecoderBatch crop_decoder_batch(std::span<const AlignedSample> samples, std::size_t batch_size,
                                double min_s, double max_s, Rng& rng) {
  if (samples.empty()) throw std::invalid_argument("crop_decoder_batch: no samples");
  if (batch_size == 0) throw std::invalid_argument("crop_decoder_batch: batch size must be >= 1");
  if (!(min_s > 0.0) || min_s > max_s) {
    throw std::invalid_argument("crop_decoder_batch: need 0 < min_s <= max_s");
  }
  const double rate = samples.front().target.rate();
  std::uniform_real_distribution<double> len_dist(min_s, max_s);
  const double seconds = min_s == max_s ? min_s : len_dist(rng);
  const auto window = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::floor(seconds * rate + 1e-9)));

  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  DecoderBatch batch;
  batch.window_frames = window;
  for (std::size_t b = 0; b < batch_size; ++b) {
    const std::size_t idx = pick(rng);
    const AlignedSample& s = samples[idx];
    if (!s.waveform) throw std::invalid_argument("crop_decoder_batch: sample " + s.id + " has no waveform");
    if (s.target.frames() < window) {
      throw std::invalid_argument("crop_decoder_batch: sample " + s.id + " shorter than the window");
    }
    std::uniform_int_distribution<Eigen::Index> start_dist(0, s.target.frames() - window);
    batch.items.push_back(DecoderCrop{idx, start_dist(rng)});
  }
  return batch;
}

}  // namespace artisyn
