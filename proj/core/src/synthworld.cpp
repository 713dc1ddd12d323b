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

#include "artisyn/synthworld.hpp"

#include "binary_io.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

namespace artisyn {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kEmgOffset = 1e-3;

// nlohmann converts negative integers to unsigned silently.
std::uint64_t get_unsigned(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) throw ConfigError(std::string("world: ") + key + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix(splitmix(seed ^ splitmix(stream)) + index);
}

constexpr std::uint64_t kStreamMatrices = 1;
constexpr std::uint64_t kStreamUtterance = 2;

// Sinusoid parameters of one latent trajectory; evaluable at any time.
struct Latent {
  Mat freq, phase, amp;  // K x sinusoids; amp already scaled to unit variance

  Latent(const WorldConfig& c, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> f(c.min_frequency, c.max_frequency);
    std::uniform_real_distribution<double> p(0.0, kTwoPi);
    std::uniform_real_distribution<double> a(0.5, 1.5);
    freq.resize(c.latent_dim, c.sinusoids);
    phase.resize(c.latent_dim, c.sinusoids);
    amp.resize(c.latent_dim, c.sinusoids);
    for (int k = 0; k < c.latent_dim; ++k) {
      for (int j = 0; j < c.sinusoids; ++j) {
        freq(k, j) = f(rng);
        phase(k, j) = p(rng);
        amp(k, j) = a(rng);
      }
      // Variance of a sum of sinusoids at distinct frequencies is sum(a^2) / 2.
      amp.row(k) /= std::sqrt(amp.row(k).squaredNorm() / 2.0);
    }
  }

  double value(int k, double t) const {
    double v = 0.0;
    for (Eigen::Index j = 0; j < freq.cols(); ++j) v += amp(k, j) * std::sin(kTwoPi * freq(k, j) * t + phase(k, j));
    return v;
  }

  double derivative(int k, double t) const {
    double v = 0.0;
    for (Eigen::Index j = 0; j < freq.cols(); ++j) {
      v += amp(k, j) * kTwoPi * freq(k, j) * std::cos(kTwoPi * freq(k, j) * t + phase(k, j));
    }
    return v;
  }

  Mat sample(double rate, Eigen::Index frames, bool deriv = false) const {
    Mat z(frames, freq.rows());
    for (Eigen::Index i = 0; i < frames; ++i) {
      const double t = static_cast<double>(i) / rate;
      for (int k = 0; k < freq.rows(); ++k) z(i, k) = deriv ? derivative(k, t) : value(k, t);
    }
    return z;
  }
};

Mat full_rank_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(cols)));
  for (;;) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Mat>(m).singularValues();
    if (sv.minCoeff() > 1e-3 * sv.maxCoeff()) return m;
  }
}

Eigen::Index frames_at(double duration, double rate) {
  return static_cast<Eigen::Index>(std::llround(duration * rate));
}

Mat observe(const WorldModality& m, const Mat& a, const Latent& latent, Eigen::Index frames, double ref_omega,
            Rng& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto add_noise = [&](Mat& o) {
    if (m.noise == 0.0) return;
    for (Eigen::Index i = 0; i < o.size(); ++i) o.data()[i] += m.noise * noise(rng);
  };
  switch (m.map) {
    case ObservationMap::linear: {
      Mat o = latent.sample(m.rate, frames) * a.transpose();
      add_noise(o);
      return o;
    }
    case ObservationMap::tanh_linear: {
      Mat o = (latent.sample(m.rate, frames) * a.transpose()).array().tanh().matrix();
      add_noise(o);
      return o;
    }
    case ObservationMap::rectified_derivative: {
      Mat o = latent.sample(m.rate, frames, true) * a.transpose() / ref_omega;
      add_noise(o);
      return (o.array().abs() + kEmgOffset).matrix();
    }
  }
  throw std::logic_error("unhandled observation map");
}

// Harmonic source: pitch from latent 0, loudness from latent 1, spectral tilt from latent 2.
Mat synthesize_wave(const WorldConfig& c, const Latent& latent, Eigen::Index samples) {
  constexpr int kHarmonics = 10;
  Mat wave(samples, 1);
  double phase = 0.0;
  for (Eigen::Index n = 0; n < samples; ++n) {
    const double t = static_cast<double>(n) / c.audio_rate;
    const double f0 = 140.0 * std::exp(0.25 * latent.value(0, t));
    const double gain = 0.5 / (1.0 + std::exp(-1.5 * latent.value(1, t)));
    const double tilt = 0.5 + 0.25 * std::tanh(c.latent_dim > 2 ? latent.value(2, t) : 0.0);
    double v = 0.0;
    double norm = 0.0;
    for (int h = 1; h <= kHarmonics; ++h) {
      const double w = std::exp(-tilt * (h - 1));
      v += w * std::sin(h * phase);
      norm += w;
    }
    wave(n, 0) = gain * v / norm;
    phase = std::fmod(phase + kTwoPi * f0 / c.audio_rate, kTwoPi);
  }
  return wave;
}

std::vector<std::string> group_names(const WorldConfig& c, const std::vector<PresenceGroup>& groups,
                                           Rng& rng) {
  if (groups.empty()) {
    std::vector<std::string> all;
    for (const auto& m : c.modalities) all.push_back(m.name);
    return all;
  }
  std::vector<double> w;
  for (const auto& g : groups) w.push_back(g.weight);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  return groups[pick(rng)].modalities;
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string entry_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "utt%05zu", i);
  return buf;
}

ordered_json groups_json(const std::vector<PresenceGroup>& groups) {
  ordered_json a = ordered_json::array();
  for (const auto& g : groups) a.push_back({{"modalities", g.modalities}, {"weight", g.weight}});
  return a;
}

std::vector<PresenceGroup> groups_from_json(const json& a) {
  std::vector<PresenceGroup> out;
  for (const auto& g : a) out.push_back({g.at("modalities").get<std::vector<std::string>>(), g.at("weight").get<double>()});
  return out;
}

}  // namespace

std::string_view to_string(ObservationMap map) {
  switch (map) {
    case ObservationMap::linear: return "linear";
    case ObservationMap::tanh_linear: return "tanh-linear";
    case ObservationMap::rectified_derivative: return "rectified-derivative";
  }
  return "?";
}

ObservationMap observation_map_from_string(std::string_view text) {
  if (text == "linear") return ObservationMap::linear;
  if (text == "tanh-linear") return ObservationMap::tanh_linear;
  if (text == "rectified-derivative") return ObservationMap::rectified_derivative;
  throw ConfigError("unknown observation map '" + std::string(text) + "'");
}

void WorldConfig::validate() const {
  if (latent_dim < 2) throw ConfigError("world: latent_dim must be at least 2");
  if (sinusoids < 1) throw ConfigError("world: need at least one sinusoid per latent channel");
  if (!(min_frequency > 0.0) || !(max_frequency >= min_frequency)) throw ConfigError("world: bad frequency band");
  if (modalities.empty()) throw ConfigError("world: need at least one modality");
  std::set<std::string> names;
  for (const auto& m : modalities) {
    if (m.name.empty() || !names.insert(m.name).second) throw ConfigError("world: modality names must be unique");
    if (m.channels <= 0 || !(m.rate > 0.0)) throw ConfigError("world: modality " + m.name + " has a bad shape");
    if (!(m.noise >= 0.0)) throw ConfigError("world: noise must be non-negative");
  }
  if (target_dim <= 0 || !(target_rate > 0.0)) throw ConfigError("world: bad target spec");
  if (std::abs(common_rate - 2.0 * target_rate) > 1e-9) throw ConfigError("world: common rate must be twice the target rate");
  if (waveform && !(audio_rate > 0.0)) throw ConfigError("world: bad audio rate");
  if (utterances == 0) throw ConfigError("world: need at least one utterance");
  if (!(min_duration > 0.0) || max_duration < min_duration) throw ConfigError("world: bad duration range");
  if (dev_fraction < 0.0 || test_fraction < 0.0 || dev_fraction + test_fraction >= 1.0) {
    throw ConfigError("world: split fractions must leave some train utterances");
  }
  for (const auto* groups : {&presence, &eval_presence}) {
    for (const auto& g : *groups) {
      if (g.modalities.empty() || !(g.weight > 0.0)) throw ConfigError("world: presence groups need modalities and positive weight");
      for (const auto& n : g.modalities) {
        if (!names.contains(n)) throw ConfigError("world: presence group names unknown modality " + n);
      }
    }
  }
}

std::string WorldConfig::to_json() const {
  ordered_json j;
  j["latent_dim"] = latent_dim;
  j["sinusoids"] = sinusoids;
  j["min_frequency"] = min_frequency;
  j["max_frequency"] = max_frequency;
  j["modalities"] = ordered_json::array();
  for (const auto& m : modalities) {
    j["modalities"].push_back({{"name", m.name},
                               {"channels", m.channels},
                               {"rate", m.rate},
                               {"map", std::string(artisyn::to_string(m.map))},
                               {"noise", m.noise}});
  }
  j["target_dim"] = target_dim;
  j["target_rate"] = target_rate;
  j["common_rate"] = common_rate;
  j["waveform"] = waveform;
  j["audio_rate"] = audio_rate;
  j["utterances"] = utterances;
  j["min_duration"] = min_duration;
  j["max_duration"] = max_duration;
  j["dev_fraction"] = dev_fraction;
  j["test_fraction"] = test_fraction;
  j["presence"] = groups_json(presence);
  j["eval_presence"] = groups_json(eval_presence);
  j["seed"] = seed;
  return j.dump(2);
}

WorldConfig WorldConfig::from_json(std::string_view text) {
  WorldConfig c;
  try {
    const json j = json::parse(text);
    c.latent_dim = j.at("latent_dim").get<int>();
    c.sinusoids = j.at("sinusoids").get<int>();
    c.min_frequency = j.at("min_frequency").get<double>();
    c.max_frequency = j.at("max_frequency").get<double>();
    c.modalities.clear();
    for (const auto& m : j.at("modalities")) {
      c.modalities.push_back({m.at("name").get<std::string>(), m.at("channels").get<int>(), m.at("rate").get<double>(),
                              observation_map_from_string(m.at("map").get<std::string>()), m.at("noise").get<double>()});
    }
    c.target_dim = j.at("target_dim").get<int>();
    c.target_rate = j.at("target_rate").get<double>();
    c.common_rate = j.at("common_rate").get<double>();
    c.waveform = j.at("waveform").get<bool>();
    c.audio_rate = j.at("audio_rate").get<double>();
    c.utterances = get_unsigned(j, "utterances");
    c.min_duration = j.at("min_duration").get<double>();
    c.max_duration = j.at("max_duration").get<double>();
    c.dev_fraction = j.at("dev_fraction").get<double>();
    c.test_fraction = j.at("test_fraction").get<double>();
    c.presence = groups_from_json(j.at("presence"));
    c.eval_presence = groups_from_json(j.at("eval_presence"));
    c.seed = get_unsigned(j, "seed");
  } catch (const json::exception& e) {
    throw FormatError(std::string("world config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<PresenceGroup> one_modality_per_utterance(const WorldConfig& config) {
  std::vector<PresenceGroup> groups;
  for (const auto& m : config.modalities) groups.push_back({{m.name}, 1.0});
  return groups;
}

FrameSequence latent_trajectory(const WorldConfig& config, std::uint64_t seed, double duration) {
  config.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("latent_trajectory: duration must be positive");
  const Latent latent(config, seed);
  const Eigen::Index frames = std::max<Eigen::Index>(1, frames_at(duration, config.common_rate));
  return FrameSequence::from_mat(latent.sample(config.common_rate, frames), config.common_rate);
}

WorldDataset generate_world(const WorldConfig& config) {
  config.validate();
  WorldDataset world;
  world.config = config;

  Rng mrng(derive(config.seed, kStreamMatrices, 0));
  for (const auto& m : config.modalities) {
    world.observation_matrices[m.name] = full_rank_matrix(m.channels, config.latent_dim, mrng);
  }
  world.target_matrix = full_rank_matrix(config.target_dim, config.latent_dim, mrng);

  DatasetManifest& man = world.manifest;
  for (const auto& m : config.modalities) man.modality_specs.push_back({m.name, m.channels, m.rate});
  man.target_spec = {config.target_dim, config.target_rate};
  man.common_rate = config.common_rate;
  man.waveform_rate = config.audio_rate;

  const double ref_omega = kTwoPi * 0.5 * (config.min_frequency + config.max_frequency);
  const auto n = config.utterances;
  const auto n_test = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(n)));
  const auto n_dev = static_cast<std::size_t>(std::llround(config.dev_fraction * static_cast<double>(n)));
  const std::size_t n_train = n - std::min(n, n_dev + n_test);
  if (n_train == 0) throw ConfigError("world: no train utterances left after the dev/test split");

  for (std::size_t u = 0; u < n; ++u) {
    Rng rng(derive(config.seed, kStreamUtterance, u));
    const Split split = u < n_train ? Split::train : (u < n_train + n_dev ? Split::dev : Split::test);
    // Durations are whole target frames so every stream has an exact frame count.
    std::uniform_real_distribution<double> dur(config.min_duration, config.max_duration);
    const double duration =
        std::max(1.0, std::floor(dur(rng) * config.target_rate)) / config.target_rate;
    const std::uint64_t latent_seed = rng();
    const Latent latent(config, latent_seed);
    const auto present = group_names(config, split == Split::train ? config.presence : config.eval_presence, rng);

    const std::string id = entry_id(u);
    ManifestEntry entry;
    entry.id = id;
    entry.split = split;
    RawEntry raw{{}, FrameSequence::zeros(1, 1, 1.0), std::nullopt};
    for (const auto& m : config.modalities) {
      const bool on = std::find(present.begin(), present.end(), m.name) != present.end();
      if (!on) {
        entry.modality_paths[m.name] = std::nullopt;
        raw.modalities[m.name] = std::nullopt;
        continue;
      }
      const Mat o = observe(m, world.observation_matrices[m.name], latent, frames_at(duration, m.rate), ref_omega, rng);
      entry.modality_paths[m.name] = id + "/" + m.name + ".afs";
      raw.modalities[m.name] = FrameSequence::from_mat(o, m.rate);
    }
    const Eigen::Index tf = frames_at(duration, config.target_rate);
    raw.target = FrameSequence::from_mat(latent.sample(config.target_rate, tf) * world.target_matrix.transpose(),
                                         config.target_rate);
    entry.target_path = id + "/target.afs";
    if (config.waveform) {
      raw.waveform = FrameSequence::from_mat(synthesize_wave(config, latent, frames_at(duration, config.audio_rate)),
                                             config.audio_rate);
      entry.waveform_path = id + "/wave.afs";
    }
    world.latents.push_back(
        FrameSequence::from_mat(latent.sample(config.common_rate, frames_at(duration, config.common_rate)),
                                config.common_rate));
    man.entries.push_back(std::move(entry));
    world.raw.push_back(std::move(raw));
  }
  man.validate();
  return world;
}

Dataset WorldDataset::prepare() const { return prepare_dataset(manifest, raw); }

std::filesystem::path write_world(const WorldDataset& world, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ordered_json side;
  side["format"] = "artisyn-world/1";
  side["config"] = ordered_json::parse(world.config.to_json());
  side["observation_matrices"] = ordered_json::object();
  for (const auto& m : world.config.modalities) {
    side["observation_matrices"][m.name] = matrix_json(world.observation_matrices.at(m.name));
  }
  side["target_matrix"] = matrix_json(world.target_matrix);
  side["latents"] = ordered_json::object();
  for (std::size_t i = 0; i < world.raw.size(); ++i) {
    const ManifestEntry& e = world.manifest.entries[i];
    const RawEntry& r = world.raw[i];
    for (const auto& [name, path] : e.modality_paths) {
      if (path) write_afs(*r.modalities.at(name), dir / *path);
    }
    write_afs(r.target, dir / e.target_path);
    if (e.waveform_path) write_afs(*r.waveform, dir / *e.waveform_path);
    const std::string latent_path = e.id + "/latent.afs";
    write_afs(world.latents[i], dir / latent_path);
    side["latents"][e.id] = latent_path;
  }
  const std::string text = side.dump(2) + "\n";
  detail::write_file(dir / "world.json", std::span<const char>(text.data(), text.size()));
  const auto manifest_path = dir / "manifest.json";
  write_manifest(world.manifest, manifest_path);
  return manifest_path;
}

}  // namespace artisyn
