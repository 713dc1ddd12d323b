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

#include "cli.hpp"

#include "artisyn/decoder.hpp"
#include "artisyn/encoder.hpp"
#include "artisyn/gradcheck.hpp"
#include "artisyn/metrics.hpp"
#include "artisyn/probe.hpp"
#include "artisyn/synthworld.hpp"
#include "artisyn/trainer.hpp"
#include "artisyn/wav.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

namespace artisyn::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// nlohmann converts negative integers to unsigned silently.
std::uint64_t get_unsigned(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) throw ConfigError(std::string(key) + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

// YAML <-> JSON. Quoted scalars stay strings; plain scalars are typed.

json scalar_from_yaml(const YAML::Node& node) {
  const std::string& s = node.Scalar();
  if (node.Tag() == "!") return s;
  if (s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  const char* end = s.data() + s.size();
  long long i = 0;
  if (auto [p, ec] = std::from_chars(s.data(), end, i); ec == std::errc{} && p == end) return i;
  unsigned long long u = 0;
  if (auto [p, ec] = std::from_chars(s.data(), end, u); ec == std::errc{} && p == end) return u;
  double d = 0.0;
  if (auto [p, ec] = std::from_chars(s.data(), end, d); ec == std::errc{} && p == end) return d;
  return s;
}

json from_yaml(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Scalar:
      return scalar_from_yaml(node);
    case YAML::NodeType::Sequence: {
      json a = json::array();
      for (const auto& item : node) a.push_back(from_yaml(item));
      return a;
    }
    case YAML::NodeType::Map: {
      json o = json::object();
      for (const auto& kv : node) o[kv.first.as<std::string>()] = from_yaml(kv.second);
      return o;
    }
    default:
      return nullptr;
  }
}

bool is_flat_array(const json& j) {
  for (const auto& v : j) {
    if (v.is_structured()) return false;
  }
  return true;
}

void emit(YAML::Emitter& e, const json& j) {
  switch (j.type()) {
    case json::value_t::object:
      e << YAML::BeginMap;
      for (const auto& [k, v] : j.items()) {
        e << YAML::Key << k << YAML::Value;
        emit(e, v);
      }
      e << YAML::EndMap;
      break;
    case json::value_t::array:
      if (is_flat_array(j)) e << YAML::Flow;
      e << YAML::BeginSeq;
      for (const auto& v : j) emit(e, v);
      e << YAML::EndSeq;
      break;
    case json::value_t::string:
      e << YAML::DoubleQuoted << j.get<std::string>();
      break;
    case json::value_t::boolean:
      e << j.get<bool>();
      break;
    case json::value_t::number_integer:
      e << j.get<long long>();
      break;
    case json::value_t::number_unsigned:
      e << j.get<unsigned long long>();
      break;
    case json::value_t::number_float:
      e << j.dump();  // shortest text that round-trips
      break;
    default:
      e << YAML::Null;
  }
}

std::string to_yaml(const json& j) {
  YAML::Emitter e;
  emit(e, j);
  return std::string(e.c_str()) + "\n";
}

// Overlays `patch` on `base`; every key must already exist in `base`.
void merge_strict(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError("config " + (path.empty() ? "document" : path) + " must be a mapping");
  for (const auto& [key, value] : patch.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + where + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      if (value.is_null()) continue;
      merge_strict(slot, value, where);
    } else {
      slot = value;
    }
  }
}

json parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key.path=value, got '" + text + "'");
  json value = from_yaml(YAML::Load(text.substr(eq + 1)));
  std::string path = text.substr(0, eq);
  json patch = std::move(value);
  for (std::size_t end = path.size();;) {
    const auto dot = path.rfind('.', end - 1);
    const std::string key = path.substr(dot == std::string::npos ? 0 : dot + 1, end - (dot == std::string::npos ? 0 : dot + 1));
    if (key.empty()) throw ConfigError("--set: empty key in '" + path + "'");
    patch = json{{key, std::move(patch)}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  return patch;
}

// Section <-> struct conversions. Parsing errors surface as ConfigError.

template <typename F>
auto parse_section(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(name + ": " + e.what());
  } catch (const FormatError& e) {
    throw ConfigError(name + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

json opt_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> get_opt_string(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

json train_json(const TrainConfig& c) {
  json j;
  j["learning_rate"] = c.adam.learning_rate;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["epsilon"] = c.adam.epsilon;
  j["batch_size"] = c.batch_size;
  j["min_crop_s"] = c.min_crop_s;
  j["max_crop_s"] = c.max_crop_s;
  j["steps"] = c.steps;
  j["seed"] = c.seed;
  j["lambda_l2"] = c.lambda_l2;
  j["finetune_modality"] = opt_string(c.finetune_modality);
  j["checkpoint_every"] = c.checkpoint_every;
  j["dropout"] = c.dropout;
  return j;
}

TrainConfig train_from(const json& j) {
  return parse_section("train", [&] {
    TrainConfig c;
    c.adam.learning_rate = j.at("learning_rate").get<double>();
    c.adam.beta1 = j.at("beta1").get<double>();
    c.adam.beta2 = j.at("beta2").get<double>();
    c.adam.epsilon = j.at("epsilon").get<double>();
    const long long batch = j.at("batch_size").get<long long>();
    if (batch < 1) throw ConfigError("train: batch size must be at least 1");
    c.batch_size = static_cast<std::size_t>(batch);
    c.min_crop_s = j.at("min_crop_s").get<double>();
    c.max_crop_s = j.at("max_crop_s").get<double>();
    c.steps = j.at("steps").get<long>();
    c.seed = get_unsigned(j, "seed");
    c.lambda_l2 = j.at("lambda_l2").get<double>();
    c.finetune_modality = get_opt_string(j.at("finetune_modality"));
    c.checkpoint_every = j.at("checkpoint_every").get<long>();
    c.dropout = j.at("dropout").get<bool>();
    c.validate();
    return c;
  });
}

json probe_json(const ProbeConfig& c) {
  json j;
  j["train_frames"] = c.train_frames;
  j["test_frames"] = c.test_frames;
  j["ridge"] = c.ridge;
  j["seed"] = c.seed;
  j["split"] = std::string(to_string(c.split));
  j["pairs"] = json::array();
  return j;
}

json cepstrum_json(const MelCepstrumConfig& c) {
  return json{{"frame_length", c.frame_length}, {"hop", c.hop},
              {"mel_bands", c.mel_bands},       {"order", c.order},
              {"sample_rate", c.sample_rate},   {"log_floor", c.log_floor}};
}

MelCepstrumConfig cepstrum_from(const json& j) {
  MelCepstrumConfig c;
  c.frame_length = j.at("frame_length").get<int>();
  c.hop = j.at("hop").get<int>();
  c.mel_bands = j.at("mel_bands").get<int>();
  c.order = j.at("order").get<int>();
  c.sample_rate = j.at("sample_rate").get<double>();
  c.log_floor = j.at("log_floor").get<double>();
  c.validate();
  return c;
}

json world_json(const WorldConfig& c) { return json::parse(c.to_json()); }

json data_json() { return json{{"manifest", nullptr}, {"world", world_json(WorldConfig{})}}; }

json model_json(bool encoder, bool decoder) {
  json j = json::object();
  if (encoder) j["encoder"] = nullptr;
  if (decoder) j["decoder"] = nullptr;
  return j;
}

fs::path required_path(const json& section, const std::string& section_name, const std::string& key) {
  const json& v = section.at(key);
  if (v.is_null()) throw ConfigError(section_name + "." + key + " is required");
  return v.get<std::string>();
}

// Subcommands.

struct Command {
  std::string name;
  std::string description;
  bool trains = false;
  std::function<json()> defaults;
  /// Runs with the merged document; fills data-derived defaults, then calls `snapshot`.
  std::function<int(json& doc, const fs::path& out, const std::function<void()>& snapshot, std::ostream& os)> run;
};

// Parses the data section eagerly so config errors are reported before any work.
std::function<Dataset()> data_loader(const json& data) {
  return parse_section("data", [&]() -> std::function<Dataset()> {
    if (!data.at("manifest").is_null()) {
      const fs::path manifest = data.at("manifest").get<std::string>();
      return [manifest] { return load_dataset(manifest); };
    }
    const WorldConfig wc = WorldConfig::from_json(data.at("world").dump());
    return [wc] { return generate_world(wc).prepare(); };
  });
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

std::optional<std::string> single_modality(const json& section) {
  return parse_section("modality", [&] { return get_opt_string(section.at("modality")); });
}

Split split_of(const json& section, const std::string& name) {
  return parse_section(name, [&] { return split_from_string(section.at("split").get<std::string>()); });
}

int run_gen_data(json& doc, const fs::path& out, const std::function<void()>& snapshot, std::ostream& os) {
  const WorldConfig wc = parse_section("world", [&] { return WorldConfig::from_json(doc.at("world").dump()); });
  snapshot();
  const fs::path manifest = write_world(generate_world(wc), out);
  os << "wrote " << wc.utterances << " utterances; manifest " << manifest.string() << "\n";
  return kExitOk;
}

int run_pretrain(json& doc, const fs::path& out, const std::function<void()>& snapshot, std::ostream& os) {
  const auto load = data_loader(doc.at("data"));
  TrainConfig tc = train_from(doc.at("train"));
  if (tc.finetune_modality) throw ConfigError("pretrain: train.finetune_modality must be null");
  const Dataset ds = load();
  json& enc = doc.at("encoder");
  if (enc.at("modalities").empty()) {
    for (const ModalitySpec& m : ds.manifest.modality_specs) {
      enc["modalities"].push_back({{"name", m.name}, {"channels", m.channels}, {"native_rate", m.native_rate}});
    }
  }
  if (enc.at("output_dim").is_null()) enc["output_dim"] = ds.manifest.target_spec.channels;
  const EncoderConfig ec = parse_section("encoder", [&] { return EncoderConfig::from_json(enc.dump()); });
  snapshot();
  const TrainResult r = pretrain_encoder(ec, tc, ds, out);
  if (!r.losses.empty()) {
    os << "steps " << r.losses.size() << "; loss " << r.losses.front().total << " -> " << r.losses.back().total << "\n";
  }
  if (!r.dev.empty()) os << "dev L1 " << r.dev.back().value << "\n";
  os << "checkpoint " << (out / "encoder.ackp").string() << "\n";
  return kExitOk;
}

int run_finetune(json& doc, const fs::path& out, const std::function<void()>& snapshot, std::ostream& os) {
  const auto load = data_loader(doc.at("data"));
  const TrainConfig tc = train_from(doc.at("train"));
  if (!tc.finetune_modality) throw ConfigError("finetune: train.finetune_modality is required");
  const fs::path init = required_path(doc.at("model"), "model", "encoder");
  snapshot();
  const Checkpoint ckpt = load_checkpoint(init);
  const TrainResult r = finetune_encoder(ckpt, tc, load(), out);
  if (!r.losses.empty()) {
    os << "steps " << r.losses.size() << "; loss " << r.losses.front().total << " -> " << r.losses.back().total << "\n";
  }
  if (!r.dev.empty()) os << "dev L1 (" << *tc.finetune_modality << ") " << r.dev.back().value << "\n";
  os << "checkpoint " << (out / "encoder.ackp").string() << "\n";
  return kExitOk;
}

int run_train_decoder(json& doc, const fs::path& out, const std::function<void()>& snapshot, std::ostream& os) {
  const auto load = data_loader(doc.at("data"));
  const TrainConfig tc = train_from(doc.at("train"));
  const Dataset ds = load();
  json& dec = doc.at("decoder");
  if (dec.at("input_dim").is_null()) dec["input_dim"] = ds.manifest.target_spec.channels;
  const DecoderConfig dc = parse_section("decoder", [&] { return DecoderConfig::from_json(dec.dump()); });
  snapshot();
  const TrainResult r = train_decoder(dc, tc, ds, out);
  if (!r.losses.empty()) {
    os << "steps " << r.losses.size() << "; recon " << r.losses.front().total << " -> " << r.losses.back().total << "\n";
  }
  if (!r.dev.empty()) os << "dev recon " << r.dev.back().value << "\n";
  os << "checkpoint " << (out / "decoder.ackp").string() << "\n";
  return kExitOk;
}

int run_synthesize(json& doc, const fs::path& out, const std::function<void()>& snapshot, std::ostream& os) {
  const auto load = data_loader(doc.at("data"));
  const json& model = doc.at("model");
  const fs::path enc_path = required_path(model, "model", "encoder");
  const fs::path dec_path = required_path(model, "model", "decoder");
  const json& syn = doc.at("synthesize");
  const Split split = split_of(syn, "synthesize");
  const auto modality = single_modality(syn);
  const long long limit = parse_section("synthesize", [&] { return syn.at("limit").get<long long>(); });
  if (limit < 0) throw ConfigError("synthesize.limit must be non-negative");
  snapshot();
  const MultimodalEncoder encoder = MultimodalEncoder::from_checkpoint(load_checkpoint(enc_path));
  const ChunkedVocoder decoder = ChunkedVocoder::from_checkpoint(load_checkpoint(dec_path));
  const Dataset ds = load();
  const fs::path wav_dir = out / "wav";
  fs::create_directories(wav_dir);
  long long written = 0;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    if (ds.splits[i] != split) continue;
    if (limit > 0 && written >= limit) break;
    AlignedSample s = trim_even(ds.samples[i]);
    if (modality) {
      if (!s.has(*modality)) continue;
      s = only_modality(s, *modality);
    }
    write_wav_pcm16(decoder.synthesize(encoder.encode(s, false)), wav_dir / (s.id + ".wav"));
    ++written;
  }
  os << "wrote " << written << " waveforms to " << wav_dir.string() << "\n";
  return kExitOk;
}

int run_probe(json& doc, const fs::path& out, const std::function<void()>& snapshot, std::ostream& os) {
  const auto load = data_loader(doc.at("data"));
  const json& p = doc.at("probe");
  ProbeConfig pc = parse_section("probe", [&] {
    ProbeConfig c;
    c.train_frames = get_unsigned(p, "train_frames");
    c.test_frames = get_unsigned(p, "test_frames");
    c.ridge = p.at("ridge").get<double>();
    c.seed = get_unsigned(p, "seed");
    c.split = split_from_string(p.at("split").get<std::string>());
    return c;
  });
  std::vector<std::pair<std::string, std::string>> pairs = parse_section("probe.pairs", [&] {
    std::vector<std::pair<std::string, std::string>> v;
    for (const json& e : p.at("pairs")) {
      if (!e.is_array() || e.size() != 2) throw ConfigError("probe.pairs entries must be [input, output]");
      v.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    return v;
  });
  const Dataset ds = load();
  const auto names = representation_names(ds);
  if (pairs.empty()) {
    for (const auto& in : names) {
      for (const auto& o : names) {
        if (in != o) pairs.emplace_back(in, o);
      }
    }
    json& listed = doc.at("probe").at("pairs");
    for (const auto& [in, o] : pairs) listed.push_back({in, o});
  }
  for (const auto& [in, o] : pairs) {
    for (const auto* n : {&in, &o}) {
      if (std::find(names.begin(), names.end(), *n) == names.end()) {
        throw ConfigError("probe: unknown representation '" + *n + "'");
      }
    }
  }
  snapshot();
  const ProbeReport report = correlation_table(ds, pairs, pc);
  write_text(out / "probe_report.json", report.to_json() + "\n");
  os << report.to_table();
  return kExitOk;
}

int run_eval(json& doc, const fs::path& out, const std::function<void()>& snapshot, std::ostream& os) {
  const auto load = data_loader(doc.at("data"));
  const json& model = doc.at("model");
  const fs::path enc_path = required_path(model, "model", "encoder");
  const fs::path dec_path = required_path(model, "model", "decoder");
  const json& ev = doc.at("eval");
  EvalOptions opts;
  opts.split = split_of(ev, "eval");
  opts.input_modality = single_modality(ev);
  opts.cepstrum = parse_section("eval.cepstrum", [&] { return cepstrum_from(ev.at("cepstrum")); });
  snapshot();
  const MultimodalEncoder encoder = MultimodalEncoder::from_checkpoint(load_checkpoint(enc_path));
  const ChunkedVocoder decoder = ChunkedVocoder::from_checkpoint(load_checkpoint(dec_path));
  const EvalReport report = evaluate(encoder, decoder, load(), opts);
  write_text(out / "eval_report.json", report.to_json() + "\n");
  os << report.to_table();
  return kExitOk;
}

int run_gradcheck(json& doc, const fs::path& out, const std::function<void()>& snapshot, std::ostream& os) {
  const json& g = doc.at("gradcheck");
  struct Plan {
    std::string component;
    GradCheckOptions options;
  };
  const std::vector<Plan> plans = parse_section("gradcheck", [&] {
    const std::string which = g.at("component").get<std::string>();
    std::vector<std::string> components;
    if (which == "all") {
      components = {"encoder", "decoder", "losses"};
    } else {
      components = {which};
    }
    std::vector<Plan> v;
    for (const auto& c : components) {
      GradCheckOptions o = gradcheck_defaults(c);
      if (!g.at("tolerance").is_null()) o.tolerance = g.at("tolerance").get<double>();
      if (!g.at("step").is_null()) o.step = g.at("step").get<double>();
      o.max_entries = get_unsigned(g, "max_entries");
      o.seed = get_unsigned(g, "seed");
      if (!(o.step > 0.0)) throw ConfigError("gradcheck.step must be positive");
      if (o.tolerance < 0.0) throw ConfigError("gradcheck.tolerance must be non-negative");
      v.push_back({c, o});
    }
    return v;
  });
  snapshot();
  json reports = json::array();
  bool passed = true;
  for (const Plan& p : plans) {
    GradCheckReport r = p.component == "encoder"   ? grad_check_encoder(p.options)
                        : p.component == "decoder" ? grad_check_decoder(p.options)
                                                   : grad_check_losses(p.options);
    os << r.to_text();
    reports.push_back(json::parse(r.to_json()));
    passed = passed && r.passed();
  }
  write_text(out / "gradcheck_report.json", reports.dump(2) + "\n");
  return passed ? kExitOk : kExitRuntime;
}

const std::vector<Command>& commands() {
  static const std::vector<Command> list = [] {
    std::vector<Command> v;
    v.push_back({"gen-data", "Generate the synthetic world dataset", false,
                 [] { return json{{"world", world_json(WorldConfig{})}}; }, run_gen_data});
    v.push_back({"pretrain", "Multimodal encoder pre-training", true,
                 [] {
                   EncoderConfig ec;
                   json enc = json::parse(ec.to_json());
                   enc["output_dim"] = nullptr;
                   return json{{"data", data_json()}, {"encoder", enc}, {"train", train_json(TrainConfig{})}};
                 },
                 run_pretrain});
    v.push_back({"finetune", "Unimodal fine-tuning of a pre-trained encoder", true,
                 [] {
                   return json{{"data", data_json()}, {"model", model_json(true, false)},
                               {"train", train_json(TrainConfig{})}};
                 },
                 run_finetune});
    v.push_back({"train-decoder", "Teacher-forced vocoder training", true,
                 [] {
                   json dec = json::parse(DecoderConfig{}.to_json());
                   dec["input_dim"] = nullptr;
                   return json{{"data", data_json()}, {"decoder", dec},
                               {"train", train_json(TrainConfig::decoder_defaults())}};
                 },
                 run_train_decoder});
    v.push_back({"synthesize", "Encode utterances and write vocoded WAV files", false,
                 [] {
                   return json{{"data", data_json()},
                               {"model", model_json(true, true)},
                               {"synthesize", {{"split", "test"}, {"modality", nullptr}, {"limit", 0}}}};
                 },
                 run_synthesize});
    v.push_back({"probe", "Linear-probe correlation table between representations", false,
                 [] { return json{{"data", data_json()}, {"probe", probe_json(ProbeConfig{})}}; }, run_probe});
    v.push_back({"eval", "Score synthesized speech against references", false,
                 [] {
                   return json{{"data", data_json()},
                               {"model", model_json(true, true)},
                               {"eval",
                                {{"split", "test"}, {"modality", nullptr}, {"cepstrum", cepstrum_json(MelCepstrumConfig{})}}}};
                 },
                 run_eval});
    v.push_back({"gradcheck", "Finite-difference gradient checks on micro models", false,
                 [] {
                   return json{{"gradcheck",
                                {{"component", "all"}, {"tolerance", nullptr}, {"step", nullptr}, {"max_entries", 0},
                                 {"seed", 0}}}};
                 },
                 run_gradcheck});
    return v;
  }();
  return list;
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long> steps;
  std::string out;
  std::vector<std::string> sets;
  bool verbose = false;
};

std::unique_ptr<CLI::App> build_app(Flags& flags) {
  auto app = std::make_unique<CLI::App>("Multimodal articulatory-to-speech toolkit", "artisyn");
  app->require_subcommand(1);
  app->footer(
      "Config precedence (later wins): built-in defaults, --config file, --set overrides, --seed/--steps/--out.\n"
      "Default output directory: $" +
      std::string(kOutRootEnv) + "/<subcommand>, else runs/<subcommand>.\n"
      "Exit status: 0 success, 1 configuration error, 2 runtime failure.");
  for (const Command& c : commands()) {
    CLI::App* sub = app->add_subcommand(c.name, c.description);
    sub->add_option("-c,--config", flags.config, "YAML config file");
    sub->add_option("--seed", flags.seed, "Seed override for this run");
    if (c.trains) sub->add_option("--steps", flags.steps, "Training step override");
    sub->add_option("-o,--out", flags.out, "Output directory (created if absent)");
    sub->add_option("--set", flags.sets, "Override one config value, e.g. --set train.batch_size=8");
    sub->add_flag("-v,--verbose", flags.verbose, "Log progress to stderr");
  }
  return app;
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path);
  try {
    json doc = from_yaml(YAML::LoadFile(path));
    if (doc.is_null()) return json::object();
    return doc;
  } catch (const YAML::Exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

void apply_seed(json& doc, std::uint64_t seed) {
  for (const char* section : {"world", "train", "probe", "gradcheck"}) {
    if (doc.contains(section)) doc[section]["seed"] = seed;
  }
}

fs::path resolve_out(const json& doc, const std::string& command) {
  if (doc.contains("out") && !doc.at("out").is_null()) return parse_section("out", [&] {
      return fs::path(doc.at("out").get<std::string>());
    });
  if (const char* root = std::getenv(kOutRootEnv); root && *root) return fs::path(root) / command;
  return fs::path("runs") / command;
}

}  // namespace

std::string usage() {
  Flags flags;
  return build_app(flags)->help();
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags flags;
  auto app = build_app(flags);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app->parse(reversed);
  } catch (const CLI::CallForHelp&) {
    CLI::App* sub = app->get_subcommands().empty() ? app.get() : app->get_subcommands().front();
    out << sub->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app->help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app->help();
    return kExitConfig;
  }

  const std::string name = app->get_subcommands().front()->get_name();
  const auto command = std::find_if(commands().begin(), commands().end(), [&](const Command& c) { return c.name == name; });

  json doc;
  fs::path out_dir;
  try {
    doc = command->defaults();
    doc["out"] = nullptr;
    merge_strict(doc, load_config_file(flags.config), "");
    for (const auto& s : flags.sets) merge_strict(doc, parse_override(s), "");
    if (flags.seed) apply_seed(doc, *flags.seed);
    if (flags.steps) doc["train"]["steps"] = *flags.steps;
    if (!flags.out.empty()) doc["out"] = flags.out;
    out_dir = resolve_out(doc, name);
    doc["out"] = out_dir.string();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const YAML::Exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    fs::create_directories(out_dir);
    const auto snapshot = [&] {
      write_text(out_dir / "resolved_config.yaml", to_yaml(doc));
      if (flags.verbose) err << "resolved config: " << (out_dir / "resolved_config.yaml").string() << "\n";
    };
    if (flags.verbose) err << name << ": output directory " << out_dir.string() << "\n";
    const int code = command->run(doc, out_dir, snapshot, out);
    if (code != kExitOk) err << name << ": FAILED\n";
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << name << " failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace artisyn::cli
