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

#include "artisyn/trainer.hpp"

#include "artisyn/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace artisyn {

using nn::Var;

TrainConfig TrainConfig::decoder_defaults() {
  TrainConfig c;
  c.batch_size = 32;
  c.min_crop_s = 0.16;
  c.max_crop_s = 1.0;
  return c;
}

void TrainConfig::validate() const {
  if (!(adam.learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
  if (batch_size < 1) throw ConfigError("train: batch size must be at least 1");
  if (!(min_crop_s > 0.0) || max_crop_s < min_crop_s) throw ConfigError("train: need 0 < min_crop_s <= max_crop_s");
  if (steps < 0) throw ConfigError("train: steps must be non-negative");
  if (!(lambda_l2 >= 0.0)) throw ConfigError("train: lambda_l2 must be non-negative");
  if (checkpoint_every < 0) throw ConfigError("train: checkpoint_every must be non-negative");
}

namespace {

// Independent streams so changing one consumer never shifts another.
Rng stream(std::uint64_t seed, std::uint64_t which) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(which)};
  return Rng(seq);
}

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kBatchStream = 1;
constexpr std::uint64_t kDropoutStream = 2;

class RunWriter {
 public:
  explicit RunWriter(const RunDir& dir) : dir_(dir) {
    if (!dir_) return;
    std::filesystem::create_directories(*dir_);
    loss_.open(*dir_ / "loss_log.jsonl", std::ios::trunc);
    dev_.open(*dir_ / "dev_log.jsonl", std::ios::trunc);
    if (!loss_ || !dev_) throw std::runtime_error("cannot write logs under " + dir_->string());
  }

  void loss(const std::string& line) {
    if (dir_) loss_ << line << '\n';
  }

  void dev(long step, const std::string& metric, double value) {
    if (!dir_) return;
    nlohmann::ordered_json j;
    j["step"] = step;
    j[metric] = value;
    dev_ << j.dump() << '\n';
  }

  void checkpoint(const Checkpoint& ckpt, long step, bool final) {
    if (!dir_) return;
    if (final) {
      save_checkpoint(ckpt, *dir_ / (ckpt.kind + ".ackp"));
    } else {
      save_checkpoint(ckpt, *dir_ / (ckpt.kind + "_step" + std::to_string(step) + ".ackp"));
    }
  }

  void flush() {
    if (!dir_) return;
    loss_.flush();
    dev_.flush();
  }

 private:
  RunDir dir_;
  std::ofstream loss_;
  std::ofstream dev_;
};

std::vector<AlignedSample> train_samples(const Dataset& dataset, const std::optional<std::string>& modality) {
  std::vector<AlignedSample> out;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (dataset.splits[i] != Split::train) continue;
    const AlignedSample& s = dataset.samples[i];
    if (modality) {
      if (s.has(*modality)) out.push_back(only_modality(s, *modality));
    } else {
      out.push_back(s);
    }
  }
  return out;
}

bool has_split(const Dataset& dataset, Split split) {
  return std::find(dataset.splits.begin(), dataset.splits.end(), split) != dataset.splits.end();
}

TrainResult run_encoder(MultimodalEncoder model, const TrainConfig& config, const Dataset& dataset,
                        const RunDir& out) {
  config.validate();
  const auto& modality = config.finetune_modality;
  const std::vector<AlignedSample> samples = train_samples(dataset, modality);
  if (samples.empty()) {
    throw std::invalid_argument(modality ? "no train utterances carry modality " + *modality
                                         : std::string("dataset has no train utterances"));
  }
  for (const auto& s : samples) {
    if (s.present_count() == 0) throw std::invalid_argument("sample " + s.id + " has no modality present");
  }

  RunWriter writer(out);
  nn::ParamSet& params = model.params();
  nn::Adam adam(params, config.adam);
  nn::Gradients grads(params);
  Rng batch_rng = stream(config.seed, kBatchStream);
  Rng dropout_rng = stream(config.seed, kDropoutStream);
  TrainResult result;
  const bool dev = has_split(dataset, Split::dev);

  const auto checkpoint = [&](long step, bool final) {
    if (dev) {
      const double l1 = encoder_split_l1(model, dataset, Split::dev, modality);
      result.dev.push_back({step, l1});
      writer.dev(step, "dev_l1", l1);
    }
    writer.checkpoint(model.to_checkpoint(), step, final);
  };

  for (long step = 1; step <= config.steps; ++step) {
    const Batch batch = crop_batch(samples, config.batch_size, config.min_crop_s, config.max_crop_s, batch_rng);
    const std::span<const ModalitySpec> order(model.config().modalities);
    std::size_t multi = 0;
    for (const auto& item : batch.items) multi += presence_of(item, order).count() >= 2 ? 1 : 0;
    const double inv_b = 1.0 / static_cast<double>(batch.items.size());
    const double l2_weight = multi ? config.lambda_l2 / static_cast<double>(multi) : 0.0;

    grads.zero();
    LossBreakdown lb;
    lb.lambda_l2 = config.lambda_l2;
    for (const auto& item : batch.items) {
      nn::Tape tape(&params);
      const auto trace = model.forward(tape, item, config.dropout ? &dropout_rng : nullptr);
      const Var l1 = losses::l1(trace.output, tape.constant(item.target.to_mat()));
      lb.l1 += l1.value()(0, 0) * inv_b;
      Var loss = nn::scale(l1, inv_b);
      if (auto l2 = losses::deep_feature(trace.unimodal, trace.mask)) {
        lb.l2 += l2->value()(0, 0) / static_cast<double>(multi);
        if (l2_weight > 0.0) loss = nn::add(loss, nn::scale(*l2, l2_weight));
      }
      tape.backward(loss, grads);
    }
    lb.total = lb.l1 + lb.lambda_l2 * lb.l2;
    adam.step(params, grads);
    params.round_to_float();  // keep the live model equal to its checkpoint
    result.losses.push_back(lb);
    writer.loss(loss_log_line(step, lb));
    if (config.checkpoint_every > 0 && step % config.checkpoint_every == 0 && step != config.steps) {
      checkpoint(step, false);
    }
  }
  checkpoint(config.steps, true);
  writer.flush();
  result.checkpoint = model.to_checkpoint();
  return result;
}

}  // namespace

TrainResult pretrain_encoder(const EncoderConfig& model, const TrainConfig& config, const Dataset& dataset,
                             const RunDir& out) {
  if (config.finetune_modality) throw ConfigError("pretrain: finetune_modality must be unset");
  if (dataset.samples.empty()) throw std::invalid_argument("pretrain: empty dataset");
  Rng init = stream(config.seed, kInitStream);
  return run_encoder(MultimodalEncoder(model, init()), config, dataset, out);
}

TrainResult finetune_encoder(const Checkpoint& init, const TrainConfig& config, const Dataset& dataset,
                             const RunDir& out) {
  if (!config.finetune_modality) throw ConfigError("finetune: finetune_modality is required");
  MultimodalEncoder model = MultimodalEncoder::from_checkpoint(init);
  const auto& specs = model.config().modalities;
  if (std::none_of(specs.begin(), specs.end(), [&](const ModalitySpec& m) { return m.name == *config.finetune_modality; })) {
    throw ConfigError("finetune: unknown modality " + *config.finetune_modality);
  }
  return run_encoder(std::move(model), config, dataset, out);
}

TrainResult train_decoder(const DecoderConfig& model_config, const TrainConfig& config, const Dataset& dataset,
                          const RunDir& out) {
  config.validate();
  std::vector<AlignedSample> samples;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (dataset.splits[i] != Split::train) continue;
    if (!dataset.samples[i].waveform) {
      throw std::invalid_argument("train_decoder: sample " + dataset.samples[i].id + " has no waveform");
    }
    samples.push_back(dataset.samples[i]);
  }
  if (samples.empty()) throw std::invalid_argument("train_decoder: dataset has no train utterances");

  Rng init = stream(config.seed, kInitStream);
  ChunkedVocoder model(model_config, init());
  const int hop = model.config().hop();
  if (samples.front().target.channels() != model.config().input_dim) {
    throw ConfigError("train_decoder: target width does not match decoder input_dim");
  }
  RunWriter writer(out);
  nn::ParamSet& params = model.params();
  nn::Adam adam(params, config.adam);
  nn::Gradients grads(params);
  Rng batch_rng = stream(config.seed, kBatchStream);
  const SpectralConfig spectral;
  TrainResult result;
  const bool dev = has_split(dataset, Split::dev);

  const auto checkpoint = [&](long step, bool final) {
    if (dev) {
      const double v = decoder_split_loss(model, dataset, Split::dev, spectral);
      result.dev.push_back({step, v});
      writer.dev(step, "dev_recon", v);
    }
    writer.checkpoint(model.to_checkpoint(), step, final);
  };

  for (long step = 1; step <= config.steps; ++step) {
    const DecoderBatch batch =
        crop_decoder_batch(samples, config.batch_size, config.min_crop_s, config.max_crop_s, batch_rng);
    const double inv_b = 1.0 / static_cast<double>(batch.items.size());
    grads.zero();
    double recon = 0.0;
    for (const auto& crop : batch.items) {
      const AlignedSample& s = samples[crop.sample_index];
      nn::Tape tape(&params);
      const Var pred = model.teacher_forced(tape, s, crop.start_frame, batch.window_frames);
      const Mat gt = s.waveform->to_mat().middleRows(crop.start_frame * hop, batch.window_frames * hop);
      const Var loss = decoder_recon_loss(pred, tape.constant(gt), spectral);
      recon += loss.value()(0, 0) * inv_b;
      tape.backward(nn::scale(loss, inv_b), grads);
    }
    adam.step(params, grads);
    params.round_to_float();  // keep the live model equal to its checkpoint
    result.losses.push_back({recon, 0.0, 0.0, recon});
    writer.loss(decoder_log_line(step, recon));
    if (config.checkpoint_every > 0 && step % config.checkpoint_every == 0 && step != config.steps) {
      checkpoint(step, false);
    }
  }
  checkpoint(config.steps, true);
  writer.flush();
  result.checkpoint = model.to_checkpoint();
  return result;
}

double encoder_split_l1(const MultimodalEncoder& model, const Dataset& dataset, Split split,
                        const std::optional<std::string>& modality) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (dataset.splits[i] != split) continue;
    AlignedSample s = trim_even(dataset.samples[i]);
    if (modality) {
      if (!s.has(*modality)) continue;
      s = only_modality(s, *modality);
    }
    total += l1_loss(model.encode(s, false), s.target);
    ++n;
  }
  if (n == 0) throw std::invalid_argument("no " + std::string(to_string(split)) + " utterances to evaluate");
  return total / static_cast<double>(n);
}

double unimodal_gap(const MultimodalEncoder& model, const Dataset& dataset, Split split) {
  double total = 0.0;
  std::size_t n = 0;
  const auto& specs = model.config().modalities;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (dataset.splits[i] != split) continue;
    const AlignedSample s = trim_even(dataset.samples[i]);
    if (s.present_count() < 2) continue;
    std::vector<std::optional<FrameSequence>> enc;
    for (const auto& m : specs) {
      const auto it = s.modalities.find(m.name);
      enc.push_back(it != s.modalities.end() && it->second
                        ? std::optional<FrameSequence>(model.unimodal_encode(m.name, *it->second))
                        : std::nullopt);
    }
    total += deep_feature_loss(enc, presence_of(s, specs));
    ++n;
  }
  if (n == 0) throw std::invalid_argument("no multimodal utterances to measure");
  return total / static_cast<double>(n);
}

double decoder_split_loss(const ChunkedVocoder& model, const Dataset& dataset, Split split,
                          const SpectralConfig& spectral) {
  double total = 0.0;
  std::size_t n = 0;
  const int hop = model.config().hop();
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (dataset.splits[i] != split) continue;
    const AlignedSample& s = dataset.samples[i];
    if (!s.waveform) continue;
    const Eigen::Index frames = std::min<Eigen::Index>(s.target.frames(), s.waveform->frames() / hop);
    if (frames * hop < spectral.frame_length) continue;
    nn::Tape tape(&model.params());
    const Var pred = model.teacher_forced(tape, s, 0, frames);
    const Mat gt = s.waveform->to_mat().topRows(frames * hop);
    total += decoder_recon_loss(pred, tape.constant(gt), spectral).value()(0, 0);
    ++n;
  }
  if (n == 0) throw std::invalid_argument("no " + std::string(to_string(split)) + " utterances with waveforms");
  return total / static_cast<double>(n);
}

std::string decoder_log_line(long step, double recon) {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["recon"] = recon;
  return j.dump();
}

}  // namespace artisyn
