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

#include "artisyn/autograd.hpp"
#include "artisyn/decoder.hpp"
#include "artisyn/encoder.hpp"
#include "artisyn/metrics.hpp"
#include "artisyn/probe.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace artisyn {
namespace {

Mat random_mat(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Args: frames, channels (in = out), kernel.
void BM_Conv1dForward(benchmark::State& state) {
  const auto frames = state.range(0);
  const auto ch = state.range(1);
  const auto k = static_cast<int>(state.range(2));
  const Mat x = random_mat(frames, ch, 1);
  const Mat w = random_mat(k * ch, ch, 2);
  for (auto _ : state) {
    nn::Tape tape;
    nn::Var y = nn::conv1d(tape.constant(x), tape.constant(w), std::nullopt, {k, 1, k / 2, 1});
    benchmark::DoNotOptimize(y.value().data());
  }
  state.SetItemsProcessed(state.iterations() * frames);
}
BENCHMARK(BM_Conv1dForward)->Args({200, 32, 5})->Args({200, 128, 5})->Args({1000, 32, 3});

EncoderConfig desk_encoder(int fusion) {
  EncoderConfig c;
  c.modalities = {{"ema", 12, 100.0}, {"mri", 24, 100.0}, {"emg", 8, 100.0}};
  c.fusion_dim = fusion;
  c.transformer = {1, fusion, 2, 2 * fusion, 0.1};
  c.output_dim = 16;
  return c;
}

// Args: frames, fusion width.
void BM_EncoderForward(benchmark::State& state) {
  const MultimodalEncoder enc(desk_encoder(static_cast<int>(state.range(1))), 1);
  const auto frames = state.range(0);
  AlignedSample s{"b", {}, FrameSequence::from_mat(random_mat(frames / 2, 16, 3), 50.0), std::nullopt};
  s.modalities["ema"] = FrameSequence::from_mat(random_mat(frames, 12, 4), 100.0);
  s.modalities["mri"] = FrameSequence::from_mat(random_mat(frames, 24, 5), 100.0);
  s.modalities["emg"] = FrameSequence::from_mat(random_mat(frames, 8, 6), 100.0);
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(s, false));
  state.SetItemsProcessed(state.iterations() * frames);
}
BENCHMARK(BM_EncoderForward)->Args({200, 32})->Args({200, 64});

// Args: base width.
void BM_DecoderChunk(benchmark::State& state) {
  DecoderConfig c;
  c.input_dim = 16;
  c.base_width = static_cast<int>(state.range(0));
  c.ar_hidden = {32, 32, 32, 32};
  c.ar_output = 16;
  const ChunkedVocoder voc(c, 1);
  const FrameSequence feats = FrameSequence::from_mat(random_mat(c.chunk_frames, 16, 2), 50.0);
  const std::vector<float> prev(static_cast<std::size_t>(c.ar_input), 0.0f);
  for (auto _ : state) benchmark::DoNotOptimize(voc.decode_chunk(feats, prev));
  state.SetItemsProcessed(state.iterations() * c.chunk_frames * c.hop());
}
BENCHMARK(BM_DecoderChunk)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

// Args: waveform samples.
void BM_MelCepstrum(benchmark::State& state) {
  const Mat w = random_mat(state.range(0), 1, 7) * 0.1;
  const FrameSequence wav = FrameSequence::from_mat(w, 16000.0);
  const MelCepstrumConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(mel_cepstrum(wav, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MelCepstrum)->Arg(16000)->Arg(64000);

// Args: frames, input width.
void BM_FitLinear(benchmark::State& state) {
  const Mat x = random_mat(state.range(0), state.range(1), 8);
  const Mat y = random_mat(state.range(0), 16, 9);
  for (auto _ : state) benchmark::DoNotOptimize(fit_linear(x, y, 1e-6));
}
BENCHMARK(BM_FitLinear)->Args({2000, 12})->Args({2000, 256});

}  // namespace
}  // namespace artisyn

// The packaged benchmark_main archive carries LTO bytecode from another compiler build.
BENCHMARK_MAIN();
