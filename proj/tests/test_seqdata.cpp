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

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace artisyn {
namespace {

using testing::TempDir;

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(FrameSequence, RejectsInvalidContents) {
  FloatMatrix m(2, 2);
  m << 1, 2, 3, std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(FrameSequence(m, 100.0), std::invalid_argument);
  m(1, 1) = std::numeric_limits<float>::infinity();
  EXPECT_THROW(FrameSequence(m, 100.0), std::invalid_argument);
  m(1, 1) = 0.0f;
  EXPECT_THROW(FrameSequence(m, 0.0), std::invalid_argument);
  EXPECT_THROW(FrameSequence(m, -5.0), std::invalid_argument);
  EXPECT_THROW(FrameSequence(FloatMatrix(0, 3), 100.0), std::invalid_argument);
  EXPECT_NO_THROW(FrameSequence(m, 100.0));
}

TEST(Afs, SingleFrameFileLayout) {
  TempDir dir;
  const FrameSequence seq(FloatMatrix::Zero(1, 1), 100.0);
  write_afs(seq, dir / "one.afs");
  const auto bytes = slurp(dir / "one.afs");
  // magic 4 + channels 4 + rate 8 + frames 8 + one float 4.
  ASSERT_EQ(bytes.size(), 28u);
  EXPECT_EQ(std::string(bytes.data(), 4), "AFS1");
  std::uint32_t channels = 0;
  double rate = 0.0;
  std::uint64_t frames = 0;
  std::memcpy(&channels, bytes.data() + 4, 4);
  std::memcpy(&rate, bytes.data() + 8, 8);
  std::memcpy(&frames, bytes.data() + 16, 8);
  EXPECT_EQ(channels, 1u);
  EXPECT_EQ(rate, 100.0);
  EXPECT_EQ(frames, 1u);
  EXPECT_EQ(read_afs(dir / "one.afs"), seq);
}

TEST(Afs, EmaShapedRoundTrip) {
  TempDir dir;
  Rng rng(3);
  const FrameSequence seq = testing::random_seq(100, 12, 100.0, rng);
  write_afs(seq, dir / "ema.afs");
  const FrameSequence back = read_afs(dir / "ema.afs");
  EXPECT_EQ(back.channels(), 12);
  EXPECT_EQ(back.rate(), 100.0);
  EXPECT_EQ(back.frames(), 100);
  EXPECT_EQ(back, seq);
}

TEST(Afs, ByteExactRoundTripProperty) {
  Rng rng(11);
  std::uniform_int_distribution<int> dim(1, 40);
  std::uniform_real_distribution<double> rate(1.0, 20000.0);
  for (int trial = 0; trial < 200; ++trial) {
    const FrameSequence seq = testing::random_seq(dim(rng), dim(rng), rate(rng), rng);
    const std::vector<char> bytes = encode_afs(seq);
    const FrameSequence back = decode_afs(bytes);
    ASSERT_EQ(back, seq);
    ASSERT_EQ(encode_afs(back), bytes);
  }
}

TEST(Afs, RejectsBadMagic) {
  TempDir dir;
  auto bytes = encode_afs(FrameSequence(FloatMatrix::Ones(2, 2), 10.0));
  bytes[0] = 'X';
  EXPECT_THROW(decode_afs(bytes), FormatError);
}

TEST(Afs, RejectsTruncatedPayload) {
  Rng rng(5);
  auto bytes = encode_afs(testing::random_seq(10, 3, 100.0, rng));
  bytes.resize(bytes.size() - 3 * 4);  // declares 10 frames, holds 9
  EXPECT_THROW(decode_afs(bytes), FormatError);
}

TEST(Afs, RejectsNonFinitePayload) {
  auto bytes = encode_afs(FrameSequence(FloatMatrix::Ones(1, 1), 10.0));
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + 24, &nan, 4);
  EXPECT_THROW(decode_afs(bytes), FormatError);
}

TEST(Afs, UnwritablePathThrows) {
  testing::TempDir dir;
  std::ofstream(dir / "file") << "x";
  // A regular file as parent directory fails even with root privileges.
  EXPECT_ANY_THROW(write_afs(FrameSequence(FloatMatrix::Ones(1, 1), 10.0), dir / "file" / "y.afs"));
  EXPECT_THROW(write_afs(FrameSequence(FloatMatrix::Ones(1, 1), 10.0), dir.path()), std::runtime_error);
}

TEST(Resample, MriRateToCommonRate) {
  Rng rng(1);
  const FrameSequence mri = testing::random_seq(250, 4, 250.0 / 3.0, rng);
  const FrameSequence out = resample_linear(mri, 100.0);
  EXPECT_EQ(out.frames(), 300);
  EXPECT_EQ(out.rate(), 100.0);
  EXPECT_EQ(out.data().row(0), mri.data().row(0));
}

TEST(Resample, ConstantStaysConstant) {
  const FrameSequence c(FloatMatrix::Constant(37, 3, 1.25f), 37.0);
  for (double rate : {5.0, 37.0, 83.0, 1000.0}) {
    const FrameSequence out = resample_linear(c, rate);
    EXPECT_TRUE((out.data().array() == 1.25f).all()) << rate;
  }
}

TEST(Resample, RampMidpoint) {
  FloatMatrix ramp(10, 1);
  for (int i = 0; i < 10; ++i) ramp(i, 0) = static_cast<float>(i);
  const FrameSequence out = resample_linear(FrameSequence(ramp, 10.0), 20.0);
  ASSERT_EQ(out.frames(), 20);
  EXPECT_FLOAT_EQ(out.data()(5, 0), 2.5f);  // t = 0.25 s
  EXPECT_FLOAT_EQ(out.data()(0, 0), 0.0f);
}

TEST(Resample, NativeRateIsIdentity) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const FrameSequence seq = testing::random_seq(1 + trial * 3, 5, 50.0 + trial, rng);
    const FrameSequence out = resample_linear(seq, seq.rate());
    ASSERT_EQ(out.frames(), seq.frames());
    EXPECT_LE((out.to_mat() - seq.to_mat()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Resample, RejectsNonPositiveRate) {
  const FrameSequence seq(FloatMatrix::Ones(4, 1), 10.0);
  EXPECT_THROW(resample_linear(seq, 0.0), std::invalid_argument);
  EXPECT_THROW(resample_linear(seq, -1.0), std::invalid_argument);
}

std::vector<AlignedSample> corpus(Rng& rng, int count = 8, Eigen::Index frames = 260) {
  std::vector<AlignedSample> v;
  for (int i = 0; i < count; ++i) {
    v.push_back(testing::make_sample("u" + std::to_string(i), frames, {{"ema", 3}, {"emg", 2}}, 4, rng));
  }
  return v;
}

TEST(CropBatch, SharedEvenWindowAndHalfRateTargets) {
  Rng data_rng(4);
  const auto samples = corpus(data_rng);
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Batch b = crop_batch(samples, 64, 0.6, 2.0, rng);
    ASSERT_EQ(b.items.size(), 64u);
    EXPECT_EQ(b.window_frames % 2, 0);
    EXPECT_GE(b.window_frames, 60);
    EXPECT_LE(b.window_frames, 200);
    for (const auto& item : b.items) {
      EXPECT_EQ(item.modality_frames(), b.window_frames);
      EXPECT_EQ(item.target.frames(), b.window_frames / 2);
      EXPECT_NO_THROW(item.validate());
    }
  }
}

TEST(CropBatch, DegenerateInterval) {
  Rng data_rng(4);
  const auto samples = corpus(data_rng);
  Rng rng(1);
  const Batch b = crop_batch(samples, 16, 1.0, 1.0, rng);
  EXPECT_EQ(b.window_frames, 100);
}

TEST(CropBatch, DeterministicForSeed) {
  Rng data_rng(4);
  const auto samples = corpus(data_rng);
  Rng a(42), b(42);
  const Batch x = crop_batch(samples, 12, 0.6, 2.0, a);
  const Batch y = crop_batch(samples, 12, 0.6, 2.0, b);
  ASSERT_EQ(x.window_frames, y.window_frames);
  for (std::size_t i = 0; i < x.items.size(); ++i) {
    EXPECT_EQ(x.items[i].id, y.items[i].id);
    EXPECT_EQ(x.items[i].target, y.items[i].target);
    EXPECT_EQ(*x.items[i].modalities.at("ema"), *y.items[i].modalities.at("ema"));
  }
}

TEST(CropBatch, ItemsCoverAlignedInterval) {
  // Encode the frame index in every channel so the crop offset is readable.
  std::vector<AlignedSample> samples;
  for (int s = 0; s < 3; ++s) {
    const Eigen::Index frames = 240 + 20 * s;
    FloatMatrix ema(frames, 2), emg(frames, 1), target(frames / 2, 1);
    for (Eigen::Index t = 0; t < frames; ++t) ema.row(t).setConstant(static_cast<float>(t)), emg(t, 0) = -static_cast<float>(t);
    for (Eigen::Index t = 0; t < frames / 2; ++t) target(t, 0) = static_cast<float>(2 * t);
    samples.push_back({"s" + std::to_string(s),
                       {{"ema", FrameSequence(ema, 100.0)}, {"emg", FrameSequence(emg, 100.0)}},
                       FrameSequence(target, 50.0),
                       std::nullopt});
  }
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const Batch b = crop_batch(samples, 8, 0.6, 2.0, rng);
    for (const auto& item : b.items) {
      const float start = item.modalities.at("ema")->data()(0, 0);
      EXPECT_EQ(item.modalities.at("emg")->data()(0, 0), -start);
      EXPECT_EQ(item.target.data()(0, 0), start);
      EXPECT_EQ(static_cast<long>(start) % 2, 0);
    }
  }
}

TEST(CropBatch, WindowBoundsProperty) {
  Rng data_rng(4);
  const auto samples = corpus(data_rng, 4, 400);
  Rng rng(23);
  std::uniform_real_distribution<double> lo(0.05, 1.5);
  std::uniform_real_distribution<double> extra(0.0, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    const double min_s = lo(rng);
    const double max_s = min_s + extra(rng);
    const Batch b = crop_batch(samples, 2, min_s, max_s, rng);
    const auto lower = static_cast<Eigen::Index>(std::floor(min_s * 100.0 + 1e-9));
    EXPECT_EQ(b.window_frames % 2, 0);
    EXPECT_GE(b.window_frames, lower - lower % 2);
    EXPECT_LE(b.window_frames, static_cast<Eigen::Index>(std::floor(max_s * 100.0 + 1e-9)));
  }
}

TEST(CropBatch, RejectsShortSamples) {
  Rng data_rng(4);
  const auto samples = corpus(data_rng, 2, 80);
  Rng rng(0);
  EXPECT_THROW(crop_batch(samples, 4, 1.0, 1.0, rng), std::invalid_argument);
  EXPECT_THROW(crop_batch(samples, 4, 0.5, 0.4, rng), std::invalid_argument);
  EXPECT_THROW(crop_batch(samples, 0, 0.2, 0.4, rng), std::invalid_argument);
}

TEST(DecoderCrop, WindowAndOffsets) {
  Rng data_rng(6);
  std::vector<AlignedSample> samples = corpus(data_rng, 3, 200);
  for (auto& s : samples) s.waveform = FrameSequence(FloatMatrix::Zero(s.target.frames() * 320, 1), 16000.0);
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const DecoderBatch b = crop_decoder_batch(samples, 32, 0.16, 1.0, rng);
    ASSERT_EQ(b.items.size(), 32u);
    EXPECT_GE(b.window_frames, 8);
    EXPECT_LE(b.window_frames, 50);
    for (const auto& c : b.items) {
      EXPECT_LE(c.start_frame + b.window_frames, samples[c.sample_index].target.frames());
    }
  }
  samples[1].waveform.reset();
  EXPECT_THROW(crop_decoder_batch(samples, 32, 0.16, 1.0, rng), std::invalid_argument);
}

TEST(AlignedSample, ValidateChecksInvariants) {
  Rng rng(8);
  AlignedSample s = testing::make_sample("a", 20, {{"ema", 2}}, 3, rng);
  EXPECT_NO_THROW(s.validate());
  s.target = testing::random_seq(9, 3, 50.0, rng);
  EXPECT_THROW(s.validate(), std::invalid_argument);
  AlignedSample none{"b", {{"ema", std::nullopt}}, testing::random_seq(10, 3, 50.0, rng), std::nullopt};
  EXPECT_THROW(none.validate(), std::invalid_argument);
}

DatasetManifest two_modality_manifest() {
  DatasetManifest m;
  m.modality_specs = {{"ema", 3, 100.0}, {"mri", 2, 250.0 / 3.0}};
  m.target_spec = {4, 50.0};
  return m;
}

TEST(Manifest, JsonRoundTripAndAbsentEntries) {
  DatasetManifest m = two_modality_manifest();
  m.entries.push_back({"a", Split::train, {{"ema", "a/ema.afs"}, {"mri", std::nullopt}}, "a/target.afs", std::nullopt});
  m.entries.push_back({"b", Split::test, {{"ema", std::nullopt}, {"mri", "b/mri.afs"}}, "b/target.afs", "b/wave.afs"});
  const DatasetManifest back = manifest_from_json(manifest_to_json(m));
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_FALSE(back.entries[0].modality_paths.at("mri").has_value());
  EXPECT_EQ(*back.entries[1].modality_paths.at("mri"), "b/mri.afs");
  EXPECT_EQ(back.entries[1].split, Split::test);
  EXPECT_EQ(manifest_to_json(back), manifest_to_json(m));
}

TEST(Manifest, RejectsDuplicatesAndEmptyEntries) {
  DatasetManifest m = two_modality_manifest();
  m.modality_specs.push_back({"ema", 3, 100.0});
  EXPECT_THROW(m.validate(), FormatError);
  DatasetManifest e = two_modality_manifest();
  e.entries.push_back({"a", Split::train, {{"ema", std::nullopt}}, "t.afs", std::nullopt});
  EXPECT_THROW(e.validate(), FormatError);
}

TEST(Dataset, LoadResamplesAndAligns) {
  TempDir dir;
  Rng rng(12);
  DatasetManifest m = two_modality_manifest();
  // 3.0 s utterance: EMA 300 frames, MRI 250 frames, target 150 frames.
  std::filesystem::create_directories(dir / "u0");
  write_afs(testing::random_seq(300, 3, 100.0, rng), dir / "u0/ema.afs");
  write_afs(testing::random_seq(250, 2, 250.0 / 3.0, rng), dir / "u0/mri.afs");
  write_afs(testing::random_seq(150, 4, 50.0, rng), dir / "u0/target.afs");
  m.entries.push_back({"u0", Split::dev, {{"ema", "u0/ema.afs"}, {"mri", "u0/mri.afs"}}, "u0/target.afs", std::nullopt});
  write_manifest(m, dir / "manifest.json");
  const Dataset ds = load_dataset(dir / "manifest.json");
  ASSERT_EQ(ds.samples.size(), 1u);
  const AlignedSample& s = ds.samples[0];
  EXPECT_EQ(ds.splits[0], Split::dev);
  EXPECT_EQ(s.modalities.at("mri")->frames(), 300);
  EXPECT_EQ(s.modalities.at("mri")->rate(), 100.0);
  EXPECT_EQ(s.target.frames(), 150);
  EXPECT_NO_THROW(s.validate());
}

TEST(Dataset, MissingFileFails) {
  TempDir dir;
  DatasetManifest m = two_modality_manifest();
  m.entries.push_back({"u0", Split::train, {{"ema", "nope.afs"}, {"mri", std::nullopt}}, "t.afs", std::nullopt});
  write_manifest(m, dir / "manifest.json");
  EXPECT_ANY_THROW(load_dataset(dir / "manifest.json"));
}

TEST(TrimEven, DropsOddFrame) {
  Rng rng(3);
  AlignedSample s = testing::make_sample("o", 101, {{"ema", 2}}, 3, rng);
  s.waveform = FrameSequence(FloatMatrix::Zero(50 * 320, 1), 16000.0);
  const AlignedSample t = trim_even(s);
  EXPECT_EQ(t.modality_frames(), 100);
  EXPECT_EQ(t.target.frames(), 50);
  EXPECT_EQ(t.waveform->frames(), 50 * 320);
}

TEST(Split, NamesRoundTrip) {
  for (Split s : {Split::train, Split::dev, Split::test}) EXPECT_EQ(split_from_string(to_string(s)), s);
  EXPECT_THROW(split_from_string("validation"), ConfigError);
}

}  // namespace
}  // namespace artisyn
