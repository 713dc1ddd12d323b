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

#include "artisyn/probe.hpp"
#include "artisyn/synthworld.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <Eigen/SVD>

#include <fstream>

namespace artisyn {
namespace {

using testing::TempDir;

WorldConfig quiet_linear_world(std::uint64_t seed) {
  WorldConfig w;
  w.seed = seed;
  w.utterances = 20;
  w.waveform = false;
  for (auto& m : w.modalities) {
    m.map = ObservationMap::linear;
    m.noise = 0.0;
  }
  return w;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(LatentTrajectory, ShapeAndDeterminism) {
  const WorldConfig w;
  const FrameSequence z = latent_trajectory(w, 5, 3.0);
  EXPECT_EQ(z.frames(), 300);
  EXPECT_EQ(z.channels(), 8);
  EXPECT_EQ(z.rate(), 100.0);
  EXPECT_EQ(latent_trajectory(w, 5, 3.0), z);
  EXPECT_FALSE(latent_trajectory(w, 6, 3.0) == z);
  EXPECT_THROW(latent_trajectory(w, 5, 0.0), std::invalid_argument);
}

TEST(LatentTrajectory, UnitVarianceOverLongTrajectories) {
  const WorldConfig w;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Mat z = latent_trajectory(w, seed, 200.0).to_mat();
    const Eigen::RowVectorXd mean = z.colwise().mean();
    const Eigen::RowVectorXd var = (z.rowwise() - mean).array().square().colwise().mean();
    for (Eigen::Index k = 0; k < var.size(); ++k) {
      EXPECT_GE(var(k), 0.8) << "seed " << seed << " channel " << k;
      EXPECT_LE(var(k), 1.2) << "seed " << seed << " channel " << k;
    }
  }
}

TEST(WorldConfig, ValidateAndJson) {
  WorldConfig w;
  EXPECT_NO_THROW(w.validate());
  EXPECT_EQ(WorldConfig::from_json(w.to_json()).to_json(), w.to_json());
  EXPECT_EQ(w.modalities[0].channels, 12);
  EXPECT_EQ(w.modalities[1].channels, 24);
  EXPECT_EQ(w.modalities[2].channels, 8);
  w.latent_dim = 1;
  EXPECT_THROW(w.validate(), ConfigError);
  w = WorldConfig{};
  w.modalities[0].noise = -0.1;
  EXPECT_THROW(w.validate(), ConfigError);
  EXPECT_EQ(observation_map_from_string("tanh-linear"), ObservationMap::tanh_linear);
  EXPECT_EQ(to_string(ObservationMap::rectified_derivative), "rectified-derivative");
  EXPECT_THROW(observation_map_from_string("cubic"), ConfigError);
}

TEST(GenerateWorld, ObservationMatricesHaveFullRank) {
  const WorldDataset world = generate_world(quiet_linear_world(1));
  for (const auto& [name, a] : world.observation_matrices) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    EXPECT_EQ(a.cols(), 8);
    EXPECT_GT(svd.singularValues().minCoeff(), 1e-3) << name;
  }
}

TEST(GenerateWorld, DurationsAndShapes) {
  WorldConfig w;
  w.waveform = false;
  const WorldDataset world = generate_world(w);
  ASSERT_EQ(world.raw.size(), 100u);
  double total = 0.0;
  for (const auto& raw : world.raw) {
    const double d = raw.target.duration();
    EXPECT_GE(d, 2.0 - 1e-9);
    EXPECT_LE(d, 4.0 + 1e-9);
    total += d;
  }
  EXPECT_GE(total, 200.0);
  EXPECT_LE(total, 400.0);
}

TEST(GenerateWorld, OneModalityPerUtterance) {
  WorldConfig w = quiet_linear_world(2);
  w.presence = one_modality_per_utterance(w);
  w.eval_presence = w.presence;
  const WorldDataset world = generate_world(w);
  for (const auto& e : world.manifest.entries) {
    int present = 0;
    for (const auto& [name, path] : e.modality_paths) present += path.has_value();
    EXPECT_EQ(present, 1) << e.id;
  }
}

TEST(GenerateWorld, NoiseFreeLinearTargetIsExactlyRecoverable) {
  const WorldDataset world = generate_world(quiet_linear_world(3));
  // EMA-like modality at 100 Hz: target frame j sits on modality frame 2j.
  Eigen::Index rows = 0;
  for (const auto& raw : world.raw) rows += raw.target.frames();
  Mat x(rows, 13), y(rows, 16);
  Eigen::Index r = 0;
  for (const auto& raw : world.raw) {
    const Mat o = raw.modalities.at("ema")->to_mat();
    const Mat t = raw.target.to_mat();
    for (Eigen::Index j = 0; j < t.rows(); ++j, ++r) {
      x.row(r) << o.row(2 * j), 1.0;
      y.row(r) = t.row(j);
    }
  }
  const Mat w = x.colPivHouseholderQr().solve(y);
  const double rel = (x * w - y).norm() / y.norm();
  EXPECT_LT(rel, 1e-6);
}

TEST(GenerateWorld, FusingNoisyModalitiesBeatsEither) {
  WorldConfig w = quiet_linear_world(4);
  w.utterances = 30;
  w.modalities = {{"a", 12, 100.0, ObservationMap::linear, 0.5}, {"b", 12, 100.0, ObservationMap::linear, 0.5}};
  const WorldDataset world = generate_world(w);
  // Frame-level least squares on the first 20 utterances, scored on the rest.
  const auto design = [&](std::size_t from, std::size_t to, std::vector<std::string> use) {
    std::vector<Mat> xs, ys;
    for (std::size_t u = from; u < to; ++u) {
      const Mat t = world.raw[u].target.to_mat();
      Mat x(t.rows(), 12 * static_cast<Eigen::Index>(use.size()) + 1);
      for (Eigen::Index j = 0; j < t.rows(); ++j) {
        for (std::size_t k = 0; k < use.size(); ++k) {
          x.block(j, 12 * static_cast<Eigen::Index>(k), 1, 12) = world.raw[u].modalities.at(use[k])->to_mat().row(2 * j);
        }
        x(j, x.cols() - 1) = 1.0;
      }
      xs.push_back(x), ys.push_back(t);
    }
    Eigen::Index rows = 0;
    for (const auto& m : xs) rows += m.rows();
    Mat x(rows, xs[0].cols()), y(rows, 16);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < xs.size(); r += xs[i].rows(), ++i) {
      x.middleRows(r, xs[i].rows()) = xs[i];
      y.middleRows(r, ys[i].rows()) = ys[i];
    }
    return std::pair{x, y};
  };
  const auto error = [&](std::vector<std::string> use) {
    const auto [xtr, ytr] = design(0, 20, use);
    const auto [xte, yte] = design(20, 30, use);
    const Mat wts = xtr.colPivHouseholderQr().solve(ytr);
    return (xte * wts - yte).squaredNorm() / static_cast<double>(yte.size());
  };
  const double a = error({"a"}), b = error({"b"}), ab = error({"a", "b"});
  EXPECT_LT(ab, a);
  EXPECT_LT(ab, b);
}

TEST(GenerateWorld, RectifiedDerivativeIsPositive) {
  WorldConfig w;
  w.utterances = 10;
  w.waveform = false;
  const WorldDataset world = generate_world(w);
  for (const auto& raw : world.raw) {
    if (raw.modalities.at("emg")) {
      EXPECT_GT(raw.modalities.at("emg")->data().minCoeff(), 0.0f);
    }
  }
}

TEST(GenerateWorld, WaveformAtAudioRate) {
  WorldConfig w = quiet_linear_world(8);
  w.utterances = 4;
  w.waveform = true;
  const WorldDataset world = generate_world(w);
  for (const auto& raw : world.raw) {
    ASSERT_TRUE(raw.waveform.has_value());
    EXPECT_EQ(raw.waveform->rate(), 16000.0);
    EXPECT_EQ(raw.waveform->frames(), raw.target.frames() * 320);
    EXPECT_LE(raw.waveform->data().cwiseAbs().maxCoeff(), 1.0f);
    EXPECT_GT(raw.waveform->data().cwiseAbs().maxCoeff(), 0.0f);
  }
}

TEST(WriteWorld, SeedIdenticalRegenerationIsByteIdentical) {
  WorldConfig w;
  w.utterances = 6;
  w.seed = 42;
  TempDir a, b;
  write_world(generate_world(w), a.path());
  write_world(generate_world(w), b.path());
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), a.path());
    ASSERT_TRUE(std::filesystem::exists(b.path() / rel)) << rel;
    EXPECT_EQ(slurp(entry.path()), slurp(b.path() / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 6u * 4u);
}

TEST(WriteWorld, LoadsBackAndCarriesSidecar) {
  WorldConfig w = quiet_linear_world(9);
  w.utterances = 5;
  TempDir dir;
  const WorldDataset world = generate_world(w);
  const auto manifest = write_world(world, dir.path());
  const Dataset loaded = load_dataset(manifest);
  const Dataset memory = world.prepare();
  ASSERT_EQ(loaded.samples.size(), memory.samples.size());
  for (std::size_t i = 0; i < loaded.samples.size(); ++i) {
    EXPECT_EQ(loaded.samples[i].target, memory.samples[i].target);
    EXPECT_EQ(loaded.splits[i], memory.splits[i]);
  }
  const auto side = nlohmann::json::parse(slurp(dir / "world.json"));
  EXPECT_TRUE(side.contains("observation_matrices"));
  EXPECT_TRUE(side.contains("target_matrix"));
  EXPECT_EQ(side.at("latents").size(), 5u);
  const std::string latent = side.at("latents").begin()->get<std::string>();
  EXPECT_EQ(read_afs(dir / latent).channels(), 8);
}

TEST(GenerateWorld, NoiseFreeProbeAboveThreshold) {
  const Dataset ds = generate_world(quiet_linear_world(10)).prepare();
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const char* m : {"ema", "mri", "emg"}) pairs.emplace_back(m, "target");
  const ProbeReport r = correlation_table(ds, pairs, ProbeConfig{});
  for (const auto& e : r.entries) EXPECT_GE(e.correlation.mean, 0.99) << e.input;
}

}  // namespace
}  // namespace artisyn
