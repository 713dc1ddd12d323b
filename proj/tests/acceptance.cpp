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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "artisyn/decoder.hpp"
#include "artisyn/encoder.hpp"
#include "artisyn/gradcheck.hpp"
#include "artisyn/losses.hpp"
#include "artisyn/metrics.hpp"
#include "artisyn/probe.hpp"
#include "artisyn/synthworld.hpp"
#include "artisyn/trainer.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

namespace artisyn {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Pinned tolerances.
constexpr double kIdentityTol = 1e-6;
constexpr double kAlgebraTol = 1e-12;
constexpr double kMcdSymmetryTol = 1e-12;
constexpr double kMcdOracleTol = 1e-6;
constexpr double kProbeFloor = 0.99;
constexpr int kTrendSeeds = 5;
constexpr int kTrendWinsNeeded = 4;

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

EncoderConfig desk_encoder(const WorldConfig& w, int fusion = 32) {
  EncoderConfig ec;
  for (const auto& m : w.modalities) ec.modalities.push_back({m.name, m.channels, m.rate});
  ec.fusion_dim = fusion;
  ec.transformer = {1, fusion, 2, 2 * fusion, 0.1};
  ec.output_dim = w.target_dim;
  return ec;
}

TrainConfig desk_train(long steps, std::uint64_t seed) {
  TrainConfig tc;
  tc.adam.learning_rate = 1e-3;
  tc.batch_size = 8;
  tc.steps = steps;
  tc.seed = seed;
  return tc;
}

// 1. encode(single-modality sample) == shared_encode(unimodal_encode(x)).
Outcome single_modality_identity() {
  Rng rng(101);
  const std::vector<std::pair<std::string, int>> mods{{"ema", 12}, {"mri", 24}, {"emg", 8}};
  std::uniform_int_distribution<int> pick(0, 2), half_len(10, 40), width(0, 2);
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    EncoderConfig c;
    for (const auto& [name, ch] : mods) c.modalities.push_back({name, ch, 100.0});
    c.fusion_dim = 8 << width(rng);
    c.transformer = {1, c.fusion_dim, 2, 2 * c.fusion_dim, 0.2};
    c.output_dim = 6;
    const MultimodalEncoder enc(c, rng());
    const auto& [name, ch] = mods[static_cast<std::size_t>(pick(rng))];
    const AlignedSample s = testing::make_sample("x", 2 * half_len(rng), {{name, ch}}, 6, rng);
    const Mat a = enc.encode(s, false).to_mat();
    const Mat b = enc.shared_encode(enc.unimodal_encode(name, *s.modalities.at(name)), false).to_mat();
    if (a.rows() != b.rows() || a.cols() != b.cols()) return {false, "shape mismatch at draw " + std::to_string(draw)};
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  return {worst <= kIdentityTol, "100 draws, max abs diff " + fmt(worst)};
}

// 2. Fusion averaging, permutation invariance, pair-count scale invariance, L2 = 0 below two modalities.
Outcome fusion_loss_algebra() {
  Rng rng(202);
  std::uniform_int_distribution<int> slots_d(2, 5), frames_d(1, 8), eighths(-32, 32), pos_eighths(1, 32);
  std::bernoulli_distribution coin(0.5);
  std::size_t failures = 0;
  std::string first;
  const auto fail = [&](int c, const std::string& what) {
    if (failures++ == 0) first = "case " + std::to_string(c) + ": " + what;
  };
  for (int c = 0; c < 1000; ++c) {
    const int slots = slots_d(rng);
    const int frames = frames_d(rng);
    const int channels = 3 * frames_d(rng);
    std::vector<bool> present(static_cast<std::size_t>(slots));
    for (auto&& p : present) p = coin(rng);
    if (std::none_of(present.begin(), present.end(), [](bool p) { return p; })) present[0] = true;
    const PresenceMask mask{present};
    std::vector<std::optional<FrameSequence>> enc(static_cast<std::size_t>(slots));
    Mat sum = Mat::Zero(frames, channels);
    for (int m = 0; m < slots; ++m) {
      if (!present[static_cast<std::size_t>(m)]) continue;
      enc[static_cast<std::size_t>(m)] = testing::random_seq(frames, channels, 50.0, rng);
      sum += enc[static_cast<std::size_t>(m)]->to_mat();
    }
    const double n = static_cast<double>(mask.count());
    const Mat fused = fuse(enc, mask).to_mat();
    if ((fused - sum / n).cwiseAbs().maxCoeff() > 1e-6) fail(c, "fusion is not the presence average");

    std::vector<std::size_t> perm(static_cast<std::size_t>(slots));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::optional<FrameSequence>> penc;
    std::vector<bool> ppresent;
    for (std::size_t i : perm) {
      penc.push_back(enc[i]);
      ppresent.push_back(present[i]);
    }
    if ((fuse(penc, PresenceMask{ppresent}).to_mat() - fused).cwiseAbs().maxCoeff() > 1e-6) {
      fail(c, "fusion depends on slot order");
    }
    if (std::abs(deep_feature_loss(penc, PresenceMask{ppresent}) - deep_feature_loss(enc, mask)) > 1e-6) {
      fail(c, "deep feature loss depends on slot order");
    }
    if (mask.count() < 2 && deep_feature_loss(enc, mask) != 0.0) fail(c, "L2 nonzero with fewer than two modalities");

    // Equidistant encodings built from exactly representable values: L2 must equal d exactly.
    const int k = std::min(slots, 2 + static_cast<int>(coin(rng)));
    const double a = pos_eighths(rng) / 8.0;
    Mat base(frames, channels);
    for (Eigen::Index i = 0; i < base.size(); ++i) base.data()[i] = eighths(rng) / 8.0;
    std::vector<std::optional<FrameSequence>> eq(static_cast<std::size_t>(slots));
    std::vector<bool> eq_present(static_cast<std::size_t>(slots), false);
    double d = 0.0;
    for (int m = 0; m < k; ++m) {
      Mat e = base;
      if (k == 2) {
        if (m == 1) e.array() += a;
        d = a;
      } else {
        for (int ch = m; ch < channels; ch += 3) e.col(ch).array() += a;
        d = 2.0 * a / 3.0;
      }
      const std::size_t slot = perm[static_cast<std::size_t>(m)];
      eq_present[slot] = true;
      eq[slot] = FrameSequence::from_mat(e, 50.0);
    }
    const double l2 = deep_feature_loss(eq, PresenceMask{eq_present});
    if (std::abs(l2 - d) > kAlgebraTol) fail(c, "L2 " + fmt(l2) + " != d " + fmt(d) + " for N=" + std::to_string(k));
  }
  return {failures == 0, "1000 cases, " + std::to_string(failures) + " failures" + (first.empty() ? "" : "; " + first)};
}

// 3. Finite-difference gradient checks.
Outcome gradient_checks() {
  const GradCheckReport e = grad_check_encoder(gradcheck_defaults("encoder"));
  const GradCheckReport d = grad_check_decoder(gradcheck_defaults("decoder"));
  const GradCheckReport l = grad_check_losses(gradcheck_defaults("losses"));
  const bool ok = e.passed() && e.tolerance <= 1e-4 && d.passed() && d.tolerance <= 1e-4 && l.passed() &&
                  l.tolerance <= 1e-6;
  return {ok, "encoder " + fmt(e.max_rel_error) + ", decoder " + fmt(d.max_rel_error) + ", losses " +
                  fmt(l.max_rel_error)};
}

// 4. Fine-tuning leaves absent-modality encoders bit-identical.
Outcome masking_blocks_gradients() {
  WorldConfig w;
  w.seed = 4;
  w.utterances = 12;
  w.waveform = false;
  const Dataset ds = generate_world(w).prepare();
  const EncoderConfig ec = desk_encoder(w);
  const Checkpoint init = MultimodalEncoder(ec, 44).to_checkpoint();
  TrainConfig tc = desk_train(50, 4);
  tc.finetune_modality = "mri";
  const Checkpoint out = finetune_encoder(init, tc, ds).checkpoint;
  const MultimodalEncoder model(ec, 44);
  double moved_masked = 0.0, moved_live = 0.0;
  for (const char* m : {"ema", "emg"}) {
    for (const auto& name : model.unimodal_param_names(m)) {
      moved_masked = std::max(moved_masked, (out.params.value(name) - init.params.value(name)).cwiseAbs().maxCoeff());
    }
  }
  for (const auto& name : model.unimodal_param_names("mri")) {
    moved_live = std::max(moved_live, (out.params.value(name) - init.params.value(name)).cwiseAbs().maxCoeff());
  }
  return {moved_masked == 0.0 && moved_live > 0.0,
          "50 steps, max change absent " + fmt(moved_masked) + ", finetuned " + fmt(moved_live)};
}

// 5. Pretrain-then-finetune beats unimodal-from-scratch at equal step budget.
Outcome pretrain_finetune_trend() {
  int wins = 0;
  std::string detail;
  for (int seed = 0; seed < kTrendSeeds; ++seed) {
    WorldConfig w;
    w.seed = static_cast<std::uint64_t>(seed);
    w.utterances = 100;
    w.waveform = false;
    w.presence = {{{"ema", "emg"}, 0.95}, {{"ema", "mri", "emg"}, 0.05}};
    const Dataset ds = generate_world(w).prepare();
    const EncoderConfig ec = desk_encoder(w);
    const TrainResult pre = pretrain_encoder(ec, desk_train(1500, static_cast<std::uint64_t>(seed)), ds);
    TrainConfig ft = desk_train(500, static_cast<std::uint64_t>(seed));
    ft.finetune_modality = "mri";
    const TrainResult tuned = finetune_encoder(pre.checkpoint, ft, ds);
    TrainConfig sc = ft;
    sc.steps = 2000;
    const TrainResult scratch =
        finetune_encoder(MultimodalEncoder(ec, 12345 + static_cast<std::uint64_t>(seed)).to_checkpoint(), sc, ds);
    const double pf = encoder_split_l1(MultimodalEncoder::from_checkpoint(tuned.checkpoint), ds, Split::test, "mri");
    const double sr = encoder_split_l1(MultimodalEncoder::from_checkpoint(scratch.checkpoint), ds, Split::test, "mri");
    wins += pf < sr;
    detail += (seed ? "; " : "") + std::to_string(seed) + ": " + fmt(pf) + " vs " + fmt(sr);
  }
  return {wins >= kTrendWinsNeeded, std::to_string(wins) + "/" + std::to_string(kTrendSeeds) + " seeds (" + detail + ")"};
}

// 6. The deep feature loss shrinks the gap between unimodal outputs.
Outcome deep_feature_alignment() {
  int wins = 0;
  std::string detail;
  for (int seed = 0; seed < kTrendSeeds; ++seed) {
    WorldConfig w;
    w.seed = static_cast<std::uint64_t>(seed);
    w.utterances = 40;
    w.waveform = false;
    const Dataset ds = generate_world(w).prepare();
    double gap[2];
    for (int k = 0; k < 2; ++k) {
      TrainConfig tc = desk_train(500, static_cast<std::uint64_t>(seed));
      tc.lambda_l2 = k == 0 ? 1.0 : 0.0;
      const TrainResult r = pretrain_encoder(desk_encoder(w), tc, ds);
      gap[k] = unimodal_gap(MultimodalEncoder::from_checkpoint(r.checkpoint), ds, Split::test);
    }
    wins += gap[0] < gap[1];
    detail += (seed ? "; " : "") + fmt(gap[0]) + " vs " + fmt(gap[1]);
  }
  return {wins == kTrendSeeds, std::to_string(wins) + "/" + std::to_string(kTrendSeeds) + " seeds (" + detail + ")"};
}

// 7. Linear probes: noise-free linear world is near perfect; rectified derivative ranks below linear.
Outcome probe_oracle() {
  WorldConfig quiet;
  quiet.seed = 10;
  quiet.utterances = 20;
  quiet.waveform = false;
  for (auto& m : quiet.modalities) {
    m.map = ObservationMap::linear;
    m.noise = 0.0;
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& m : quiet.modalities) pairs.emplace_back(m.name, "target");
  const ProbeReport clean = correlation_table(generate_world(quiet).prepare(), pairs, ProbeConfig{});
  double lowest = 1.0;
  for (const auto& e : clean.entries) lowest = std::min(lowest, e.correlation.mean);

  WorldConfig noisy = quiet;
  noisy.modalities = WorldConfig{}.modalities;
  for (auto& m : noisy.modalities) m.noise = 0.1;
  const ProbeReport r = correlation_table(generate_world(noisy).prepare(), pairs, ProbeConfig{});
  const double lin = r.at("ema", "target").correlation.mean;
  const double rect = r.at("emg", "target").correlation.mean;
  return {lowest >= kProbeFloor && rect < lin,
          "noise-free min " + fmt(lowest) + "; noise 0.1 linear " + fmt(lin) + " > rectified " + fmt(rect)};
}

// Independent closed form for one shifted coefficient, summed by hand.
double offset_oracle(double delta, Eigen::Index frames) {
  double total = 0.0;
  for (Eigen::Index f = 0; f < frames; ++f) total += 10.0 / std::log(10.0) * std::sqrt(2.0 * delta * delta);
  return total / static_cast<double>(frames);
}

// 8. MCD identity, symmetry and the constant-offset case.
Outcome mcd_properties() {
  Rng rng(808);
  const MelCepstrumConfig cfg;
  double self = 0.0, asym = 0.0, offset_err = 0.0;
  for (int t = 0; t < 5; ++t) {
    const FrameSequence a = FrameSequence::from_mat(testing::random_mat(8000, 1, rng, 0.1), 16000.0);
    const FrameSequence b = FrameSequence::from_mat(testing::random_mat(8000, 1, rng, 0.1), 16000.0);
    self = std::max(self, mcd(a, a, cfg));
    asym = std::max(asym, std::abs(mcd(a, b, cfg) - mcd(b, a, cfg)));
  }
  std::uniform_real_distribution<double> delta(-3.0, 3.0);
  std::uniform_int_distribution<int> coef(0, 12);
  for (int t = 0; t < 100; ++t) {
    const Mat c = testing::random_mat(20, 13, rng);
    Mat shifted = c;
    const double dv = delta(rng);
    shifted.col(coef(rng)).array() += dv;
    offset_err = std::max(offset_err, std::abs(mcd_from_cepstra(c, shifted) - offset_oracle(dv, c.rows())));
  }
  return {self == 0.0 && asym <= kMcdSymmetryTol && offset_err <= kMcdOracleTol,
          "self " + fmt(self) + ", asymmetry " + fmt(asym) + ", offset error " + fmt(offset_err)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 9. Shape and format contracts.
Outcome shape_format_contracts() {
  std::vector<std::string> broken;
  Rng rng(909);
  EncoderConfig ec;
  ec.modalities = {{"ema", 12, 100.0}, {"mri", 24, 100.0}, {"emg", 8, 100.0}};
  ec.fusion_dim = 16;
  ec.transformer = {1, 16, 2, 32, 0.2};
  ec.output_dim = 6;
  const MultimodalEncoder enc(ec, 1);
  for (Eigen::Index t = 60; t <= 200; t += 2) {
    const AlignedSample s = testing::make_sample("x", t, {{"ema", 12}, {"emg", 8}}, 6, rng);
    const FrameSequence y = enc.encode(s, false);
    if (y.frames() != t / 2 || y.channels() != 6) broken.push_back("encoder T=" + std::to_string(t));
  }

  DecoderConfig dc;
  dc.input_dim = 6;
  dc.base_width = 8;
  dc.ar_hidden = {16, 16, 16, 16};
  dc.ar_output = 8;
  const ChunkedVocoder voc(dc, 2);
  for (Eigen::Index f : {1, 25, 50, 100}) {
    const FrameSequence wav = voc.synthesize(testing::random_seq(f, 6, 50.0, rng));
    if (wav.frames() != 320 * f || wav.rate() != 16000.0) broken.push_back("decoder F=" + std::to_string(f));
  }

  testing::TempDir dir;
  for (int t = 0; t < 10; ++t) {
    const FrameSequence seq = testing::random_seq(1 + t * 37, 1 + t % 5, 100.0 / (t + 1), rng);
    const std::vector<char> bytes = encode_afs(seq);
    const FrameSequence back = decode_afs(bytes);
    const fs::path p = dir / ("s" + std::to_string(t) + ".afs");
    write_afs(seq, p);
    const std::string on_disk = slurp(p);
    if (!(back == seq) || encode_afs(back) != bytes || on_disk != std::string(bytes.begin(), bytes.end()) ||
        !(read_afs(p) == seq)) {
      broken.push_back("afs round trip " + std::to_string(t));
    }
  }

  WorldConfig w;
  w.seed = 21;
  w.utterances = 6;
  const fs::path m1 = write_world(generate_world(w), dir / "w1");
  const fs::path m2 = write_world(generate_world(w), dir / "w2");
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "w1")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(e.path(), dir / "w1");
    if (slurp(e.path()) != slurp(dir / "w2" / rel)) broken.push_back("world file " + rel.string());
  }
  if (slurp(m1) != slurp(m2) || files < 6) broken.push_back("world manifest");

  std::string detail = "encoder T 60..200, decoder 320x, 10 AFS round trips, " + std::to_string(files) +
                       " world files identical";
  if (!broken.empty()) detail = std::to_string(broken.size()) + " broken, first: " + broken.front();
  return {broken.empty(), detail};
}

}  // namespace
}  // namespace artisyn

int main() {
  using namespace artisyn;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"single-modality encode identity", single_modality_identity},
      {"fusion and loss algebra", fusion_loss_algebra},
      {"gradient checks", gradient_checks},
      {"absent-modality gradient blocking", masking_blocks_gradients},
      {"pretrain-finetune trend", pretrain_finetune_trend},
      {"deep feature alignment trend", deep_feature_alignment},
      {"linear probe oracle", probe_oracle},
      {"MCD properties", mcd_properties},
      {"shape and format contracts", shape_format_contracts},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " " << criteria[i].first << ": " << o.detail
              << " [" << fmt(secs) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
