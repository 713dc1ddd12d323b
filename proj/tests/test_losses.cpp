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

#include "artisyn/losses.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

namespace artisyn {
namespace {

FrameSequence row(std::initializer_list<float> values) {
  FloatMatrix m(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (float v : values) m(0, i++) = v;
  return FrameSequence(m, 50.0);
}

using Encodings = std::vector<std::optional<FrameSequence>>;

PresenceMask all_present(std::size_t n) { return PresenceMask{std::vector<bool>(n, true)}; }

TEST(L1, WorkedExamples) {
  Rng rng(1);
  const FrameSequence a = testing::random_seq(7, 3, 50.0, rng);
  EXPECT_EQ(l1_loss(a, a), 0.0);
  EXPECT_DOUBLE_EQ(l1_loss(row({1, 2}), row({2, 4})), 1.5);
  const FrameSequence shifted = FrameSequence::from_mat(a.to_mat().array() + 0.25, 50.0);
  EXPECT_NEAR(l1_loss(shifted, a), 0.25, 1e-6);
  EXPECT_THROW(l1_loss(a, testing::random_seq(6, 3, 50.0, rng)), std::invalid_argument);
}

TEST(L1, SymmetricAndNonNegativeProperty) {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const FrameSequence a = testing::random_seq(1 + trial % 9, 1 + trial % 4, 50.0, rng);
    const FrameSequence b = testing::random_seq(a.frames(), a.channels(), 50.0, rng);
    EXPECT_EQ(l1_loss(a, b), l1_loss(b, a));
    EXPECT_GT(l1_loss(a, b), 0.0);
  }
}

TEST(DeepFeature, WorkedExamples) {
  const FrameSequence z = row({0.3f, -1.0f});
  EXPECT_EQ(deep_feature_loss(Encodings{z, z, z}, all_present(3)), 0.0);
  EXPECT_DOUBLE_EQ(deep_feature_loss(Encodings{row({0, 0}), row({1, 3})}, all_present(2)), 2.0);
  // Three encodings, every pair at mean distance 2/3: C(3,2) normalization keeps it 2/3.
  const Encodings tri{row({0, 0, 0}), row({1, 1, 0}), row({1, 0, -1})};
  EXPECT_NEAR(deep_feature_loss(tri, all_present(3)), 2.0 / 3.0, 1e-15);
}

TEST(DeepFeature, BelowTwoModalitiesIsZero) {
  const Encodings e{row({5, 6}), std::nullopt, row({-9, 1})};
  EXPECT_EQ(deep_feature_loss(e, PresenceMask{{true, false, false}}), 0.0);
  EXPECT_THROW(deep_feature_loss(Encodings{row({1}), row({1, 2})}, all_present(2)), std::invalid_argument);
}

TEST(DeepFeature, ScaleIndependentOfModalityCount) {
  // Every pair sits at mean distance d = 2f/3 for N = 2 and for N = 3.
  for (float f : {0.15f, 1.5f, 3.0f}) {
    const double d = 2.0 * f / 3.0;
    const Encodings two{row({0, 0, 0}), row({f, f, 0})};
    const Encodings three{row({0, 0, 0}), row({f, f, 0}), row({f, 0, -f})};
    EXPECT_NEAR(deep_feature_loss(two, all_present(2)), d, 1e-6);
    EXPECT_NEAR(deep_feature_loss(three, all_present(3)), d, 1e-6);
  }
}

TEST(DeepFeature, PermutationInvariantProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    Encodings e;
    for (int m = 0; m < 3; ++m) e.push_back(testing::random_seq(4, 3, 100.0, rng));
    std::vector<bool> present{true, true, rng() % 2 == 0};
    std::vector<std::size_t> perm{0, 1, 2};
    std::shuffle(perm.begin(), perm.end(), rng);
    Encodings pe;
    std::vector<bool> pp;
    for (auto i : perm) pe.push_back(e[i]), pp.push_back(present[i]);
    EXPECT_NEAR(deep_feature_loss(e, PresenceMask{present}), deep_feature_loss(pe, PresenceMask{pp}), 1e-12);
  }
}

TEST(TotalLoss, Combination) {
  Rng rng(4);
  const FrameSequence p = testing::random_seq(5, 2, 50.0, rng);
  const FrameSequence t = testing::random_seq(5, 2, 50.0, rng);
  const Encodings e{testing::random_seq(10, 3, 100.0, rng), testing::random_seq(10, 3, 100.0, rng)};
  const LossBreakdown off = total_loss(p, t, e, all_present(2), 0.0);
  EXPECT_EQ(off.total, off.l1);
  const LossBreakdown single = total_loss(p, t, e, PresenceMask{{true, false}}, 3.0);
  EXPECT_EQ(single.l2, 0.0);
  EXPECT_EQ(single.total, single.l1);
  const LossBreakdown on = total_loss(p, t, e, all_present(2), 1.0);
  EXPECT_DOUBLE_EQ(on.total, on.l1 + on.l2);
  EXPECT_THROW(total_loss(p, t, e, all_present(2), -0.5), std::invalid_argument);
}

TEST(TotalLoss, Arithmetic) {
  // l1 = 1.0 (constant offset), l2 = 0.5 (two encodings half a unit apart), lambda 1.
  const LossBreakdown lb =
      total_loss(row({1, 1}), row({0, 0}), Encodings{row({0, 0}), row({0.5f, 0.5f})}, all_present(2), 1.0);
  EXPECT_DOUBLE_EQ(lb.l1, 1.0);
  EXPECT_DOUBLE_EQ(lb.l2, 0.5);
  EXPECT_DOUBLE_EQ(lb.total, 1.5);
}

TEST(LossLog, OneJsonLine) {
  const std::string line = loss_log_line(12, {1.0, 0.5, 2.0, 2.0});
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j.at("step"), 12);
  EXPECT_EQ(j.at("l1"), 1.0);
  EXPECT_EQ(j.at("l2"), 0.5);
  EXPECT_EQ(j.at("lambda_l2"), 2.0);
  EXPECT_EQ(j.at("total"), 2.0);
}

TEST(GraphLosses, MatchValueLosses) {
  Rng rng(6);
  const FrameSequence a = testing::random_seq(6, 3, 50.0, rng);
  const FrameSequence b = testing::random_seq(6, 3, 50.0, rng);
  nn::Tape tape;
  EXPECT_NEAR(losses::l1(tape.constant(a.to_mat()), tape.constant(b.to_mat())).value()(0, 0), l1_loss(a, b), 1e-12);
  const std::vector<nn::Var> e{tape.constant(a.to_mat()), tape.constant(b.to_mat()), tape.constant(Mat::Zero(6, 3))};
  const auto l2 = losses::deep_feature(e, PresenceMask{{true, true, false}});
  ASSERT_TRUE(l2.has_value());
  EXPECT_NEAR(l2->value()(0, 0), l1_loss(a, b), 1e-12);
  EXPECT_FALSE(losses::deep_feature(e, PresenceMask{{false, true, false}}).has_value());
}

}  // namespace
}  // namespace artisyn
