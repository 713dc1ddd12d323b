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

#pragma once

#include "artisyn/tensor.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace artisyn::nn {

/// Named 2-D parameter tensors, addressable by hierarchical dotted name.
class ParamSet {
 public:
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols);
  std::size_t add(std::string name, Mat value);

  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::size_t size() const { return values_.size(); }
  std::size_t scalar_count() const;

  const std::string& name(std::size_t i) const { return names_[i]; }
  Mat& value(std::size_t i) { return values_[i]; }
  const Mat& value(std::size_t i) const { return values_[i]; }
  Mat& value(std::string_view n) { return values_[index(n)]; }
  const Mat& value(std::string_view n) const { return values_[index(n)]; }

  /// Rounds every value to the nearest 32-bit float, the checkpoint precision.
  void round_to_float();

  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  std::vector<std::string> names_;
  std::vector<Mat> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Gradient accumulators laid out like a ParamSet.
class Gradients {
 public:
  explicit Gradients(const ParamSet& params);

  Mat& operator[](std::size_t i) { return grads_[i]; }
  const Mat& operator[](std::size_t i) const { return grads_[i]; }
  std::size_t size() const { return grads_.size(); }
  void zero();

 private:
  std::vector<Mat> grads_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), the usual conv/linear default.
void init_uniform(Mat& value, Eigen::Index fan_in, Rng& rng);

}  // namespace artisyn::nn
