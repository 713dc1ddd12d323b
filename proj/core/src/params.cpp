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

#include "artisyn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace artisyn::nn {

std::size_t ParamSet::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  return add(std::move(name), Mat::Zero(rows, cols));
}

std::size_t ParamSet::add(std::string name, Mat value) {
  if (index_.contains(name)) throw std::invalid_argument("ParamSet: duplicate name " + name);
  index_.emplace(name, values_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

std::size_t ParamSet::index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw std::out_of_range("ParamSet: unknown parameter " + std::string(name));
  return it->second;
}

bool ParamSet::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const Mat& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

void ParamSet::round_to_float() {
  for (Mat& v : values_) v = v.cast<float>().cast<double>();
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.names_ != b.names_) return false;
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    const Mat& x = a.values_[i];
    const Mat& y = b.values_[i];
    if (x.rows() != y.rows() || x.cols() != y.cols() || x != y) return false;
  }
  return true;
}

Gradients::Gradients(const ParamSet& params) {
  grads_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    grads_.push_back(Mat::Zero(params.value(i).rows(), params.value(i).cols()));
  }
}

void Gradients::zero() {
  for (Mat& g : grads_) g.setZero();
}

void init_uniform(Mat& value, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = dist(rng);
}

}  // namespace artisyn::nn
