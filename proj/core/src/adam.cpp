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

#include "artisyn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace artisyn::nn {

Adam::Adam(const ParamSet& params, AdamConfig config) : config_(config) {
  if (!(config.learning_rate > 0.0)) throw ConfigError("Adam: learning rate must be > 0");
  if (config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 || config.beta2 >= 1.0) {
    throw ConfigError("Adam: betas must lie in [0, 1)");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_.push_back(Mat::Zero(params.value(i).rows(), params.value(i).cols()));
    v_.push_back(Mat::Zero(params.value(i).rows(), params.value(i).cols()));
  }
}

void Adam::step(ParamSet& params, const Gradients& grads) {
  if (grads.size() != m_.size() || params.size() != m_.size()) {
    throw std::invalid_argument("Adam::step: parameter layout changed");
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const Mat& g = grads[i];
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseAbs2();
    params.value(i).array() -= config_.learning_rate * (m_[i].array() / c1) /
                               ((v_[i].array() / c2).sqrt() + config_.epsilon);
  }
}

}  // namespace artisyn::nn
