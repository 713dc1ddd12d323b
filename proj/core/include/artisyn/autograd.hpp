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

#include "artisyn/params.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace artisyn::nn {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode autodiff tape over 2-D double matrices.
///
/// Every op appends a node holding its value and a closure that scatters the
/// node's gradient into its inputs. Parameter leaves route their gradient into
/// a Gradients object on backward(). A Tape is single-owner and not reusable
/// across threads.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Mat& grad_out)>;

  explicit Tape(const ParamSet* params = nullptr) : params_(params) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Mat value);
  Var param(std::size_t index);
  Var param(std::string_view name);

  const Mat& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  /// Gradient accumulator for a node; allocated zeroed on first use.
  Mat& grad(int id);

  /// Records an op result. `inputs` decide whether the node needs a gradient.
  Var record(Mat value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Mat value, std::span<const Var> inputs, BackwardFn backward);

  /// Backpropagates from a 1x1 node and adds parameter gradients into `grads`.
  void backward(Var loss, Gradients& grads);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    bool has_grad = false;
    int param_index = -1;
    BackwardFn backward;
  };

  const ParamSet* params_;
  std::vector<Node> nodes_;
  std::vector<int> param_nodes_;
};

struct FreezeState;

/// Pins the branch taken by every piecewise op (relu, leaky_relu, the sign in
/// mean_abs_diff, the clamp in log_floor) evaluated on this thread.
///
/// Ops record their branch masks until replay() is called; afterwards each
/// evaluation replays the masks in op order, so nearby inputs are evaluated on
/// the same linear piece. Finite-difference checks use this to keep steps from
/// straddling kinks. One instance per thread at a time.
class BranchFreeze {
 public:
  BranchFreeze();
  ~BranchFreeze();
  BranchFreeze(const BranchFreeze&) = delete;
  BranchFreeze& operator=(const BranchFreeze&) = delete;

  /// Switches to replay and rewinds to the first recorded op.
  void replay();

 private:
  std::unique_ptr<FreezeState> state_;
};

struct Conv1dShape {
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int dilation = 1;

  Eigen::Index output_length(Eigen::Index input_length) const;
};

struct ConvTranspose1dShape {
  int kernel = 1;
  int stride = 1;
  int pad_left = 0;  // output index = t * stride + k - pad_left
  Eigen::Index output_length = 0;
};

// Linear algebra.
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var add_row(Var a, Var row);  // broadcast 1 x C over rows
Var add_const(Var a, const Mat& c);
Var mul_const(Var a, const Mat& c);
Var scale(Var a, double s);
Var sum(std::span<const Var> terms);

// Pointwise.
Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var tanh(Var a);
Var log_floor(Var a, double floor);  // log(max(a, floor)); zero gradient below floor

// Row-wise.
Var softmax_rows(Var a);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

// Shape.
Var col_slice(Var a, Eigen::Index start, Eigen::Index count);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var repeat_row(Var row, Eigen::Index times);

// Sequence ops; x is frames x channels.
/// Weight layout: (kernel * in_channels) x out_channels, row k * in + c.
Var conv1d(Var x, Var weight, std::optional<Var> bias, const Conv1dShape& shape);
/// Weight layout: in_channels x (kernel * out_channels), column k * out + o.
Var conv_transpose1d(Var x, Var weight, std::optional<Var> bias,
                     const ConvTranspose1dShape& shape);

/// Mean absolute difference over all elements, as a 1x1 node.
/// The subgradient at zero difference is 0.
Var mean_abs_diff(Var a, Var b);

/// Bernoulli(1 - p) mask scaled by 1 / (1 - p).
Var dropout(Var a, double p, Rng& rng);

}  // namespace artisyn::nn
