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

#include <memory>

#include <cmath>
#include <stdexcept>

namespace artisyn::nn {

const Mat& Var::value() const { return tape->value(id); }

Var Tape::constant(Mat value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, -1, {}});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(std::size_t index) {
  if (params_ == nullptr || index >= params_->size()) {
    throw std::out_of_range("Tape::param: no such parameter");
  }
  if (param_nodes_.size() < params_->size()) param_nodes_.resize(params_->size(), -1);
  if (param_nodes_[index] >= 0) return Var{this, param_nodes_[index]};
  nodes_.push_back(Node{params_->value(index), {}, true, false, static_cast<int>(index), {}});
  param_nodes_[index] = static_cast<int>(nodes_.size()) - 1;
  return Var{this, param_nodes_[index]};
}

Var Tape::param(std::string_view name) {
  if (params_ == nullptr) throw std::out_of_range("Tape::param: tape has no parameters");
  return param(params_->index(name));
}

Mat& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

Var Tape::record(Mat value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Mat value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape != this) throw std::logic_error("Tape::record: input from another tape");
    needs = needs || nodes_[v.id].requires_grad;
  }
  Node node{std::move(value), {}, needs, false, -1, {}};
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var loss, Gradients& grads) {
  if (loss.tape != this) throw std::logic_error("Tape::backward: foreign loss node");
  const Mat& lv = value(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw std::invalid_argument("Tape::backward: loss must be a 1x1 node");
  }
  if (!nodes_[loss.id].requires_grad) return;
  grad(loss.id)(0, 0) += 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }
  for (std::size_t i = 0; i < param_nodes_.size(); ++i) {
    const int id = param_nodes_[i];
    if (id >= 0 && nodes_[id].has_grad) grads[i] += nodes_[id].grad;
  }
}

Eigen::Index Conv1dShape::output_length(Eigen::Index n) const {
  const Eigen::Index span = static_cast<Eigen::Index>(dilation) * (kernel - 1) + 1;
  const Eigen::Index padded = n + 2 * padding;
  if (padded < span) return 0;
  return (padded - span) / stride + 1;
}

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

void accumulate(Tape& t, Var v, const Mat& g) {
  if (t.requires_grad(v.id)) t.grad(v.id) += g;
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Mat out = a.value() * b.value();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, const Mat& g) {
    if (t.requires_grad(a.id)) t.grad(a.id).noalias() += g * t.value(b.id).transpose();
    if (t.requires_grad(b.id)) t.grad(b.id).noalias() += t.value(a.id).transpose() * g;
  });
}

Var matmul_nt(Var a, Var b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  Mat out = a.value() * b.value().transpose();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, const Mat& g) {
    if (t.requires_grad(a.id)) t.grad(a.id).noalias() += g * t.value(b.id);
    if (t.requires_grad(b.id)) t.grad(b.id).noalias() += g.transpose() * t.value(a.id);
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  return a.tape->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Mat& g) {
    accumulate(t, a, g);
    accumulate(t, b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  return a.tape->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Mat& g) {
    accumulate(t, a, g);
    if (t.requires_grad(b.id)) t.grad(b.id) -= g;
  });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument("add_row: row must be 1 x cols");
  }
  Mat out = a.value().rowwise() + row.value().row(0);
  return a.tape->record(std::move(out), {a, row}, [a, row](Tape& t, const Mat& g) {
    accumulate(t, a, g);
    if (t.requires_grad(row.id)) t.grad(row.id) += g.colwise().sum();
  });
}

Var add_const(Var a, const Mat& c) {
  require_same_shape(a.value(), c, "add_const");
  return a.tape->record(a.value() + c, {a}, [a](Tape& t, const Mat& g) { accumulate(t, a, g); });
}

Var mul_const(Var a, const Mat& c) {
  require_same_shape(a.value(), c, "mul_const");
  return a.tape->record(a.value().cwiseProduct(c), {a}, [a, c](Tape& t, const Mat& g) {
    if (t.requires_grad(a.id)) t.grad(a.id) += g.cwiseProduct(c);
  });
}

Var scale(Var a, double s) {
  return a.tape->record(a.value() * s, {a}, [a, s](Tape& t, const Mat& g) {
    if (t.requires_grad(a.id)) t.grad(a.id) += g * s;
  });
}

Var sum(std::span<const Var> terms) {
  if (terms.empty()) throw std::invalid_argument("sum: no terms");
  Mat out = terms[0].value();
  for (std::size_t i = 1; i < terms.size(); ++i) {
    require_same_shape(out, terms[i].value(), "sum");
    out += terms[i].value();
  }
  std::vector<Var> ins(terms.begin(), terms.end());
  return terms[0].tape->record(std::move(out), terms, [ins](Tape& t, const Mat& g) {
    for (const Var& v : ins) accumulate(t, v, g);
  });
}

struct FreezeState {
  bool replaying = false;
  std::vector<Mat> masks;
  std::size_t cursor = 0;
};

namespace {

thread_local FreezeState* g_freeze = nullptr;

// Branch selector of a piecewise op: the natural one, or the frozen one on replay.
Mat branch(Mat natural) {
  if (g_freeze == nullptr) return natural;
  if (!g_freeze->replaying) {
    g_freeze->masks.push_back(natural);
    return natural;
  }
  if (g_freeze->cursor >= g_freeze->masks.size()) throw std::logic_error("BranchFreeze: more ops than recorded");
  const Mat& m = g_freeze->masks[g_freeze->cursor++];
  if (m.rows() != natural.rows() || m.cols() != natural.cols()) {
    throw std::logic_error("BranchFreeze: op sequence changed between record and replay");
  }
  return m;
}

}  // namespace

BranchFreeze::BranchFreeze() : state_(std::make_unique<FreezeState>()) {
  if (g_freeze != nullptr) throw std::logic_error("BranchFreeze: already active on this thread");
  g_freeze = state_.get();
}

BranchFreeze::~BranchFreeze() { g_freeze = nullptr; }

void BranchFreeze::replay() {
  state_->replaying = true;
  state_->cursor = 0;
}

Var relu(Var a) {
  const Mat& x = a.value();
  Mat out = x.cwiseProduct(branch((x.array() > 0.0).cast<double>().matrix()));
  return a.tape->record(std::move(out), {a}, [a](Tape& t, const Mat& g) {
    if (!t.requires_grad(a.id)) return;
    t.grad(a.id) += (t.value(a.id).array() > 0.0).select(g, 0.0).matrix();
  });
}

Var leaky_relu(Var a, double slope) {
  const Mat& x = a.value();
  const Mat factor = (x.array() > 0.0).select(Mat::Ones(x.rows(), x.cols()), slope);
  Mat out = x.cwiseProduct(branch(factor));
  return a.tape->record(std::move(out), {a}, [a, slope](Tape& t, const Mat& g) {
    if (!t.requires_grad(a.id)) return;
    t.grad(a.id) += (t.value(a.id).array() > 0.0).select(g, g * slope).matrix();
  });
}

Var tanh(Var a) {
  Mat out = a.value().array().tanh().matrix();
  const int self = static_cast<int>(a.tape->size());
  return a.tape->record(std::move(out), {a}, [a, self](Tape& t, const Mat& g) {
    if (!t.requires_grad(a.id)) return;
    const Mat& y = t.value(self);
    t.grad(a.id).array() += g.array() * (1.0 - y.array().square());
  });
}

Var log_floor(Var a, double floor) {
  const Mat& x = a.value();
  const Mat above = branch((x.array() > floor).cast<double>().matrix());
  Mat out = (above.array() > 0.0).select(x.array().log(), std::log(floor)).matrix();
  return a.tape->record(std::move(out), {a}, [a, floor](Tape& t, const Mat& g) {
    if (!t.requires_grad(a.id)) return;
    const Mat& x = t.value(a.id);
    t.grad(a.id).array() += (x.array() > floor).select(g.array() / x.array(), 0.0);
  });
}

Var softmax_rows(Var a) {
  const Mat& x = a.value();
  Mat out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  const int self = static_cast<int>(a.tape->size());
  return a.tape->record(std::move(out), {a}, [a, self](Tape& t, const Mat& g) {
    if (!t.requires_grad(a.id)) return;
    const Mat& y = t.value(self);
    Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    Mat gx = g;
    gx.colwise() -= dot;
    t.grad(a.id) += gx.cwiseProduct(y);
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Mat& v = x.value();
  const Eigen::Index n = v.cols();
  if (gamma.rows() != 1 || gamma.cols() != n || beta.rows() != 1 || beta.cols() != n) {
    throw std::invalid_argument("layer_norm: gamma/beta must be 1 x cols");
  }
  Eigen::VectorXd mean = v.rowwise().mean();
  Mat centered = v.colwise() - mean;
  Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / static_cast<double>(n)) + eps).rsqrt();
  Mat xhat = centered.array().colwise() * inv_std.array();
  Mat out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  out.rowwise() += beta.value().row(0);
  return x.tape->record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t,
                                                                               const Mat& g) {
        if (t.requires_grad(gamma.id)) t.grad(gamma.id) += g.cwiseProduct(xhat).colwise().sum();
        if (t.requires_grad(beta.id)) t.grad(beta.id) += g.colwise().sum();
        if (!t.requires_grad(x.id)) return;
        const double n = static_cast<double>(xhat.cols());
        Mat dxhat = g.array().rowwise() * t.value(gamma.id).row(0).array();
        Eigen::VectorXd s1 = dxhat.rowwise().sum();
        Eigen::VectorXd s2 = dxhat.cwiseProduct(xhat).rowwise().sum();
        Mat dx = (dxhat * n);
        dx.colwise() -= s1;
        dx -= (xhat.array().colwise() * s2.array()).matrix();
        dx = (dx.array().colwise() * (inv_std.array() / n)).matrix();
        t.grad(x.id) += dx;
      });
}

Var col_slice(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::out_of_range("col_slice: range outside matrix");
  }
  Mat out = a.value().middleCols(start, count);
  return a.tape->record(std::move(out), {a}, [a, start, count](Tape& t, const Mat& g) {
    if (t.requires_grad(a.id)) t.grad(a.id).middleCols(start, count) += g;
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Mat out(rows, cols);
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return parts[0].tape->record(std::move(out), parts, [ins](Tape& t, const Mat& g) {
    Eigen::Index c0 = 0;
    for (const Var& p : ins) {
      const Eigen::Index w = t.value(p.id).cols();
      if (t.requires_grad(p.id)) t.grad(p.id) += g.middleCols(c0, w);
      c0 += w;
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
  }
  Mat out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return parts[0].tape->record(std::move(out), parts, [ins](Tape& t, const Mat& g) {
    Eigen::Index r0 = 0;
    for (const Var& p : ins) {
      const Eigen::Index h = t.value(p.id).rows();
      if (t.requires_grad(p.id)) t.grad(p.id) += g.middleRows(r0, h);
      r0 += h;
    }
  });
}

Var repeat_row(Var row, Eigen::Index times) {
  if (row.rows() != 1) throw std::invalid_argument("repeat_row: expected a 1 x C row");
  Mat out = row.value().replicate(times, 1);
  return row.tape->record(std::move(out), {row}, [row](Tape& t, const Mat& g) {
    if (t.requires_grad(row.id)) t.grad(row.id) += g.colwise().sum();
  });
}

Var conv1d(Var x, Var weight, std::optional<Var> bias, const Conv1dShape& shape) {
  const Mat& in = x.value();
  const Eigen::Index cin = in.cols();
  const Eigen::Index len = in.rows();
  const Eigen::Index k = shape.kernel;
  if (weight.rows() != k * cin) throw std::invalid_argument("conv1d: weight rows != kernel * in");
  const Eigen::Index cout = weight.cols();
  if (bias && (bias->rows() != 1 || bias->cols() != cout)) {
    throw std::invalid_argument("conv1d: bias must be 1 x out");
  }
  const Eigen::Index out_len = shape.output_length(len);
  if (out_len <= 0) throw std::invalid_argument("conv1d: input shorter than kernel span");

  Mat col = Mat::Zero(out_len, k * cin);
  for (Eigen::Index t = 0; t < out_len; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::Index src = t * shape.stride + j * shape.dilation - shape.padding;
      if (src >= 0 && src < len) col.row(t).segment(j * cin, cin) = in.row(src);
    }
  }
  Mat out = col * weight.value();
  if (bias) out.rowwise() += bias->value().row(0);

  std::vector<Var> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  return x.tape->record(
      std::move(out), inputs,
      [x, weight, bias, shape, len, cin, col = std::move(col)](Tape& t, const Mat& g) {
        if (t.requires_grad(weight.id)) t.grad(weight.id).noalias() += col.transpose() * g;
        if (bias && t.requires_grad(bias->id)) t.grad(bias->id) += g.colwise().sum();
        if (!t.requires_grad(x.id)) return;
        Mat dcol = g * t.value(weight.id).transpose();
        Mat& gx = t.grad(x.id);
        for (Eigen::Index r = 0; r < dcol.rows(); ++r) {
          for (Eigen::Index j = 0; j < shape.kernel; ++j) {
            const Eigen::Index src = r * shape.stride + j * shape.dilation - shape.padding;
            if (src >= 0 && src < len) gx.row(src) += dcol.row(r).segment(j * cin, cin);
          }
        }
      });
}

Var conv_transpose1d(Var x, Var weight, std::optional<Var> bias,
                     const ConvTranspose1dShape& shape) {
  const Mat& in = x.value();
  const Eigen::Index cin = in.cols();
  const Eigen::Index k = shape.kernel;
  if (weight.rows() != cin || weight.cols() % k != 0) {
    throw std::invalid_argument("conv_transpose1d: weight must be in x (kernel * out)");
  }
  const Eigen::Index cout = weight.cols() / k;
  if (bias && (bias->rows() != 1 || bias->cols() != cout)) {
    throw std::invalid_argument("conv_transpose1d: bias must be 1 x out");
  }
  const Eigen::Index out_len = shape.output_length;
  if (out_len <= 0) throw std::invalid_argument("conv_transpose1d: empty output");

  const Mat full = in * weight.value();
  Mat out = Mat::Zero(out_len, cout);
  for (Eigen::Index t = 0; t < in.rows(); ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::Index dst = t * shape.stride + j - shape.pad_left;
      if (dst >= 0 && dst < out_len) out.row(dst) += full.row(t).segment(j * cout, cout);
    }
  }
  if (bias) out.rowwise() += bias->value().row(0);

  std::vector<Var> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  return x.tape->record(std::move(out), inputs, [x, weight, bias, shape, cout](Tape& t,
                                                                              const Mat& g) {
    if (bias && t.requires_grad(bias->id)) t.grad(bias->id) += g.colwise().sum();
    const Mat& in = t.value(x.id);
    Mat gfull = Mat::Zero(in.rows(), shape.kernel * cout);
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
      for (Eigen::Index j = 0; j < shape.kernel; ++j) {
        const Eigen::Index dst = r * shape.stride + j - shape.pad_left;
        if (dst >= 0 && dst < shape.output_length) gfull.row(r).segment(j * cout, cout) = g.row(dst);
      }
    }
    if (t.requires_grad(weight.id)) t.grad(weight.id).noalias() += in.transpose() * gfull;
    if (t.requires_grad(x.id)) t.grad(x.id).noalias() += gfull * t.value(weight.id).transpose();
  });
}

Var mean_abs_diff(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mean_abs_diff");
  const double n = static_cast<double>(a.value().size());
  Mat out(1, 1);
  const Mat diff = a.value() - b.value();
  out(0, 0) = diff.cwiseProduct(branch(diff.array().sign().matrix())).sum() / n;
  return a.tape->record(std::move(out), {a, b}, [a, b, n](Tape& t, const Mat& g) {
    const Mat sign = (t.value(a.id) - t.value(b.id)).array().sign().matrix() * (g(0, 0) / n);
    accumulate(t, a, sign);
    if (t.requires_grad(b.id)) t.grad(b.id) -= sign;
  });
}

Var dropout(Var a, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0, 1)");
  if (p == 0.0) return a;
  std::bernoulli_distribution keep(1.0 - p);
  Mat mask(a.rows(), a.cols());
  const double s = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? s : 0.0;
  return mul_const(a, mask);
}

}  // namespace artisyn::nn
