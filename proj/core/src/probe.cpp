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

#include <nlohmann/json.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace artisyn {

Mat LinearMap::apply(const Mat& x) const {
  Mat y = x * weight.transpose();
  y.rowwise() += bias.row(0);
  return y;
}

LinearMap fit_linear(const Mat& x, const Mat& y, double ridge) {
  if (x.rows() != y.rows()) throw std::invalid_argument("fit_linear: frame counts differ");
  if (x.rows() < 2 || x.cols() < 1 || y.cols() < 1) throw std::invalid_argument("fit_linear: need at least 2 frames");
  if (!(ridge >= 0.0)) throw std::invalid_argument("fit_linear: ridge must be non-negative");
  const Eigen::RowVectorXd mx = x.colwise().mean();
  const Eigen::RowVectorXd my = y.colwise().mean();
  const Mat xc = x.rowwise() - mx;
  const Mat yc = y.rowwise() - my;
  Mat gram = xc.transpose() * xc;
  if (ridge == 0.0) {
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Mat>(gram, Eigen::EigenvaluesOnly).eigenvalues();
    const double top = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    if (ev.minCoeff() <= 1e-12 * top) throw std::invalid_argument("fit_linear: singular system (use ridge > 0)");
  }
  gram.diagonal().array() += ridge;
  const Mat w = gram.ldlt().solve(xc.transpose() * yc);  // in x out
  LinearMap map;
  map.weight = w.transpose();
  map.bias = my - mx * w;
  map.ridge = ridge;
  if (!map.weight.allFinite() || !map.bias.allFinite()) throw std::invalid_argument("fit_linear: non-finite solution");
  return map;
}

PearsonResult pearson(const Mat& pred, const Mat& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) throw std::invalid_argument("pearson: shape mismatch");
  if (pred.rows() < 2) throw std::invalid_argument("pearson: need at least 2 frames");
  PearsonResult r;
  double sum = 0.0;
  for (Eigen::Index c = 0; c < pred.cols(); ++c) {
    const Eigen::VectorXd a = pred.col(c).array() - pred.col(c).mean();
    const Eigen::VectorXd b = truth.col(c).array() - truth.col(c).mean();
    const double saa = a.squaredNorm();
    const double sbb = b.squaredNorm();
    if (saa == 0.0 || sbb == 0.0) {
      r.per_channel.push_back(std::nullopt);
      ++r.degenerate;
      continue;
    }
    const double rho = std::clamp(a.dot(b) / std::sqrt(saa * sbb), -1.0, 1.0);
    r.per_channel.push_back(rho);
    sum += rho;
  }
  const auto valid = static_cast<std::size_t>(pred.cols()) - r.degenerate;
  if (valid == 0) throw std::invalid_argument("pearson: every channel has zero variance");
  r.mean = sum / static_cast<double>(valid);
  return r;
}

const ProbeEntry& ProbeReport::at(std::string_view input, std::string_view output) const {
  for (const auto& e : entries) {
    if (e.input == input && e.output == output) return e;
  }
  throw std::out_of_range("probe report has no pair " + std::string(input) + " -> " + std::string(output));
}

std::vector<std::string> representation_names(const Dataset& dataset) {
  std::vector<std::string> names = dataset.modality_names();
  names.push_back("target");
  return names;
}

namespace {

std::optional<Mat> representation(const AlignedSample& s, const std::string& name, double common_rate) {
  if (name == "target") return resample_linear(s.target, common_rate).to_mat();
  const auto it = s.modalities.find(name);
  if (it == s.modalities.end()) throw std::invalid_argument("probe: unknown representation '" + name + "'");
  if (!it->second) return std::nullopt;
  return it->second->to_mat();
}

}  // namespace

ProbeReport correlation_table(const Dataset& dataset, std::span<const std::pair<std::string, std::string>> pairs,
                              const ProbeConfig& config) {
  if (config.train_frames < 2 || config.test_frames < 2) throw std::invalid_argument("probe: need at least 2 train and test frames");
  ProbeReport report;
  report.config = config;
  const double rate = dataset.manifest.common_rate;
  for (const auto& [in, out] : pairs) {
    std::vector<Mat> xs, ys;
    Eigen::Index total = 0;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
      if (dataset.splits[i] != config.split) continue;
      const auto x = representation(dataset.samples[i], in, rate);
      const auto y = representation(dataset.samples[i], out, rate);
      if (!x || !y) continue;
      const Eigen::Index n = std::min(x->rows(), y->rows());
      xs.push_back(x->topRows(n));
      ys.push_back(y->topRows(n));
      total += n;
    }
    const std::size_t need = config.train_frames + config.test_frames;
    if (static_cast<std::size_t>(total) < need) {
      throw std::invalid_argument("probe: " + in + " -> " + out + " has " + std::to_string(total) +
                                  " frames, needs " + std::to_string(need));
    }
    Mat x(total, xs.front().cols()), y(total, ys.front().cols());
    Eigen::Index row = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      x.middleRows(row, xs[k].rows()) = xs[k];
      y.middleRows(row, ys[k].rows()) = ys[k];
      row += xs[k].rows();
    }
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(config.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto gather = [&](const Mat& m, std::size_t from, std::size_t count) {
      Mat g(static_cast<Eigen::Index>(count), m.cols());
      for (std::size_t k = 0; k < count; ++k) g.row(static_cast<Eigen::Index>(k)) = m.row(idx[from + k]);
      return g;
    };
    const LinearMap map = fit_linear(gather(x, 0, config.train_frames), gather(y, 0, config.train_frames), config.ridge);
    const Mat pred = map.apply(gather(x, config.train_frames, config.test_frames));
    ProbeEntry e;
    e.input = in;
    e.output = out;
    e.correlation = pearson(pred, gather(y, config.train_frames, config.test_frames));
    e.train_frames = config.train_frames;
    e.test_frames = config.test_frames;
    e.same_representation = in == out;
    report.entries.push_back(std::move(e));
  }
  return report;
}

std::string ProbeReport::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "artisyn-probe/1";
  j["train_frames"] = config.train_frames;
  j["test_frames"] = config.test_frames;
  j["ridge"] = config.ridge;
  j["seed"] = config.seed;
  j["split"] = std::string(to_string(config.split));
  j["aggregation"] = "mean over channels";
  j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (const auto& c : e.correlation.per_channel) per.push_back(c ? nlohmann::ordered_json(*c) : nlohmann::ordered_json(nullptr));
    j["pairs"].push_back({{"input", e.input},
                          {"output", e.output},
                          {"mean", e.correlation.mean},
                          {"per_channel", per},
                          {"degenerate_channels", e.correlation.degenerate},
                          {"train_frames", e.train_frames},
                          {"test_frames", e.test_frames},
                          {"same_representation", e.same_representation}});
  }
  return j.dump(2);
}

std::string ProbeReport::to_table() const {
  std::vector<std::string> ins, outs;
  for (const auto& e : entries) {
    if (std::find(ins.begin(), ins.end(), e.input) == ins.end()) ins.push_back(e.input);
    if (std::find(outs.begin(), outs.end(), e.output) == outs.end()) outs.push_back(e.output);
  }
  const std::string corner = "input\\output";
  std::size_t w = corner.size() + 2;
  for (const auto& s : ins) w = std::max(w, s.size() + 2);
  for (const auto& s : outs) w = std::max(w, s.size() + 2);
  const auto pad = [w](const std::string& s) { return s + std::string(w - std::min(w, s.size()), ' '); };
  std::ostringstream out;
  out << pad(corner);
  for (const auto& o : outs) out << pad(o);
  out << '\n';
  for (const auto& i : ins) {
    out << pad(i);
    for (const auto& o : outs) {
      std::string cell;
      for (const auto& e : entries) {
        if (e.input != i || e.output != o) continue;
        if (e.same_representation) {
          cell = "-";
        } else {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.3f", e.correlation.mean);
          cell = buf;
        }
      }
      out << pad(cell);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace artisyn
