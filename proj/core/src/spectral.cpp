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

#include "artisyn/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace artisyn {

namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
class RealFft {
 public:
  static const RealFft& get(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<RealFft>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) slot.reset(new RealFft(n));
    return *slot;
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }

  void forward(double* in, std::complex<double>* out) const {
    fftw_execute_dft_r2c(forward_, in, reinterpret_cast<fftw_complex*>(out));
  }
  // Unnormalized Hermitian inverse; clobbers `in`.
  void inverse(std::complex<double>* in, double* out) const {
    fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(in), out);
  }

 private:
  explicit RealFft(int n) {
    std::vector<double> r(static_cast<std::size_t>(n));
    std::vector<std::complex<double>> c(static_cast<std::size_t>(n / 2 + 1));
    auto* cp = reinterpret_cast<fftw_complex*>(c.data());
    forward_ = fftw_plan_dft_r2c_1d(n, r.data(), cp, FFTW_ESTIMATE | FFTW_UNALIGNED);
    inverse_ = fftw_plan_dft_c2r_1d(n, cp, r.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

void check_frame_args(std::size_t window, int hop) {
  if (window < 2 || window % 2 != 0) throw std::invalid_argument("stft: frame length must be even and >= 2");
  if (hop <= 0) throw std::invalid_argument("stft: hop must be positive");
}

}  // namespace

void SpectralConfig::validate() const {
  if (frame_length < 2 || frame_length % 2 != 0) throw ConfigError("spectral: frame length must be even");
  if (hop <= 0 || hop > frame_length) throw ConfigError("spectral: need 0 < hop <= frame length");
  if (mel_bands <= 0) throw ConfigError("spectral: mel bands must be positive");
  if (!(sample_rate > 0.0) || fmin < 0.0 || !(fmax > fmin) || fmax > sample_rate / 2.0) {
    throw ConfigError("spectral: need 0 <= fmin < fmax <= sample_rate / 2");
  }
  if (!(log_floor > 0.0)) throw ConfigError("spectral: log floor must be positive");
}

std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) {
    w[static_cast<std::size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  }
  return w;
}

Mat mel_filterbank(const SpectralConfig& cfg) {
  cfg.validate();
  const int bins = cfg.frame_length / 2 + 1;
  const double lo = hz_to_mel(cfg.fmin);
  const double hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(static_cast<std::size_t>(cfg.mel_bands + 2));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cfg.mel_bands + 1));
  }
  Mat fb = Mat::Zero(bins, cfg.mel_bands);
  for (int k = 0; k < bins; ++k) {
    const double f = cfg.sample_rate * k / cfg.frame_length;
    for (int m = 0; m < cfg.mel_bands; ++m) {
      const double left = edges[static_cast<std::size_t>(m)];
      const double center = edges[static_cast<std::size_t>(m + 1)];
      const double right = edges[static_cast<std::size_t>(m + 2)];
      const double up = (f - left) / (center - left);
      const double down = (right - f) / (right - center);
      fb(k, m) = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

Eigen::Index frame_count(Eigen::Index samples, int frame_length, int hop) {
  if (samples < frame_length) return 0;
  return (samples - frame_length) / hop + 1;
}

namespace {

// Complex spectra of all frames, frames x bins, row-major.
std::vector<std::complex<double>> frame_spectra(std::span<const double> signal, std::span<const double> window,
                                                int hop, Eigen::Index frames) {
  const int n = static_cast<int>(window.size());
  const std::size_t bins = static_cast<std::size_t>(n / 2 + 1);
  const RealFft& fft = RealFft::get(n);
  std::vector<std::complex<double>> spectra(static_cast<std::size_t>(frames) * bins);
  std::vector<double> buf(static_cast<std::size_t>(n));
  for (Eigen::Index f = 0; f < frames; ++f) {
    const std::size_t off = static_cast<std::size_t>(f) * static_cast<std::size_t>(hop);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = signal[off + i] * window[i];
    fft.forward(buf.data(), spectra.data() + static_cast<std::size_t>(f) * bins);
  }
  return spectra;
}

}  // namespace

Mat stft_magnitude(std::span<const double> signal, std::span<const double> window, int hop) {
  check_frame_args(window.size(), hop);
  const int n = static_cast<int>(window.size());
  const Eigen::Index frames = frame_count(static_cast<Eigen::Index>(signal.size()), n, hop);
  if (frames == 0) throw std::invalid_argument("stft: signal shorter than one frame");
  const auto spectra = frame_spectra(signal, window, hop, frames);
  const Eigen::Index bins = n / 2 + 1;
  Mat mag(frames, bins);
  for (Eigen::Index i = 0; i < mag.size(); ++i) mag.data()[i] = std::abs(spectra[static_cast<std::size_t>(i)]);
  return mag;
}

Mat log_mel_spectrogram(std::span<const double> signal, const SpectralConfig& cfg) {
  const std::vector<double> window = hann_window(cfg.frame_length);
  const Mat mel = stft_magnitude(signal, window, cfg.hop) * mel_filterbank(cfg);
  return mel.cwiseMax(cfg.log_floor).array().log().matrix();
}

namespace nn {

Var stft_magnitude(Var signal, std::span<const double> window, int hop, double eps) {
  check_frame_args(window.size(), hop);
  if (signal.cols() != 1) throw std::invalid_argument("stft: signal must be L x 1");
  const int n = static_cast<int>(window.size());
  const Mat& x = signal.value();
  const Eigen::Index frames = frame_count(x.rows(), n, hop);
  if (frames == 0) throw std::invalid_argument("stft: signal shorter than one frame");
  auto spectra = frame_spectra(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), window,
                               hop, frames);
  const Eigen::Index bins = n / 2 + 1;
  Mat mag(frames, bins);
  for (Eigen::Index i = 0; i < mag.size(); ++i) {
    mag.data()[i] = std::sqrt(std::norm(spectra[static_cast<std::size_t>(i)]) + eps);
  }
  std::vector<double> win(window.begin(), window.end());
  const int self = static_cast<int>(signal.tape->size());
  return signal.tape->record(
      std::move(mag), {signal},
      [signal, self, hop, n, frames, bins, win = std::move(win), spectra = std::move(spectra)](Tape& t,
                                                                                              const Mat& g) {
        if (!t.requires_grad(signal.id)) return;
        const Mat& mag = t.value(self);
        Mat& gx = t.grad(signal.id);
        const RealFft& fft = RealFft::get(n);
        std::vector<std::complex<double>> spec(static_cast<std::size_t>(bins));
        std::vector<double> time(static_cast<std::size_t>(n));
        for (Eigen::Index f = 0; f < frames; ++f) {
          // d|X_k|/dx_j = Re(X_k e^{+i 2 pi k j / n}) / |X_k|, summed over the half spectrum.
          for (Eigen::Index k = 0; k < bins; ++k) {
            const std::complex<double> c =
                g(f, k) * spectra[static_cast<std::size_t>(f * bins + k)] / mag(f, k);
            const bool edge = (k == 0 || k == bins - 1);
            spec[static_cast<std::size_t>(k)] = edge ? std::complex<double>(c.real(), 0.0) : 0.5 * c;
          }
          fft.inverse(spec.data(), time.data());
          const Eigen::Index off = f * hop;
          for (int j = 0; j < n; ++j) gx(off + j, 0) += time[static_cast<std::size_t>(j)] * win[static_cast<std::size_t>(j)];
        }
      });
}

}  // namespace nn

nn::Var log_mel_spectrogram(nn::Var signal, const SpectralConfig& cfg, double eps) {
  const std::vector<double> window = hann_window(cfg.frame_length);
  const nn::Var mag = nn::stft_magnitude(signal, window, cfg.hop, eps);
  const nn::Var mel = nn::matmul(mag, signal.tape->constant(mel_filterbank(cfg)));
  return nn::log_floor(mel, cfg.log_floor);
}

}  // namespace artisyn
