// Copyright 2026 The advdet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/dsp.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>

#include "core/error.hpp"

namespace advdet::dsp {

namespace {

// One real-to-complex plan of size 512, created once. Execution through the
// new-array interface is thread-safe; planning is not, hence the static.
class RealFft {
 public:
  RealFft() {
    auto* in = fftw_alloc_real(kFftSize);
    auto* out = fftw_alloc_complex(kNumBins);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(kFftSize), in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (plan_ == nullptr) Fail(ErrorCode::kInternal, "FFTW planning failed");
  }
  ~RealFft() { fftw_destroy_plan(plan_); }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  void Execute(std::span<const double> frame, std::span<double> power) const {
    double* in = fftw_alloc_real(kFftSize);
    fftw_complex* out = fftw_alloc_complex(kNumBins);
    for (std::size_t i = 0; i < kFftSize; ++i) in[i] = frame[i];
    fftw_execute_dft_r2c(plan_, in, out);
    for (std::size_t k = 0; k < kNumBins; ++k) {
      const double re = out[k][0];
      const double im = out[k][1];
      power[k] = (re * re + im * im) / static_cast<double>(kFftSize);
    }
    fftw_free(in);
    fftw_free(out);
  }

 private:
  fftw_plan plan_ = nullptr;
};

const RealFft& Fft() {
  static const RealFft fft;
  return fft;
}

}  // namespace

const std::array<double, kFrameLength>& HammingWindow() {
  static const auto window = [] {
    std::array<double, kFrameLength> w{};
    for (std::size_t n = 0; n < kFrameLength; ++n)
      w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                    static_cast<double>(kFrameLength - 1));
    return w;
  }();
  return window;
}

FrameSet FrameBlock(std::span<const double> block) {
  if (block.size() != 8192)
    Fail(ErrorCode::kShapeMismatch, "block must have 8192 samples, got " + std::to_string(block.size()));
  const auto& window = HammingWindow();
  FrameSet fs;
  fs.num_frames = kFramesPerBlock;
  fs.data.resize(kFramesPerBlock * kFrameLength);
  for (std::size_t f = 0; f < kFramesPerBlock; ++f) {
    const double* src = block.data() + f * kFrameShift;
    double* dst = fs.data.data() + f * kFrameLength;
    for (std::size_t n = 0; n < kFrameLength; ++n) dst[n] = src[n] * window[n];
  }
  return fs;
}

void PowerSpectrum(std::span<const double> frame, std::span<double> out) {
  if (frame.size() != kFrameLength)
    Fail(ErrorCode::kShapeMismatch, "frame must have 512 samples, got " + std::to_string(frame.size()));
  if (out.size() != kNumBins) Fail(ErrorCode::kShapeMismatch, "power spectrum needs 257 bins");
  Fft().Execute(frame, out);
}

std::vector<double> PowerSpectrum(std::span<const double> frame) {
  std::vector<double> out(kNumBins);
  PowerSpectrum(frame, out);
  return out;
}

PowerSpectrumSet PowerSpectra(const FrameSet& frames) {
  PowerSpectrumSet ps;
  ps.num_frames = frames.num_frames;
  ps.data.resize(frames.num_frames * kNumBins);
  for (std::size_t f = 0; f < frames.num_frames; ++f)
    PowerSpectrum(frames.Frame(f), std::span<double>(ps.data.data() + f * kNumBins, kNumBins));
  return ps;
}

std::vector<double> Dct2Matrix(std::size_t size, std::size_t num_coeffs) {
  if (size == 0 || num_coeffs < 1 || num_coeffs > size)
    Fail(ErrorCode::kBadCoeffCount, "need 1 <= num_coeffs <= " + std::to_string(size) + ", got " +
                                        std::to_string(num_coeffs));
  std::vector<double> m(num_coeffs * size);
  const double n = static_cast<double>(size);
  for (std::size_t j = 0; j < num_coeffs; ++j) {
    const double scale = j == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < size; ++i)
      m[j * size + i] =
          scale * std::cos(std::numbers::pi * static_cast<double>(j) * (static_cast<double>(i) + 0.5) / n);
  }
  return m;
}

std::vector<double> Dct2(std::span<const double> values, std::size_t num_coeffs) {
  const auto basis = Dct2Matrix(values.size(), num_coeffs);
  std::vector<double> out(num_coeffs, 0.0);
  for (std::size_t j = 0; j < num_coeffs; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += basis[j * values.size() + i] * values[i];
    out[j] = acc;
  }
  return out;
}

}  // namespace advdet::dsp
