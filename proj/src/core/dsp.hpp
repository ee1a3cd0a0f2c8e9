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

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace advdet::dsp {

inline constexpr std::size_t kFrameLength = 512;  // 32 ms
inline constexpr std::size_t kFrameShift = 256;   // 16 ms
inline constexpr std::size_t kFftSize = kFrameLength;
inline constexpr std::size_t kNumBins = kFftSize / 2 + 1;
inline constexpr std::size_t kFramesPerBlock = 31;

// Number of whole frames that fit in `num_samples`; zero when shorter than a frame.
constexpr std::size_t FrameCount(std::size_t num_samples) {
  return num_samples < kFrameLength ? 0 : (num_samples - kFrameLength) / kFrameShift + 1;
}

static_assert(FrameCount(8192) == kFramesPerBlock);

// Symmetric Hamming window, 0.54 - 0.46 cos(2 pi n / (N - 1)).
const std::array<double, kFrameLength>& HammingWindow();

// Row-major frames x samples.
struct FrameSet {
  std::size_t num_frames = 0;
  std::vector<double> data;

  std::span<const double> Frame(std::size_t i) const {
    return {data.data() + i * kFrameLength, kFrameLength};
  }
};

// Row-major frames x kNumBins.
struct PowerSpectrumSet {
  std::size_t num_frames = 0;
  std::vector<double> data;

  std::span<const double> Spectrum(std::size_t i) const {
    return {data.data() + i * kNumBins, kNumBins};
  }
};

// Windowed frames of one 8192-sample block.
FrameSet FrameBlock(std::span<const double> block);

// |DFT_512(frame)(k)|^2 / 512 for k = 0..256. No zero padding.
std::vector<double> PowerSpectrum(std::span<const double> frame);
void PowerSpectrum(std::span<const double> frame, std::span<double> out);

PowerSpectrumSet PowerSpectra(const FrameSet& frames);

// Orthonormal DCT-II, first `num_coeffs` coefficients.
std::vector<double> Dct2(std::span<const double> values, std::size_t num_coeffs);

// num_coeffs x size basis, row-major; Dct2(x) == matrix * x.
std::vector<double> Dct2Matrix(std::size_t size, std::size_t num_coeffs);

}  // namespace advdet::dsp
