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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "core/audio.hpp"
#include "core/rng.hpp"
#include "core/vad.hpp"

namespace advdet::noise {

// The six environmental noise types, in table row order.
inline constexpr std::array<std::string_view, 6> kNoiseTypes = {"bbl", "ssn", "kitchen", "cafeteria", "square", "bus"};
inline constexpr std::array<int, 5> kSnrLevelsDb = {0, 5, 10, 15, 20};

enum class NoisePart { kTrain = 0, kValidation = 1, kTest = 2 };

std::string_view ToString(NoisePart part);

struct NoiseSource {
  std::string name;
  AudioSignal signal;
  // [begin, end) sample ranges for train, validation and test, in file order.
  std::array<std::pair<std::size_t, std::size_t>, 3> segments{};

  std::span<const double> Part(NoisePart part) const;
};

// Contiguous train/validation/test ranges; lengths floor(r * N), remainder to test.
NoiseSource SplitNoise(std::string name, AudioSignal noise, std::array<double, 3> ratios = {0.7, 0.1, 0.2});

struct NoiseSlice {
  std::vector<double> samples;
  std::size_t offset = 0;  // relative to the start of the split part
};

// `length` consecutive samples of one part starting at `offset`, wrapping
// around inside the part.
NoiseSlice NoiseSegmentAt(const NoiseSource& src, NoisePart part, std::size_t offset, std::size_t length);

// Same with a uniformly drawn start offset.
NoiseSlice SampleNoiseSegment(const NoiseSource& src, NoisePart part, std::size_t length, Rng& rng);

struct MixSpec {
  int snr_db = 0;
  std::string noise_name;
  std::uint64_t rng_seed = 0;

  // Throws InvalidArgument unless snr_db is one of 0/5/10/15/20.
  void Validate() const;
};

struct MixResult {
  AudioSignal mixed;
  double alpha = 0.0;  // scale applied to the noise slice
};

// Speech-part samples of `signal` under `mask` (frame ownership as in vad).
std::vector<double> SpeechPart(const AudioSignal& signal, const vad::SpeechMask& mask);

// signal + alpha * noise with alpha = rms(speech part) / rms(noise) * 10^(-snr/20).
MixResult MixAtSnr(const AudioSignal& signal, const vad::SpeechMask& mask, std::span<const double> noise,
                   double snr_db);

// 20 log10(rms(speech part of clean) / rms(mixed - clean)).
double MeasureSpeechSnrDb(const AudioSignal& clean, const vad::SpeechMask& mask, const AudioSignal& mixed);

// Scale applied on export so the peak fits PCM16 (1.0 when it already does).
double ExportScale(const AudioSignal& signal);

}  // namespace advdet::noise
