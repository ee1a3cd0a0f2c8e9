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

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

#include "core/audio.hpp"

namespace advdet::vad {

struct VadOptions {
  double threshold_ratio = 3.0;    // speech iff frame RMS >= ratio * noise floor
  double floor_percentile = 10.0;  // noise floor = this percentile of frame RMS
  std::size_t max_gap_frames = 3;     // non-speech gaps this short are closed
  std::size_t max_island_frames = 2;  // speech runs this short are dropped
};

// One flag per 512-sample frame at a 256-sample shift over the utterance.
struct SpeechMask {
  std::vector<std::uint8_t> flags;

  std::size_t size() const { return flags.size(); }
  bool IsSpeech(std::size_t frame) const { return flags[frame] != 0; }
  std::size_t SpeechFrames() const;
  bool operator==(const SpeechMask&) const = default;
};

// Energy VAD with a percentile noise floor and run-length smoothing.
SpeechMask DetectSpeech(const AudioSignal& signal, const VadOptions& options = {});

// Linear-interpolated percentile (0..100) of `values`; values must be nonempty.
double Percentile(std::vector<double> values, double percentile);

// Frame i owns samples [256 i, 256 i + 256); the last frame also owns the
// following 256 samples. Samples past that are not assigned to either part.
std::pair<AudioSignal, AudioSignal> SplitSpeechNonspeech(const AudioSignal& signal, const SpeechMask& mask);

// Sample ranges [begin, end) owned by frame i.
std::pair<std::size_t, std::size_t> FrameOwnership(const SpeechMask& mask, std::size_t frame);

// CSV "frame_index,flag" lines, optional header, indices 0..n-1 in order.
SpeechMask ParseMask(std::string_view text, const std::string& origin = "<memory>");
SpeechMask LoadMask(const std::filesystem::path& path);
void SaveMask(const SpeechMask& mask, const std::filesystem::path& path);
std::string RenderMask(const SpeechMask& mask);

}  // namespace advdet::vad
