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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace advdet {

inline constexpr std::uint32_t kSampleRate = 16000;
// 512 ms at 16 kHz; blocks are cut back to back with no overlap.
inline constexpr std::size_t kBlockSamples = 8192;

struct AudioSignal {
  std::vector<double> samples;
  std::uint32_t sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
};

enum class Label : int { kBenign = 0, kAdversarial = 1 };

std::string_view ToString(Label label);
Label ParseLabel(std::string_view text);

// Condition tags carried by every block. `region` is full/speech/nonspeech,
// `noise` is "clean" for unmixed audio and `snr` is "none" unless mixed.
struct Condition {
  std::string attack = "white";
  std::string region = "full";
  std::string noise = "clean";
  std::string snr = "none";

  // attack_region_noise_snr; used for cache file names.
  std::string Key() const;
  bool operator==(const Condition&) const = default;
};

struct Block {
  std::vector<double> samples;  // always kBlockSamples long
  Label label = Label::kBenign;
  std::string source_id;
  std::size_t block_index = 0;
  Condition condition;

  std::size_t SampleOffset() const { return block_index * kBlockSamples; }
};

// PCM16 mono 16 kHz only. Samples are scaled by 1/32768.
AudioSignal ReadWav(const std::filesystem::path& path);
AudioSignal DecodeWav(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

// Amplitudes are clamped to [-1, 1] and rounded to the nearest PCM16 code.
void WriteWav(const AudioSignal& signal, const std::filesystem::path& path);
std::vector<std::uint8_t> EncodeWav(const AudioSignal& signal);

// Throws UnsupportedRate / InvalidArgument for non-16 kHz or non-finite input.
void ValidateSignal(const AudioSignal& signal);

// floor(N / 8192) consecutive blocks; a trailing partial block is dropped.
std::vector<Block> ChopBlocks(const AudioSignal& signal, Label label, std::string_view source_id,
                              const Condition& condition);

double Rms(std::span<const double> samples);

}  // namespace advdet
