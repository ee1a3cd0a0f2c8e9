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

#include "core/vad.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "core/csv.hpp"
#include "core/dsp.hpp"
#include "core/error.hpp"

namespace advdet::vad {

namespace {

// Runs of `value` shorter than or equal to `max_len` are overwritten with
// !value. Runs touching either end are left alone when `interior_only`.
void FillShortRuns(std::vector<std::uint8_t>& flags, std::uint8_t value, std::size_t max_len, bool interior_only) {
  const std::size_t n = flags.size();
  std::size_t i = 0;
  while (i < n) {
    if (flags[i] != value) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && flags[j] == value) ++j;
    const bool interior = i > 0 && j < n;
    if (j - i <= max_len && (interior || !interior_only))
      std::fill(flags.begin() + static_cast<std::ptrdiff_t>(i), flags.begin() + static_cast<std::ptrdiff_t>(j),
                static_cast<std::uint8_t>(!value));
    i = j;
  }
}

}  // namespace

std::size_t SpeechMask::SpeechFrames() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
}

double Percentile(std::vector<double> values, double percentile) {
  if (values.empty()) Fail(ErrorCode::kEmptyInput, "percentile of an empty sequence");
  std::sort(values.begin(), values.end());
  const double pos = percentile / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

SpeechMask DetectSpeech(const AudioSignal& signal, const VadOptions& options) {
  ValidateSignal(signal);
  const std::size_t frames = dsp::FrameCount(signal.size());
  if (frames == 0)
    Fail(ErrorCode::kTooShort, "VAD needs at least 512 samples, got " + std::to_string(signal.size()));

  std::vector<double> energy(frames);
  for (std::size_t f = 0; f < frames; ++f)
    energy[f] = Rms(std::span<const double>(signal.samples.data() + f * dsp::kFrameShift, dsp::kFrameLength));

  const double floor = Percentile(energy, options.floor_percentile);
  const double threshold = options.threshold_ratio * floor;
  const double loudest = *std::max_element(energy.begin(), energy.end());

  SpeechMask mask;
  mask.flags.resize(frames);
  // With no frame clearing the relative threshold the utterance has no quiet
  // stretch to measure against, so every frame carrying energy is speech.
  const bool uniform = loudest < threshold;
  for (std::size_t f = 0; f < frames; ++f)
    mask.flags[f] = energy[f] > 0.0 && (uniform || energy[f] >= threshold) ? 1 : 0;

  FillShortRuns(mask.flags, 0, options.max_gap_frames, true);
  FillShortRuns(mask.flags, 1, options.max_island_frames, false);
  for (std::size_t f = 0; f < frames; ++f)
    if (energy[f] == 0.0) mask.flags[f] = 0;
  return mask;
}

std::pair<std::size_t, std::size_t> FrameOwnership(const SpeechMask& mask, std::size_t frame) {
  const std::size_t begin = frame * dsp::kFrameShift;
  const std::size_t end = begin + (frame + 1 == mask.size() ? dsp::kFrameLength : dsp::kFrameShift);
  return {begin, end};
}

std::pair<AudioSignal, AudioSignal> SplitSpeechNonspeech(const AudioSignal& signal, const SpeechMask& mask) {
  if (mask.size() != dsp::FrameCount(signal.size()))
    Fail(ErrorCode::kGeometryMismatch, "mask has " + std::to_string(mask.size()) + " frames, signal has " +
                                           std::to_string(dsp::FrameCount(signal.size())));
  AudioSignal speech, nonspeech;
  speech.sample_rate = nonspeech.sample_rate = signal.sample_rate;
  for (std::size_t f = 0; f < mask.size(); ++f) {
    const auto [begin, end] = FrameOwnership(mask, f);
    auto& dst = mask.IsSpeech(f) ? speech.samples : nonspeech.samples;
    dst.insert(dst.end(), signal.samples.begin() + static_cast<std::ptrdiff_t>(begin),
               signal.samples.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return {std::move(speech), std::move(nonspeech)};
}

SpeechMask ParseMask(std::string_view text, const std::string& origin) {
  SpeechMask mask;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = csv::SplitLine(line);
    if (line_no == 1 && fields.size() == 2 && fields[0] == "frame_index") continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (fields.size() != 2) Fail(ErrorCode::kParse, where + ": expected 'frame_index,flag'");
    std::size_t index = 0;
    auto r = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), index);
    if (r.ec != std::errc() || r.ptr != fields[0].data() + fields[0].size())
      Fail(ErrorCode::kParse, where + ": bad frame index '" + fields[0] + "'");
    if (index != mask.flags.size())
      Fail(ErrorCode::kParse, where + ": frame index " + fields[0] + " out of sequence");
    if (fields[1] != "0" && fields[1] != "1") Fail(ErrorCode::kParse, where + ": flag must be 0 or 1");
    mask.flags.push_back(fields[1] == "1" ? 1 : 0);
  }
  if (mask.flags.empty()) Fail(ErrorCode::kParse, origin + ": empty mask");
  return mask;
}

SpeechMask LoadMask(const std::filesystem::path& path) { return ParseMask(csv::ReadFile(path), path.string()); }

std::string RenderMask(const SpeechMask& mask) {
  std::string s;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    s += std::to_string(i);
    s += mask.IsSpeech(i) ? ",1\n" : ",0\n";
  }
  return s;
}

void SaveMask(const SpeechMask& mask, const std::filesystem::path& path) {
  csv::WriteFileAtomic(path, RenderMask(mask));
}

}  // namespace advdet::vad
