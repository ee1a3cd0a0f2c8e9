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

#include "core/noise.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace advdet::noise {

std::string_view ToString(NoisePart part) {
  switch (part) {
    case NoisePart::kTrain: return "train";
    case NoisePart::kValidation: return "validation";
    case NoisePart::kTest: return "test";
  }
  return "?";
}

std::span<const double> NoiseSource::Part(NoisePart part) const {
  const auto [begin, end] = segments[static_cast<std::size_t>(part)];
  return {signal.samples.data() + begin, end - begin};
}

NoiseSource SplitNoise(std::string name, AudioSignal noise, std::array<double, 3> ratios) {
  const std::size_t n = noise.size();
  if (n < 3 * kBlockSamples)
    Fail(ErrorCode::kTooShort, "noise '" + name + "' needs at least 24576 samples, got " + std::to_string(n));
  const auto portion = [n](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
  };
  const std::size_t train = portion(ratios[0]);
  const std::size_t val = portion(ratios[1]);
  if (train + val >= n) Fail(ErrorCode::kInvalidArgument, "split ratios leave no test segment");
  NoiseSource src;
  src.name = std::move(name);
  src.signal = std::move(noise);
  src.segments = {{{0, train}, {train, train + val}, {train + val, n}}};
  for (const auto& [b, e] : src.segments)
    if (b == e) Fail(ErrorCode::kInvalidArgument, "empty noise segment for '" + src.name + "'");
  return src;
}

NoiseSlice NoiseSegmentAt(const NoiseSource& src, NoisePart part, std::size_t offset, std::size_t length) {
  const auto seg = src.Part(part);
  if (seg.empty()) Fail(ErrorCode::kInvalidArgument, "empty noise segment");
  NoiseSlice slice;
  slice.offset = offset % seg.size();
  slice.samples.resize(length);
  std::size_t pos = slice.offset;
  for (std::size_t i = 0; i < length; ++i) {
    slice.samples[i] = seg[pos];
    if (++pos == seg.size()) pos = 0;
  }
  return slice;
}

NoiseSlice SampleNoiseSegment(const NoiseSource& src, NoisePart part, std::size_t length, Rng& rng) {
  const auto seg = src.Part(part);
  if (seg.empty()) Fail(ErrorCode::kInvalidArgument, "empty noise segment");
  return NoiseSegmentAt(src, part, static_cast<std::size_t>(rng.Below(seg.size())), length);
}

void MixSpec::Validate() const {
  if (std::find(kSnrLevelsDb.begin(), kSnrLevelsDb.end(), snr_db) == kSnrLevelsDb.end())
    Fail(ErrorCode::kInvalidArgument, "SNR must be one of 0, 5, 10, 15, 20 dB; got " + std::to_string(snr_db));
}

std::vector<double> SpeechPart(const AudioSignal& signal, const vad::SpeechMask& mask) {
  return vad::SplitSpeechNonspeech(signal, mask).first.samples;
}

MixResult MixAtSnr(const AudioSignal& signal, const vad::SpeechMask& mask, std::span<const double> noise,
                   double snr_db) {
  if (noise.size() != signal.size())
    Fail(ErrorCode::kLengthMismatch, "noise has " + std::to_string(noise.size()) + " samples, signal has " +
                                         std::to_string(signal.size()));
  const auto speech = SpeechPart(signal, mask);
  if (speech.empty()) Fail(ErrorCode::kNoSpeech, "speech mask selects no frames");
  const double speech_rms = Rms(speech);
  if (speech_rms == 0.0) Fail(ErrorCode::kSilentSpeech, "speech part is digital silence");
  const double noise_rms = Rms(noise);
  if (noise_rms == 0.0) Fail(ErrorCode::kInvalidArgument, "noise slice is digital silence");

  MixResult r;
  r.alpha = speech_rms / noise_rms * std::pow(10.0, -snr_db / 20.0);
  r.mixed.sample_rate = signal.sample_rate;
  r.mixed.samples.resize(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) r.mixed.samples[i] = signal.samples[i] + r.alpha * noise[i];
  return r;
}

double MeasureSpeechSnrDb(const AudioSignal& clean, const vad::SpeechMask& mask, const AudioSignal& mixed) {
  if (clean.size() != mixed.size()) Fail(ErrorCode::kLengthMismatch, "clean and mixed lengths differ");
  std::vector<double> added(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) added[i] = mixed.samples[i] - clean.samples[i];
  return 20.0 * std::log10(Rms(SpeechPart(clean, mask)) / Rms(added));
}

double ExportScale(const AudioSignal& signal) {
  double peak = 0.0;
  for (double x : signal.samples) peak = std::max(peak, std::abs(x));
  return peak > 1.0 ? 1.0 / peak : 1.0;
}

}  // namespace advdet::noise
