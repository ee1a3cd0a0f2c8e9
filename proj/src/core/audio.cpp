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

#include "core/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "core/csv.hpp"
#include "core/error.hpp"

namespace advdet {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t Le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t Le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void Put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void Put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void PutTag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

std::string_view ToString(Label label) {
  return label == Label::kAdversarial ? "adversarial" : "benign";
}

Label ParseLabel(std::string_view text) {
  if (text == "benign" || text == "0") return Label::kBenign;
  if (text == "adversarial" || text == "1") return Label::kAdversarial;
  Fail(ErrorCode::kParse, "unknown label '" + std::string(text) + "'");
}

std::string Condition::Key() const { return attack + "_" + region + "_" + noise + "_" + snr; }

AudioSignal DecodeWav(std::span<const std::uint8_t> bytes, const std::string& origin) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    Fail(ErrorCode::kNotWav, origin + ": missing RIFF/WAVE header");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    const std::uint32_t size = Le32(hdr + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) Fail(ErrorCode::kNotWav, origin + ": truncated fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      format = Le16(f);
      channels = Le16(f + 2);
      rate = Le32(f + 4);
      bits = Le16(f + 14);
      if (format == kFormatExtensible && size >= 26) format = Le16(f + 24);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) Fail(ErrorCode::kNotWav, origin + ": data chunk before fmt chunk");
      if (format != kFormatPcm || bits != 16)
        Fail(ErrorCode::kUnsupportedEncoding,
             origin + ": only PCM 16-bit is supported (format " + std::to_string(format) + ", " +
                 std::to_string(bits) + " bits)");
      if (channels != 1)
        Fail(ErrorCode::kUnsupportedChannels, origin + ": expected mono, got " + std::to_string(channels) + " channels");
      if (rate != kSampleRate)
        Fail(ErrorCode::kUnsupportedRate, origin + ": expected 16000 Hz, got " + std::to_string(rate));
      if (body + size > bytes.size() || size % 2 != 0)
        Fail(ErrorCode::kNotWav, origin + ": truncated data chunk");
      AudioSignal sig;
      sig.sample_rate = rate;
      sig.samples.resize(size / 2);
      const std::uint8_t* d = bytes.data() + body;
      for (std::size_t i = 0; i < sig.samples.size(); ++i) {
        const auto code = static_cast<std::int16_t>(Le16(d + 2 * i));
        sig.samples[i] = static_cast<double>(code) / 32768.0;
      }
      return sig;
    }
    pos = body + size + (size & 1);
  }
  Fail(ErrorCode::kNotWav, origin + ": no data chunk");
}

AudioSignal ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return DecodeWav(bytes, path.string());
}

std::vector<std::uint8_t> EncodeWav(const AudioSignal& signal) {
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(signal.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  PutTag(out, "RIFF");
  Put32(out, 36 + data_bytes);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  Put32(out, 16);
  Put16(out, kFormatPcm);
  Put16(out, 1);
  Put32(out, signal.sample_rate);
  Put32(out, signal.sample_rate * 2);
  Put16(out, 2);
  Put16(out, 16);
  PutTag(out, "data");
  Put32(out, data_bytes);
  for (double x : signal.samples) {
    const double c = std::clamp(x, -1.0, 1.0);
    const long q = std::clamp(std::lround(c * 32768.0), -32768L, 32767L);
    Put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

void WriteWav(const AudioSignal& signal, const std::filesystem::path& path) {
  const auto bytes = EncodeWav(signal);
  csv::WriteFileAtomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void ValidateSignal(const AudioSignal& signal) {
  if (signal.sample_rate != kSampleRate)
    Fail(ErrorCode::kUnsupportedRate, "expected 16000 Hz, got " + std::to_string(signal.sample_rate));
  for (double x : signal.samples)
    if (!std::isfinite(x)) Fail(ErrorCode::kInvalidArgument, "signal contains non-finite samples");
}

std::vector<Block> ChopBlocks(const AudioSignal& signal, Label label, std::string_view source_id,
                              const Condition& condition) {
  if (signal.sample_rate != kSampleRate)
    Fail(ErrorCode::kUnsupportedRate, "expected 16000 Hz, got " + std::to_string(signal.sample_rate));
  const std::size_t count = signal.samples.size() / kBlockSamples;
  std::vector<Block> blocks;
  blocks.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    Block blk;
    auto first = signal.samples.begin() + static_cast<std::ptrdiff_t>(b * kBlockSamples);
    blk.samples.assign(first, first + kBlockSamples);
    blk.label = label;
    blk.source_id = std::string(source_id);
    blk.block_index = b;
    blk.condition = condition;
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

double Rms(std::span<const double> samples) {
  if (samples.empty()) Fail(ErrorCode::kEmptyInput, "rms of an empty sequence");
  double acc = 0.0;
  for (double x : samples) acc += x * x;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

}  // namespace advdet
