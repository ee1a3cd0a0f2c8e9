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

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/vad.hpp"
#include "test_util.hpp"

using namespace advdet;

namespace {

// One 256-sample hop per character: 'L' loud tone, '.' faint noise.
AudioSignal FromHops(const std::string& pattern, std::uint64_t seed = 1) {
  Rng rng(seed);
  AudioSignal s;
  for (std::size_t h = 0; h < pattern.size(); ++h)
    for (std::size_t n = 0; n < 256; ++n) {
      const double t = static_cast<double>(h * 256 + n);
      s.samples.push_back(pattern[h] == 'L' ? 0.3 * std::sin(2 * std::numbers::pi * 440 * t / 16000)
                                            : 1e-3 * rng.Uniform(-1, 1));
    }
  return s;
}

std::string Flags(const vad::SpeechMask& m) {
  std::string s;
  for (auto f : m.flags) s += f ? '1' : '0';
  return s;
}

}  // namespace

TEST_SUITE("vad") {
  TEST_CASE("percentile interpolates linearly") {
    CHECK(vad::Percentile({4, 1, 3, 2}, 0) == 1.0);
    CHECK(vad::Percentile({4, 1, 3, 2}, 100) == 4.0);
    CHECK(vad::Percentile({4, 1, 3, 2}, 50) == doctest::Approx(2.5));
    CHECK(vad::Percentile({10, 20}, 10) == doctest::Approx(11.0));
    CHECK_CODE(vad::Percentile({}, 10), ErrorCode::kEmptyInput);
  }

  TEST_CASE("frames touching a loud hop are speech") {
    // 40 hops -> 39 frames; frame f spans hops f and f+1.
    const std::string hops = std::string(15, '.') + std::string(10, 'L') + std::string(15, '.');
    const auto mask = vad::DetectSpeech(FromHops(hops));
    REQUIRE(mask.size() == 39);
    CHECK(Flags(mask) == std::string(14, '0') + std::string(11, '1') + std::string(14, '0'));
  }

  TEST_CASE("short gaps are closed, longer ones kept") {
    // A 4-hop gap leaves 3 quiet frames (closed); a 5-hop gap leaves 4.
    const std::string closed = std::string(20, '.') + "LLLL" + "...." + "LLLL" + std::string(20, '.');
    CHECK(Flags(vad::DetectSpeech(FromHops(closed))) == std::string(19, '0') + std::string(13, '1') + std::string(19, '0'));
    const std::string open = std::string(20, '.') + "LLLL" + "....." + "LLLL" + std::string(20, '.');
    CHECK(Flags(vad::DetectSpeech(FromHops(open))) ==
          std::string(19, '0') + "11111" + "0000" + "11111" + std::string(19, '0'));
  }

  TEST_CASE("islands of two frames or fewer are dropped") {
    const std::string one = std::string(20, '.') + "L" + std::string(20, '.');
    CHECK(vad::DetectSpeech(FromHops(one)).SpeechFrames() == 0);
    const std::string two = std::string(20, '.') + "LL" + std::string(20, '.');
    CHECK(vad::DetectSpeech(FromHops(two)).SpeechFrames() == 3);
  }

  TEST_CASE("an utterance with no quiet stretch is all speech") {
    const auto mask = vad::DetectSpeech(FromHops(std::string(30, 'L')));
    CHECK(mask.SpeechFrames() == mask.size());
  }

  TEST_CASE("digital silence is never speech") {
    AudioSignal s;
    s.samples.assign(16000, 0.0);
    CHECK(vad::DetectSpeech(s).SpeechFrames() == 0);
    s.samples.resize(511);
    CHECK_CODE(vad::DetectSpeech(s), ErrorCode::kTooShort);
  }

  TEST_CASE("split assigns each owned sample to exactly one part") {
    const auto sig = FromHops(std::string(12, '.') + std::string(8, 'L') + std::string(12, '.'));
    auto padded = sig;
    padded.samples.resize(sig.size() + 100, 0.25);  // tail past the last frame
    const auto mask = vad::DetectSpeech(padded);
    const auto [speech, nonspeech] = vad::SplitSpeechNonspeech(padded, mask);
    CHECK(speech.size() + nonspeech.size() == 256 * (mask.size() + 1));
    CHECK(padded.size() - (speech.size() + nonspeech.size()) <= 255);
    std::size_t expect_speech = 0;
    for (std::size_t f = 0; f < mask.size(); ++f) {
      const auto [b, e] = vad::FrameOwnership(mask, f);
      CHECK(b == 256 * f);
      CHECK(e - b == (f + 1 == mask.size() ? 512u : 256u));
      if (mask.IsSpeech(f)) expect_speech += e - b;
    }
    CHECK(speech.size() == expect_speech);
    // Speech samples appear in order.
    const auto [b0, e0] = vad::FrameOwnership(mask, 12);
    REQUIRE(mask.IsSpeech(12));
    std::size_t before = 0;
    for (std::size_t f = 0; f < 12; ++f)
      if (mask.IsSpeech(f)) before += 256;
    CHECK(speech.samples[before] == padded.samples[b0]);
    (void)e0;
    vad::SpeechMask wrong = mask;
    wrong.flags.pop_back();
    CHECK_CODE(vad::SplitSpeechNonspeech(padded, wrong), ErrorCode::kGeometryMismatch);
  }

  TEST_CASE("mask text format") {
    const auto two = vad::ParseMask("0,1\n1,0");
    CHECK(Flags(two) == "10");
    const auto m = vad::ParseMask("frame_index,flag\n0,0\n1,1\n2,1\n");
    CHECK(Flags(m) == "011");
    CHECK(vad::ParseMask(vad::RenderMask(m)) == m);
    testutil::TempDir tmp("mask");
    const auto detected = vad::DetectSpeech(FromHops(std::string(10, '.') + std::string(6, 'L') + std::string(10, '.')));
    vad::SaveMask(detected, tmp.path() / "m.csv");
    CHECK(vad::LoadMask(tmp.path() / "m.csv") == detected);
    CHECK_CODE(vad::ParseMask("0,0\n2,1\n"), ErrorCode::kParse);
    CHECK_CODE(vad::ParseMask("0,2\n"), ErrorCode::kParse);
    CHECK_CODE(vad::ParseMask("0;1\n"), ErrorCode::kParse);
    CHECK_CODE(vad::ParseMask(""), ErrorCode::kParse);
  }
}
