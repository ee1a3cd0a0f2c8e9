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

#include "core/smoke_corpus.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <json.hpp>

#include "core/audio.hpp"
#include "core/blocks.hpp"
#include "core/csv.hpp"
#include "core/dataset.hpp"
#include "core/noise.hpp"

namespace advdet::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void ScaleToRms(std::vector<double>& x, double rms) {
  const double r = Rms(x);
  if (r > 0)
    for (auto& v : x) v *= rms / r;
}

// Two-pole resonator driven by white noise.
std::vector<double> Resonant(std::size_t n, double centre_hz, double radius, Rng& rng) {
  const double theta = kTwoPi * centre_hz / kSampleRate;
  const double a1 = 2 * radius * std::cos(theta), a2 = -radius * radius;
  std::vector<double> y(n);
  double y1 = 0, y2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = rng.Normal() + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = v;
    y[i] = v;
  }
  return y;
}

}  // namespace

std::vector<double> SpeechLike(std::size_t n, Rng& rng, double rms) {
  std::vector<double> x(n, 0.0);
  const double f0 = rng.Uniform(100.0, 220.0);
  const double syllable_hz = rng.Uniform(3.0, 5.0);
  const double env_phase = rng.Uniform(0.0, kTwoPi);
  // Voiced part: harmonics to 4 kHz with a falling slope and slow vibrato.
  const std::size_t harmonics = static_cast<std::size_t>(4000.0 / f0);
  std::vector<double> phase(harmonics);
  for (auto& p : phase) p = rng.Uniform(0.0, kTwoPi);
  double f0_phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    f0_phase += kTwoPi * f0 * (1.0 + 0.03 * std::sin(kTwoPi * 5.0 * t)) / kSampleRate;
    double v = 0.0;
    for (std::size_t h = 0; h < harmonics; ++h)
      v += std::sin(static_cast<double>(h + 1) * f0_phase + phase[h]) / static_cast<double>(h + 1);
    x[i] = v;
  }
  ScaleToRms(x, 1.0);
  // Unvoiced part: two formant-like resonances.
  auto f1 = Resonant(n, rng.Uniform(400.0, 900.0), 0.97, rng);
  auto f2 = Resonant(n, rng.Uniform(1200.0, 2600.0), 0.95, rng);
  ScaleToRms(f1, 0.5);
  ScaleToRms(f2, 0.3);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    const double env = 0.15 + 0.85 * std::pow(std::abs(std::sin(std::numbers::pi * syllable_hz * t + env_phase)), 1.5);
    x[i] = env * (x[i] + f1[i] + f2[i]);
  }
  ScaleToRms(x, rms);
  // Broadband floor at a random level between -55 and -45 dB.
  const double floor = rms * std::pow(10.0, rng.Uniform(-55.0, -45.0) / 20.0);
  for (auto& v : x) v += floor * rng.Normal();
  return x;
}

void AddHighBandPerturbation(std::vector<double>& x, double rel_db, Rng& rng) {
  constexpr int kTones = 24;
  std::vector<double> p(x.size(), 0.0);
  for (int k = 0; k < kTones; ++k) {
    const double f = rng.Uniform(6000.0, 8000.0), ph = rng.Uniform(0.0, kTwoPi);
    for (std::size_t i = 0; i < x.size(); ++i) p[i] += std::sin(kTwoPi * f * static_cast<double>(i) / kSampleRate + ph);
  }
  ScaleToRms(p, Rms(x) * std::pow(10.0, rel_db / 20.0));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += p[i];
}

std::vector<double> BackgroundNoise(std::string_view type, std::size_t n, Rng& rng) {
  std::vector<double> x(n, 0.0);
  if (type == "bbl" || type == "cafeteria") {
    for (int talker = 0; talker < 6; ++talker) {
      const auto s = SpeechLike(n, rng);
      for (std::size_t i = 0; i < n; ++i) x[i] += s[i];
    }
    if (type == "cafeteria")
      for (std::size_t i = 0; i < n; ++i)
        if (rng.Uniform() < 2e-4) x[i] += rng.Uniform(-0.5, 0.5);
  } else if (type == "ssn") {
    x = Resonant(n, 500.0, 0.9, rng);
  } else if (type == "bus" || type == "square") {
    x = Resonant(n, type == "bus" ? 80.0 : 300.0, 0.995, rng);
    const auto w = Resonant(n, 2000.0, 0.5, rng);
    for (std::size_t i = 0; i < n; ++i) x[i] += 0.05 * w[i];
  } else {
    for (auto& v : x) v = rng.Normal();
    if (type == "kitchen")
      for (std::size_t i = 0; i < n; ++i)
        if (rng.Uniform() < 5e-4) x[i] += rng.Uniform(-20.0, 20.0);
  }
  ScaleToRms(x, 0.05);
  return x;
}

void MakeSmokeCorpus(const std::filesystem::path& dir, std::uint64_t seed) {
  namespace fs = std::filesystem;
  constexpr std::size_t kLead = 6400, kSpeech = 27200, kTail = 6400;  // 0.4 s + 1.7 s + 0.4 s
  Rng rng(DeriveSeed(seed, "smoke-corpus"));

  csv::Table labels;
  labels.header = {"path", "label", "attack", "utterance"};
  for (std::string attack : {"white", "black"}) {
    // Five utterances per attack: three train, one validation, one test.
    std::array<int, 3> want = {3, 1, 1};
    for (int k = 0; want[0] + want[1] + want[2] > 0; ++k) {
      const std::string utt = attack + "_utt" + std::to_string(k);
      auto& slot = want[static_cast<std::size_t>(dataset::SplitForId(utt))];
      if (slot == 0) continue;
      --slot;
      std::vector<double> x;
      for (std::size_t i = 0; i < kLead; ++i) x.push_back(1e-3 * rng.Normal());
      const auto speech = SpeechLike(kSpeech, rng);
      x.insert(x.end(), speech.begin(), speech.end());
      for (std::size_t i = 0; i < kTail; ++i) x.push_back(1e-3 * rng.Normal());
      auto adv = x;
      AddHighBandPerturbation(adv, -30.0, rng);
      for (auto [label, samples] : {std::pair{Label::kBenign, &x}, std::pair{Label::kAdversarial, &adv}}) {
        const std::string rel = attack + "/" + std::string(ToString(label)) + "/" + utt + ".wav";
        WriteWav(AudioSignal{*samples, kSampleRate}, dir / "audio" / rel);
        labels.rows.push_back({rel, std::string(ToString(label)), attack, utt});
      }
    }
  }
  csv::WriteTable(dir / "labels.csv", labels);

  for (auto name : noise::kNoiseTypes)
    WriteWav(AudioSignal{BackgroundNoise(name, 4 * kSampleRate, rng), kSampleRate},
             dir / "noise" / (std::string(name) + ".wav"));

  const nlohmann::json experiment = {{"name", "smoke"},
                                     {"design", "attack_cross"},
                                     {"seeds", {0, 1, 2, 3, 4}},
                                     {"train", {{"max_epochs", 2}, {"patience", 2}}}};
  csv::WriteFileAtomic(dir / "experiment.json", experiment.dump(2) + "\n");
  const nlohmann::json config = {{"labels", "labels.csv"},   {"audio_root", "audio"},   {"noise_dir", "noise"},
                                 {"work_dir", "work"},       {"cache_dir", "cache"},    {"results_dir", "results"},
                                 {"experiment", "experiment.json"}, {"jobs", 1},        {"deterministic", true}};
  csv::WriteFileAtomic(dir / "config.json", config.dump(2) + "\n");
}

}  // namespace advdet::synth
