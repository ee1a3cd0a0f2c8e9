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
#include <string_view>
#include <vector>

#include "core/rng.hpp"

namespace advdet::synth {

// Speech-shaped test material: voiced harmonics plus filtered noise under a
// syllable-rate envelope, with a faint broadband floor.
std::vector<double> SpeechLike(std::size_t n, Rng& rng, double rms = 0.1);

// Adds a sum of random 6-8 kHz sinusoids whose RMS sits `rel_db` dB
// relative to the RMS of `x`.
void AddHighBandPerturbation(std::vector<double>& x, double rel_db, Rng& rng);

// Stationary background noise of the given type name; unknown names get
// plain white noise.
std::vector<double> BackgroundNoise(std::string_view type, std::size_t n, Rng& rng);

// Writes a 20-utterance corpus (white/black attacks, benign and
// adversarial), six noise recordings, labels.csv, experiment.json and
// config.json under `dir`.
void MakeSmokeCorpus(const std::filesystem::path& dir, std::uint64_t seed = 0);

}  // namespace advdet::synth
