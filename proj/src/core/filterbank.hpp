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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/dsp.hpp"

namespace advdet {

enum class FilterFamily { kLinear, kMel, kInverseMel, kGammatone, kInverseGammatone };

// Cepstral feature kinds; each maps to exactly one filter family.
enum class FeatureName { kLfcc, kMfcc, kImfcc, kGfcc, kIgfcc };

// Column order used by every result table.
inline constexpr std::array<FeatureName, 5> kAllFeatures = {
    FeatureName::kGfcc, FeatureName::kIgfcc, FeatureName::kImfcc, FeatureName::kLfcc, FeatureName::kMfcc};

std::string_view ToString(FeatureName name);
std::string_view ToString(FilterFamily family);
std::optional<FeatureName> ParseFeatureName(std::string_view text);
FilterFamily FamilyOf(FeatureName name);

struct FilterBankSpec {
  FilterFamily family = FilterFamily::kMel;
  std::size_t num_filters = 20;
  std::size_t fft_bins = dsp::kNumBins;
  double sample_rate = 16000.0;
  double f_low = 0.0;
  double f_high = 8000.0;
  int gammatone_order = 4;
  double gammatone_c = 228.83;
  std::size_t frame_length = dsp::kFrameLength;

  // Throws BadSpec.
  void Validate() const;
};

// M x K gains over one-sided FFT bins. Immutable once built.
class FilterBankMatrix {
 public:
  FilterBankMatrix(FilterBankSpec spec, std::vector<double> gains, std::vector<std::string> warnings = {});

  const FilterBankSpec& spec() const { return spec_; }
  std::size_t num_filters() const { return spec_.num_filters; }
  std::size_t num_bins() const { return spec_.fft_bins; }
  std::span<const double> Row(std::size_t m) const { return {gains_.data() + m * num_bins(), num_bins()}; }
  double at(std::size_t m, std::size_t k) const { return gains_[m * num_bins() + k]; }
  const std::vector<double>& gains() const { return gains_; }

  // Construction-time notes, e.g. a filter whose support holds no whole bin.
  const std::vector<std::string>& warnings() const { return warnings_; }

  bool operator==(const FilterBankMatrix& other) const { return gains_ == other.gains_; }

 private:
  FilterBankSpec spec_;
  std::vector<double> gains_;
  std::vector<std::string> warnings_;
};

double HzToMel(double hz);
double MelToHz(double mel);
double Erb(double hz);

// Boundary points f_b(0..M+1) in fractional FFT-bin units.
std::vector<double> LinearBoundaries(const FilterBankSpec& spec);
std::vector<double> MelBoundaries(const FilterBankSpec& spec);

// Centre frequency in Hz of gammatone filter g, 1 <= g <= M.
double GammatoneCentreHz(const FilterBankSpec& spec, int g);

FilterBankMatrix LinearFilterBank(const FilterBankSpec& spec);
FilterBankMatrix MelFilterBank(const FilterBankSpec& spec);
FilterBankMatrix GammatoneFilterBank(const FilterBankSpec& spec);

// gains'[m][k] = gains[M-1-m][K-1-k]. Applying it twice is the identity.
FilterBankMatrix InvertFilterBank(const FilterBankMatrix& fb);

// Any of the five families, inverse ones built by inverting the regular bank.
FilterBankMatrix MakeFilterBank(const FilterBankSpec& spec);

// Shared 20-filter bank for a feature kind.
const FilterBankMatrix& StandardFilterBank(FeatureName name);

inline constexpr std::size_t kNumCeps = 20;
inline constexpr std::size_t kFeatureRows = dsp::kFramesPerBlock;
inline constexpr std::size_t kFeatureSize = kFeatureRows * kNumCeps;  // supervector length, 620
inline constexpr double kLogFloor = 1e-10;

struct FeatureMatrix {
  FeatureName name = FeatureName::kMfcc;
  std::vector<double> coeffs;  // row-major frames x ceps

  double at(std::size_t frame, std::size_t c) const { return coeffs[frame * kNumCeps + c]; }
  std::span<const double> Supervector() const { return coeffs; }
};

// Per frame: energies = fb * power, then DCT-II of log(energies + 1e-10).
FeatureMatrix Cepstra(const dsp::PowerSpectrumSet& power, const FilterBankMatrix& fb, FeatureName name,
                      std::size_t num_ceps = kNumCeps);

// frame -> power spectrum -> cepstra on one 8192-sample block.
FeatureMatrix ExtractFeatures(std::span<const double> block, FeatureName name);

}  // namespace advdet
