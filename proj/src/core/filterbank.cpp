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

#include "core/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "core/error.hpp"

namespace advdet {

std::string_view ToString(FeatureName name) {
  switch (name) {
    case FeatureName::kLfcc: return "LFCC";
    case FeatureName::kMfcc: return "MFCC";
    case FeatureName::kImfcc: return "IMFCC";
    case FeatureName::kGfcc: return "GFCC";
    case FeatureName::kIgfcc: return "IGFCC";
  }
  return "?";
}

std::string_view ToString(FilterFamily family) {
  switch (family) {
    case FilterFamily::kLinear: return "linear";
    case FilterFamily::kMel: return "mel";
    case FilterFamily::kInverseMel: return "inverse_mel";
    case FilterFamily::kGammatone: return "gammatone";
    case FilterFamily::kInverseGammatone: return "inverse_gammatone";
  }
  return "?";
}

std::optional<FeatureName> ParseFeatureName(std::string_view text) {
  std::string up(text);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (auto f : kAllFeatures)
    if (ToString(f) == up) return f;
  return std::nullopt;
}

FilterFamily FamilyOf(FeatureName name) {
  switch (name) {
    case FeatureName::kLfcc: return FilterFamily::kLinear;
    case FeatureName::kMfcc: return FilterFamily::kMel;
    case FeatureName::kImfcc: return FilterFamily::kInverseMel;
    case FeatureName::kGfcc: return FilterFamily::kGammatone;
    case FeatureName::kIgfcc: return FilterFamily::kInverseGammatone;
  }
  return FilterFamily::kMel;
}

void FilterBankSpec::Validate() const {
  if (num_filters < 1) Fail(ErrorCode::kBadSpec, "need at least one filter");
  if (sample_rate <= 0.0) Fail(ErrorCode::kBadSpec, "sample rate must be positive");
  if (!(f_low >= 0.0 && f_low < f_high && f_high <= sample_rate / 2.0))
    Fail(ErrorCode::kBadSpec, "need 0 <= f_low < f_high <= Fs/2");
  if (frame_length < 2 || fft_bins != frame_length / 2 + 1)
    Fail(ErrorCode::kBadSpec, "fft_bins must equal frame_length/2 + 1");
  if (gammatone_order < 1) Fail(ErrorCode::kBadSpec, "gammatone order must be >= 1");
  if (gammatone_c <= 0.0) Fail(ErrorCode::kBadSpec, "gammatone C must be positive");
}

FilterBankMatrix::FilterBankMatrix(FilterBankSpec spec, std::vector<double> gains, std::vector<std::string> warnings)
    : spec_(spec), gains_(std::move(gains)), warnings_(std::move(warnings)) {
  if (gains_.size() != spec_.num_filters * spec_.fft_bins)
    Fail(ErrorCode::kShapeMismatch, "gain matrix size does not match M x K");
}

double HzToMel(double hz) { return 1125.0 * std::log(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::exp(mel / 1125.0) - 1.0); }
double Erb(double hz) { return hz / 9.26 + 24.7; }

std::vector<double> LinearBoundaries(const FilterBankSpec& spec) {
  const double to_bins = static_cast<double>(spec.frame_length) / spec.sample_rate;
  const double step = (spec.f_high - spec.f_low) / static_cast<double>(spec.num_filters + 1);
  std::vector<double> b(spec.num_filters + 2);
  for (std::size_t m = 0; m < b.size(); ++m) b[m] = to_bins * (spec.f_low + static_cast<double>(m) * step);
  return b;
}

std::vector<double> MelBoundaries(const FilterBankSpec& spec) {
  const double to_bins = static_cast<double>(spec.frame_length) / spec.sample_rate;
  const double lo = HzToMel(spec.f_low);
  const double step = (HzToMel(spec.f_high) - lo) / static_cast<double>(spec.num_filters + 1);
  std::vector<double> b(spec.num_filters + 2);
  for (std::size_t m = 0; m < b.size(); ++m) b[m] = to_bins * MelToHz(lo + static_cast<double>(m) * step);
  return b;
}

double GammatoneCentreHz(const FilterBankSpec& spec, int g) {
  const double c = spec.gammatone_c;
  const double ratio = std::log10((spec.f_low + c) / (spec.f_high + c));
  return -c + (spec.f_high + c) * std::exp(static_cast<double>(g) * ratio / static_cast<double>(spec.num_filters));
}

namespace {

// Area-normalised triangles between consecutive boundary points.
FilterBankMatrix TriangularBank(const FilterBankSpec& spec, const std::vector<double>& b) {
  const std::size_t M = spec.num_filters;
  const std::size_t K = spec.fft_bins;
  std::vector<double> gains(M * K, 0.0);
  std::vector<std::string> warnings;
  for (std::size_t m = 1; m <= M; ++m) {
    const double lo = b[m - 1], mid = b[m], hi = b[m + 1];
    bool any = false;
    for (std::size_t k = 0; k < K; ++k) {
      const double x = static_cast<double>(k);
      double h = 0.0;
      if (x >= lo && x <= mid && mid > lo)
        h = 2.0 * (x - lo) / ((hi - lo) * (mid - lo));
      else if (x > mid && x <= hi && hi > mid)
        h = 2.0 * (hi - x) / ((hi - lo) * (hi - mid));
      gains[(m - 1) * K + k] = h;
      any = any || h > 0.0;
    }
    if (!any)
      warnings.push_back("filter " + std::to_string(m - 1) + " covers no FFT bin; its energy is the log floor");
  }
  return FilterBankMatrix(spec, std::move(gains), std::move(warnings));
}

void RequireFamily(const FilterBankSpec& spec, FilterFamily want) {
  spec.Validate();
  if (spec.family != want)
    Fail(ErrorCode::kBadSpec, "expected family " + std::string(ToString(want)) + ", got " +
                                  std::string(ToString(spec.family)));
}

}  // namespace

FilterBankMatrix LinearFilterBank(const FilterBankSpec& spec) {
  RequireFamily(spec, FilterFamily::kLinear);
  return TriangularBank(spec, LinearBoundaries(spec));
}

FilterBankMatrix MelFilterBank(const FilterBankSpec& spec) {
  RequireFamily(spec, FilterFamily::kMel);
  return TriangularBank(spec, MelBoundaries(spec));
}

FilterBankMatrix GammatoneFilterBank(const FilterBankSpec& spec) {
  RequireFamily(spec, FilterFamily::kGammatone);
  const std::size_t M = spec.num_filters;
  const std::size_t K = spec.fft_bins;
  const int L = spec.gammatone_order;
  double numerator = 1.0;  // (L-1)!
  for (int i = 2; i < L; ++i) numerator *= i;
  const double hz_per_bin = spec.sample_rate / static_cast<double>(spec.frame_length);
  std::vector<double> gains(M * K);
  for (std::size_t g = 1; g <= M; ++g) {
    const double fc = GammatoneCentreHz(spec, static_cast<int>(g));
    const double erb = Erb(fc);
    double* row = gains.data() + (g - 1) * K;
    double peak = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double f = static_cast<double>(k) * hz_per_bin;
      const std::complex<double> denom(erb, 2.0 * std::numbers::pi * f - 2.0 * std::numbers::pi * fc);
      row[k] = std::abs(numerator / std::pow(denom, L));
      peak = std::max(peak, row[k]);
    }
    for (std::size_t k = 0; k < K; ++k) row[k] /= peak;
  }
  return FilterBankMatrix(spec, std::move(gains));
}

FilterBankMatrix InvertFilterBank(const FilterBankMatrix& fb) {
  const std::size_t M = fb.num_filters();
  const std::size_t K = fb.num_bins();
  std::vector<double> gains(M * K);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t k = 0; k < K; ++k) gains[m * K + k] = fb.at(M - 1 - m, K - 1 - k);
  FilterBankSpec spec = fb.spec();
  switch (spec.family) {
    case FilterFamily::kMel: spec.family = FilterFamily::kInverseMel; break;
    case FilterFamily::kInverseMel: spec.family = FilterFamily::kMel; break;
    case FilterFamily::kGammatone: spec.family = FilterFamily::kInverseGammatone; break;
    case FilterFamily::kInverseGammatone: spec.family = FilterFamily::kGammatone; break;
    case FilterFamily::kLinear: break;
  }
  return FilterBankMatrix(spec, std::move(gains), fb.warnings());
}

FilterBankMatrix MakeFilterBank(const FilterBankSpec& spec) {
  FilterBankSpec base = spec;
  switch (spec.family) {
    case FilterFamily::kLinear: return LinearFilterBank(spec);
    case FilterFamily::kMel: return MelFilterBank(spec);
    case FilterFamily::kGammatone: return GammatoneFilterBank(spec);
    case FilterFamily::kInverseMel:
      base.family = FilterFamily::kMel;
      return InvertFilterBank(MelFilterBank(base));
    case FilterFamily::kInverseGammatone:
      base.family = FilterFamily::kGammatone;
      return InvertFilterBank(GammatoneFilterBank(base));
  }
  Fail(ErrorCode::kBadSpec, "unknown filter family");
}

const FilterBankMatrix& StandardFilterBank(FeatureName name) {
  static const std::array<FilterBankMatrix, 5> banks = [] {
    auto make = [](FeatureName n) {
      FilterBankSpec spec;
      spec.family = FamilyOf(n);
      return MakeFilterBank(spec);
    };
    return std::array<FilterBankMatrix, 5>{make(FeatureName::kLfcc), make(FeatureName::kMfcc),
                                           make(FeatureName::kImfcc), make(FeatureName::kGfcc),
                                           make(FeatureName::kIgfcc)};
  }();
  return banks[static_cast<std::size_t>(name)];
}

FeatureMatrix Cepstra(const dsp::PowerSpectrumSet& power, const FilterBankMatrix& fb, FeatureName name,
                      std::size_t num_ceps) {
  const std::size_t M = fb.num_filters();
  const std::size_t K = fb.num_bins();
  if (K != dsp::kNumBins || power.data.size() != power.num_frames * dsp::kNumBins)
    Fail(ErrorCode::kShapeMismatch, "power spectra and filter bank disagree on bin count");
  if (power.num_frames != kFeatureRows)
    Fail(ErrorCode::kShapeMismatch, "expected 31 frames, got " + std::to_string(power.num_frames));
  const auto dct = dsp::Dct2Matrix(M, num_ceps);
  FeatureMatrix out;
  out.name = name;
  out.coeffs.assign(power.num_frames * num_ceps, 0.0);
  std::vector<double> log_energy(M);
  for (std::size_t f = 0; f < power.num_frames; ++f) {
    const auto spec = power.Spectrum(f);
    for (std::size_t m = 0; m < M; ++m) {
      const auto row = fb.Row(m);
      double e = 0.0;
      for (std::size_t k = 0; k < K; ++k) e += row[k] * spec[k];
      log_energy[m] = std::log(e + kLogFloor);
    }
    for (std::size_t j = 0; j < num_ceps; ++j) {
      double acc = 0.0;
      for (std::size_t m = 0; m < M; ++m) acc += dct[j * M + m] * log_energy[m];
      out.coeffs[f * num_ceps + j] = acc;
    }
  }
  return out;
}

FeatureMatrix ExtractFeatures(std::span<const double> block, FeatureName name) {
  const auto frames = dsp::FrameBlock(block);
  const auto power = dsp::PowerSpectra(frames);
  return Cepstra(power, StandardFilterBank(name), name);
}

}  // namespace advdet
