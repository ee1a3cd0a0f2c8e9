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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/dataset.hpp"
#include "core/filterbank.hpp"

namespace advdet::model {

// Activation shape, height x width x channels. Tensors are stored HWC.
struct Shape3 {
  std::size_t h = 0, w = 0, c = 0;
  constexpr std::size_t size() const { return h * w * c; }
  constexpr bool operator==(const Shape3&) const = default;
};

inline constexpr std::size_t kKernel = 2;  // every conv is 2x2, stride 1, no padding

constexpr Shape3 ConvOut(Shape3 in, std::size_t channels) {
  return {in.h - kKernel + 1, in.w - kKernel + 1, channels};
}
// Pool window equals its stride; output sizes use floor division.
constexpr Shape3 PoolOut(Shape3 in, std::size_t ph, std::size_t pw) {
  return {(in.h - ph) / ph + 1, (in.w - pw) / pw + 1, in.c};
}

inline constexpr Shape3 kInput{kFeatureRows, kNumCeps, 1};
inline constexpr Shape3 kConv1 = ConvOut(kInput, 64);
inline constexpr std::size_t kPool1H = 1, kPool1W = 3;
inline constexpr Shape3 kPool1 = PoolOut(kConv1, kPool1H, kPool1W);
inline constexpr Shape3 kConv2 = ConvOut(kPool1, 64);
inline constexpr std::size_t kPool2H = 1, kPool2W = 1;
inline constexpr Shape3 kPool2 = PoolOut(kConv2, kPool2H, kPool2W);
inline constexpr Shape3 kConv3 = ConvOut(kPool2, 32);
inline constexpr std::size_t kPool3H = 2, kPool3W = 2;
inline constexpr Shape3 kPool3 = PoolOut(kConv3, kPool3H, kPool3W);
inline constexpr std::size_t kFlatten = kPool3.size();
inline constexpr std::size_t kHidden = 128;

static_assert(kConv1 == Shape3{30, 19, 64});
static_assert(kPool1 == Shape3{30, 6, 64});
static_assert(kConv2 == Shape3{29, 5, 64});
static_assert(kPool2 == Shape3{29, 5, 64});
static_assert(kConv3 == Shape3{28, 4, 32});
static_assert(kPool3 == Shape3{14, 2, 32});
static_assert(kFlatten == 896);

// Offsets into the flat parameter vector. Conv weights are laid out
// [kh][kw][in][out]; dense weights [out][in]; flatten order is (C, H, W).
struct ParamLayout {
  std::size_t w1, b1, w2, b2, w3, b3, d1, bd1, d2, bd2, total;
};

constexpr ParamLayout MakeLayout() {
  ParamLayout l{};
  std::size_t off = 0;
  auto take = [&off](std::size_t n) {
    const std::size_t at = off;
    off += n;
    return at;
  };
  l.w1 = take(kKernel * kKernel * kInput.c * kConv1.c);
  l.b1 = take(kConv1.c);
  l.w2 = take(kKernel * kKernel * kPool1.c * kConv2.c);
  l.b2 = take(kConv2.c);
  l.w3 = take(kKernel * kKernel * kPool2.c * kConv3.c);
  l.b3 = take(kConv3.c);
  l.d1 = take(kHidden * kFlatten);
  l.bd1 = take(kHidden);
  l.d2 = take(kHidden);
  l.bd2 = take(1);
  l.total = off;
  return l;
}

inline constexpr ParamLayout kLayout = MakeLayout();

// Canonical text description; its SHA-256 tags checkpoints.
std::string ArchitectureDescription();
std::string ArchitectureHash();

// Human-readable shape chain, e.g. "(31,20)x1 -> (30,19)x64 -> ...".
std::vector<Shape3> ShapeChain();

inline constexpr double kProbClamp = 1e-7;

// Binary cross-entropy with p clamped to [1e-7, 1 - 1e-7].
double BceLoss(double p, int y);
// dL/dp of the unclamped expression, -y/p + (1-y)/(1-p).
double BceGradProb(double p, int y);

double Sigmoid(double z);

// Per-coefficient z-score statistics from the training set.
struct Standardizer {
  std::array<double, kNumCeps> mean{};
  std::array<double, kNumCeps> stddev{};

  Standardizer() { stddev.fill(1.0); }
  static Standardizer Fit(const dataset::LabeledFeatureSet& set);
  std::vector<double> Apply(std::span<const double> coeffs) const;
  void ApplyInto(std::span<const double> coeffs, std::span<double> out) const;
};

// Scratch buffers for one forward/backward pass.
struct Workspace {
  std::vector<double> a1, p1, a2, p2, a3, p3, flat, hidden;
  std::vector<std::uint32_t> arg1, arg2, arg3;
  std::vector<double> g_hidden, g_flat, g_p3, g_a3, g_p2, g_a2, g_p1, g_a1;
  Workspace();
};

class CnnDetector {
 public:
  CnnDetector();  // all-zero parameters

  // He-uniform weights, zero biases.
  static CnnDetector HeUniform(std::uint64_t seed);

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  const Standardizer& standardizer() const { return standardizer_; }
  void set_standardizer(const Standardizer& s) { standardizer_ = s; }
  FeatureName feature() const { return feature_; }
  void set_feature(FeatureName f) { feature_ = f; }

  // Input is an already standardised 31x20 matrix, row-major.
  double Logit(std::span<const double> input, Workspace& ws) const;
  double Probability(std::span<const double> input, Workspace& ws) const;
  double Probability(std::span<const double> input) const;

  // Standardises with the stored statistics, then Probability().
  double Score(const FeatureMatrix& features) const;

  // BCE loss of one example; adds dLoss/dparams into `grad`.
  double LossAndGradient(std::span<const double> input, int label, std::span<double> grad, Workspace& ws) const;

 private:
  std::vector<double> params_;
  Standardizer standardizer_;
  FeatureName feature_ = FeatureName::kMfcc;
};

// Mean loss over `indices` and the gradient of that mean. Per-example
// gradients are reduced in index order, so the result does not depend on
// `threads`.
double MeanLossAndGradient(const CnnDetector& model, std::span<const double> inputs, std::span<const int> labels,
                           std::span<const std::size_t> indices, std::span<double> grad, std::size_t threads = 1);

double MeanLoss(const CnnDetector& model, std::span<const double> inputs, std::span<const int> labels);

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // intra-batch workers; results are identical for any value

  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing keys keep the values already in `base`.
  static TrainConfig FromJson(const nlohmann::json& j, const TrainConfig& base);
  static TrainConfig FromJson(const nlohmann::json& j);
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool early_stopped = false;

  nlohmann::json ToJson() const;
};

struct TrainResult {
  CnnDetector model;
  TrainHistory history;
};

// Adam over shuffled mini-batches; keeps the weights of the epoch with the
// lowest validation loss and stops after `patience` epochs without progress.
TrainResult Train(const dataset::LabeledFeatureSet& train_set, const dataset::LabeledFeatureSet& val_set,
                  const TrainConfig& config);

struct ScoredLabel {
  double score = 0.0;
  int label = 0;
};

std::vector<ScoredLabel> PredictScores(const CnnDetector& model, const dataset::LabeledFeatureSet& set);

struct Checkpoint {
  CnnDetector model;
  TrainConfig config;
  std::string architecture_hash;
};

// Little-endian: magic "ADVCKPT\0", u32 version, 32-byte architecture hash,
// u32+name feature, 20 f64 means, 20 f64 stddevs, u32+json config,
// u64 seed, u64 parameter count, f64 parameters.
std::string EncodeCheckpoint(const CnnDetector& model, const TrainConfig& config);
Checkpoint DecodeCheckpoint(std::string_view bytes, const std::string& origin);
void SaveCheckpoint(const std::filesystem::path& path, const CnnDetector& model, const TrainConfig& config);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace advdet::model
