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

#include "core/cnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <thread>

#include "core/csv.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/sha256.hpp"

namespace advdet::model {

namespace {

// The hot kernels get an AVX2 clone. Without FMA the arithmetic per element
// is unchanged, so both clones produce identical bits.

// Dot product with four interleaved partial sums. The summation order is
// fixed, so results stay reproducible, but the adds no longer form one
// serial dependency chain. `n` is a multiple of 4 for every layer here.
[[gnu::target_clones("avx2", "default")]]
double Dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (std::size_t i = 0; i < n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  return (s0 + s1) + (s2 + s3);
}

[[gnu::target_clones("avx2", "default")]]
void ConvForward(const double* in, Shape3 is, const double* w, const double* b, double* out, Shape3 os) {
  const std::size_t cin = is.c, cout = os.c;
  for (std::size_t y = 0; y < os.h; ++y) {
    for (std::size_t x = 0; x < os.w; ++x) {
      double* o = out + (y * os.w + x) * cout;
      std::copy(b, b + cout, o);
      for (std::size_t kh = 0; kh < kKernel; ++kh) {
        for (std::size_t kw = 0; kw < kKernel; ++kw) {
          const double* ip = in + ((y + kh) * is.w + (x + kw)) * cin;
          const double* wp = w + (kh * kKernel + kw) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double a = ip[ci];
            if (a == 0.0) continue;  // inputs after ReLU are often exactly zero
            const double* wr = wp + ci * cout;
            for (std::size_t co = 0; co < cout; ++co) o[co] += a * wr[co];
          }
        }
      }
      for (std::size_t co = 0; co < cout; ++co) o[co] = std::max(o[co], 0.0);
    }
  }
}

// `gout` is the gradient w.r.t. the conv pre-activation. Accumulates weight
// and bias gradients; writes the input gradient when `gin` is non-null.
[[gnu::target_clones("avx2", "default")]]
void ConvBackward(const double* in, Shape3 is, const double* w, const double* gout, Shape3 os, double* gw, double* gb,
                  double* gin) {
  const std::size_t cin = is.c, cout = os.c;
  if (gin) std::fill(gin, gin + is.size(), 0.0);
  for (std::size_t y = 0; y < os.h; ++y) {
    for (std::size_t x = 0; x < os.w; ++x) {
      const double* go = gout + (y * os.w + x) * cout;
      bool any = false;
      for (std::size_t co = 0; co < cout; ++co) any = any || go[co] != 0.0;
      if (!any) continue;
      for (std::size_t co = 0; co < cout; ++co) gb[co] += go[co];
      for (std::size_t kh = 0; kh < kKernel; ++kh) {
        for (std::size_t kw = 0; kw < kKernel; ++kw) {
          const std::size_t in_off = ((y + kh) * is.w + (x + kw)) * cin;
          const double* ip = in + in_off;
          const std::size_t w_off = (kh * kKernel + kw) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double a = ip[ci];
            if (a != 0.0) {
              double* gwr = gw + w_off + ci * cout;
              for (std::size_t co = 0; co < cout; ++co) gwr[co] += a * go[co];
            }
            if (gin) gin[in_off + ci] += Dot(w + w_off + ci * cout, go, cout);
          }
        }
      }
    }
  }
}

// Max over non-overlapping windows; ties go to the first element in
// row-major window order.
void PoolForward(const double* in, Shape3 is, std::size_t ph, std::size_t pw, double* out, std::uint32_t* arg,
                 Shape3 os) {
  for (std::size_t y = 0; y < os.h; ++y) {
    for (std::size_t x = 0; x < os.w; ++x) {
      for (std::size_t c = 0; c < os.c; ++c) {
        std::size_t best = ((y * ph) * is.w + x * pw) * is.c + c;
        double best_v = in[best];
        for (std::size_t r = 0; r < ph; ++r) {
          for (std::size_t s = 0; s < pw; ++s) {
            const std::size_t idx = ((y * ph + r) * is.w + (x * pw + s)) * is.c + c;
            if (in[idx] > best_v) {
              best_v = in[idx];
              best = idx;
            }
          }
        }
        const std::size_t o = (y * os.w + x) * os.c + c;
        out[o] = best_v;
        arg[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

// Routes pooled gradients back to the winning inputs and applies the ReLU
// mask of the (post-activation) conv output.
void PoolBackwardRelu(const double* gout, const std::uint32_t* arg, std::size_t out_size, const double* act,
                      double* gin, std::size_t in_size) {
  std::fill(gin, gin + in_size, 0.0);
  for (std::size_t o = 0; o < out_size; ++o) gin[arg[o]] += gout[o];
  for (std::size_t i = 0; i < in_size; ++i)
    if (act[i] <= 0.0) gin[i] = 0.0;
}

// p3 (HWC) -> flat (CHW).
void Flatten(const double* p3, double* flat) {
  for (std::size_t y = 0; y < kPool3.h; ++y)
    for (std::size_t x = 0; x < kPool3.w; ++x)
      for (std::size_t c = 0; c < kPool3.c; ++c)
        flat[c * kPool3.h * kPool3.w + y * kPool3.w + x] = p3[(y * kPool3.w + x) * kPool3.c + c];
}

void Unflatten(const double* flat, double* p3) {
  for (std::size_t y = 0; y < kPool3.h; ++y)
    for (std::size_t x = 0; x < kPool3.w; ++x)
      for (std::size_t c = 0; c < kPool3.c; ++c)
        p3[(y * kPool3.w + x) * kPool3.c + c] = flat[c * kPool3.h * kPool3.w + y * kPool3.w + x];
}

template <typename Fn>
void ParallelFor(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i, t);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

std::string ArchitectureDescription() {
  std::ostringstream s;
  s << "input(31,20,1);conv2d(64,k2x2,s1x1)+relu;maxpool(k1x3,s1x3);conv2d(64,k2x2,s1x1)+relu;"
       "maxpool(k1x1,s1x1);conv2d(32,k2x2,s1x1)+relu;maxpool(k2x2,s2x2);flatten(896,chw);"
       "dense(128)+relu;dense(1)+sigmoid;layout=conv[kh][kw][in][out],dense[out][in];params="
    << kLayout.total;
  return s.str();
}

std::string ArchitectureHash() { return Sha256Hex(ArchitectureDescription()); }

std::vector<Shape3> ShapeChain() { return {kInput, kConv1, kPool1, kConv2, kPool2, kConv3, kPool3}; }

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double BceLoss(double p, int y) {
  const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return y == 1 ? -std::log(pc) : -std::log(1.0 - pc);
}

double BceGradProb(double p, int y) { return -static_cast<double>(y) / p + (1.0 - y) / (1.0 - p); }

Standardizer Standardizer::Fit(const dataset::LabeledFeatureSet& set) {
  Standardizer s;
  if (set.empty()) return s;
  std::array<double, kNumCeps> sum{}, sq{};
  const double n = static_cast<double>(set.size() * kFeatureRows);
  for (const auto& item : set.items)
    for (std::size_t r = 0; r < kFeatureRows; ++r)
      for (std::size_t c = 0; c < kNumCeps; ++c) sum[c] += item.features.coeffs[r * kNumCeps + c];
  for (std::size_t c = 0; c < kNumCeps; ++c) s.mean[c] = sum[c] / n;
  for (const auto& item : set.items)
    for (std::size_t r = 0; r < kFeatureRows; ++r)
      for (std::size_t c = 0; c < kNumCeps; ++c) {
        const double d = item.features.coeffs[r * kNumCeps + c] - s.mean[c];
        sq[c] += d * d;
      }
  for (std::size_t c = 0; c < kNumCeps; ++c) {
    const double sd = std::sqrt(sq[c] / n);
    s.stddev[c] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

void Standardizer::ApplyInto(std::span<const double> coeffs, std::span<double> out) const {
  if (coeffs.size() != kFeatureSize || out.size() != kFeatureSize)
    Fail(ErrorCode::kShapeMismatch, "expected a 31x20 feature matrix");
  for (std::size_t r = 0; r < kFeatureRows; ++r)
    for (std::size_t c = 0; c < kNumCeps; ++c)
      out[r * kNumCeps + c] = (coeffs[r * kNumCeps + c] - mean[c]) / stddev[c];
}

std::vector<double> Standardizer::Apply(std::span<const double> coeffs) const {
  std::vector<double> out(kFeatureSize);
  ApplyInto(coeffs, out);
  return out;
}

Workspace::Workspace()
    : a1(kConv1.size()),
      p1(kPool1.size()),
      a2(kConv2.size()),
      p2(kPool2.size()),
      a3(kConv3.size()),
      p3(kPool3.size()),
      flat(kFlatten),
      hidden(kHidden),
      arg1(kPool1.size()),
      arg2(kPool2.size()),
      arg3(kPool3.size()),
      g_hidden(kHidden),
      g_flat(kFlatten),
      g_p3(kPool3.size()),
      g_a3(kConv3.size()),
      g_p2(kPool2.size()),
      g_a2(kConv2.size()),
      g_p1(kPool1.size()),
      g_a1(kConv1.size()) {}

CnnDetector::CnnDetector() : params_(kLayout.total, 0.0) {}

CnnDetector CnnDetector::HeUniform(std::uint64_t seed) {
  CnnDetector m;
  Rng rng(DeriveSeed(seed, "init"));
  auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) m.params_[offset + i] = rng.Uniform(-limit, limit);
  };
  fill(kLayout.w1, kLayout.b1 - kLayout.w1, kKernel * kKernel * kInput.c);
  fill(kLayout.w2, kLayout.b2 - kLayout.w2, kKernel * kKernel * kPool1.c);
  fill(kLayout.w3, kLayout.b3 - kLayout.w3, kKernel * kKernel * kPool2.c);
  fill(kLayout.d1, kLayout.bd1 - kLayout.d1, kFlatten);
  fill(kLayout.d2, kLayout.bd2 - kLayout.d2, kHidden);
  return m;
}

double CnnDetector::Logit(std::span<const double> input, Workspace& ws) const {
  if (input.size() != kFeatureSize) Fail(ErrorCode::kShapeMismatch, "expected 620 input values");
  const double* p = params_.data();
  ConvForward(input.data(), kInput, p + kLayout.w1, p + kLayout.b1, ws.a1.data(), kConv1);
  PoolForward(ws.a1.data(), kConv1, kPool1H, kPool1W, ws.p1.data(), ws.arg1.data(), kPool1);
  ConvForward(ws.p1.data(), kPool1, p + kLayout.w2, p + kLayout.b2, ws.a2.data(), kConv2);
  PoolForward(ws.a2.data(), kConv2, kPool2H, kPool2W, ws.p2.data(), ws.arg2.data(), kPool2);
  ConvForward(ws.p2.data(), kPool2, p + kLayout.w3, p + kLayout.b3, ws.a3.data(), kConv3);
  PoolForward(ws.a3.data(), kConv3, kPool3H, kPool3W, ws.p3.data(), ws.arg3.data(), kPool3);
  Flatten(ws.p3.data(), ws.flat.data());
  const double* d1 = p + kLayout.d1;
  double logit = p[kLayout.bd2];
  for (std::size_t j = 0; j < kHidden; ++j) {
    const double* row = d1 + j * kFlatten;
    const double z = p[kLayout.bd1 + j] + Dot(row, ws.flat.data(), kFlatten);
    ws.hidden[j] = std::max(z, 0.0);
    logit += p[kLayout.d2 + j] * ws.hidden[j];
  }
  return logit;
}

double CnnDetector::Probability(std::span<const double> input, Workspace& ws) const {
  return Sigmoid(Logit(input, ws));
}

double CnnDetector::Probability(std::span<const double> input) const {
  Workspace ws;
  return Probability(input, ws);
}

double CnnDetector::Score(const FeatureMatrix& features) const {
  return Probability(standardizer_.Apply(features.coeffs));
}

double CnnDetector::LossAndGradient(std::span<const double> input, int label, std::span<double> grad,
                                    Workspace& ws) const {
  if (grad.size() != kLayout.total) Fail(ErrorCode::kShapeMismatch, "gradient buffer has the wrong size");
  const double prob = Sigmoid(Logit(input, ws));
  const double loss = BceLoss(prob, label);
  // dL/dlogit = dL/dp * p(1-p) = p - y inside the clamp, zero outside it.
  const bool clamped = prob < kProbClamp || prob > 1.0 - kProbClamp;
  const double g = clamped ? 0.0 : prob - static_cast<double>(label);
  if (g == 0.0) return loss;

  const double* p = params_.data();
  double* gp = grad.data();
  gp[kLayout.bd2] += g;
  for (std::size_t j = 0; j < kHidden; ++j) {
    gp[kLayout.d2 + j] += g * ws.hidden[j];
    ws.g_hidden[j] = ws.hidden[j] > 0.0 ? g * p[kLayout.d2 + j] : 0.0;
  }
  std::fill(ws.g_flat.begin(), ws.g_flat.end(), 0.0);
  for (std::size_t j = 0; j < kHidden; ++j) {
    const double gj = ws.g_hidden[j];
    if (gj == 0.0) continue;
    gp[kLayout.bd1 + j] += gj;
    double* grow = gp + kLayout.d1 + j * kFlatten;
    const double* row = p + kLayout.d1 + j * kFlatten;
    for (std::size_t i = 0; i < kFlatten; ++i) {
      grow[i] += gj * ws.flat[i];
      ws.g_flat[i] += gj * row[i];
    }
  }
  Unflatten(ws.g_flat.data(), ws.g_p3.data());
  PoolBackwardRelu(ws.g_p3.data(), ws.arg3.data(), kPool3.size(), ws.a3.data(), ws.g_a3.data(), kConv3.size());
  ConvBackward(ws.p2.data(), kPool2, p + kLayout.w3, ws.g_a3.data(), kConv3, gp + kLayout.w3, gp + kLayout.b3,
               ws.g_p2.data());
  PoolBackwardRelu(ws.g_p2.data(), ws.arg2.data(), kPool2.size(), ws.a2.data(), ws.g_a2.data(), kConv2.size());
  ConvBackward(ws.p1.data(), kPool1, p + kLayout.w2, ws.g_a2.data(), kConv2, gp + kLayout.w2, gp + kLayout.b2,
               ws.g_p1.data());
  PoolBackwardRelu(ws.g_p1.data(), ws.arg1.data(), kPool1.size(), ws.a1.data(), ws.g_a1.data(), kConv1.size());
  ConvBackward(input.data(), kInput, p + kLayout.w1, ws.g_a1.data(), kConv1, gp + kLayout.w1, gp + kLayout.b1,
               nullptr);
  return loss;
}

double MeanLossAndGradient(const CnnDetector& model, std::span<const double> inputs, std::span<const int> labels,
                           std::span<const std::size_t> indices, std::span<double> grad, std::size_t threads) {
  if (indices.empty()) Fail(ErrorCode::kEmptySet, "empty batch");
  if (grad.size() != kLayout.total) Fail(ErrorCode::kShapeMismatch, "gradient buffer has the wrong size");
  const std::size_t n = indices.size();
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  auto input = [&](std::size_t i) { return inputs.subspan(indices[i] * kFeatureSize, kFeatureSize); };
  if (workers == 1) {
    // Streaming form of the ordered reduction below; bitwise identical.
    thread_local Workspace ws;
    thread_local std::vector<double> local;
    local.resize(kLayout.total);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(local.begin(), local.end(), 0.0);
      loss += model.LossAndGradient(input(i), labels[indices[i]], local, ws);
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += local[k];
    }
  } else {
    std::vector<Workspace> spaces(workers);
    std::vector<std::vector<double>> per_example(n, std::vector<double>(kLayout.total, 0.0));
    std::vector<double> losses(n);
    ParallelFor(n, workers, [&](std::size_t i, std::size_t worker) {
      losses[i] = model.LossAndGradient(input(i), labels[indices[i]], per_example[i], spaces[worker]);
    });
    for (std::size_t i = 0; i < n; ++i) {
      loss += losses[i];
      const auto& g = per_example[i];
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& v : grad) v *= inv;
  return loss * inv;
}

double MeanLoss(const CnnDetector& model, std::span<const double> inputs, std::span<const int> labels) {
  if (labels.empty()) Fail(ErrorCode::kEmptySet, "empty evaluation set");
  Workspace ws;
  double loss = 0.0;
  for (std::size_t e = 0; e < labels.size(); ++e)
    loss += BceLoss(model.Probability(inputs.subspan(e * kFeatureSize, kFeatureSize), ws), labels[e]);
  return loss / static_cast<double>(labels.size());
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0) || !(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1) || !(epsilon > 0))
    Fail(ErrorCode::kConfig, "optimizer settings must be positive (betas in (0,1))");
  if (batch_size == 0 || max_epochs == 0 || patience == 0)
    Fail(ErrorCode::kConfig, "batch size, epochs and patience must be positive");
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"optimizer", "adam"},   {"learning_rate", learning_rate}, {"beta1", beta1},
          {"beta2", beta2},        {"epsilon", epsilon},             {"batch_size", batch_size},
          {"max_epochs", max_epochs}, {"patience", patience},        {"seed", seed},
          {"init", "he_uniform"},  {"loss", "bce"}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) { return FromJson(j, TrainConfig{}); }

TrainConfig TrainConfig::FromJson(const nlohmann::json& j, const TrainConfig& base) {
  if (!j.is_object()) Fail(ErrorCode::kConfig, "train config must be a JSON object");
  TrainConfig c = base;
  try {
    if (j.contains("optimizer") && j.at("optimizer") != "adam")
      Fail(ErrorCode::kConfig, "only the adam optimizer is supported");
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("bad train config: ") + e.what());
  }
  c.Validate();
  return c;
}

nlohmann::json TrainHistory::ToJson() const {
  nlohmann::json e = nlohmann::json::array();
  for (const auto& r : epochs) e.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss}});
  return {{"epochs", e}, {"best_epoch", best_epoch}, {"best_val_loss", best_val_loss}, {"early_stopped", early_stopped}};
}

namespace {

struct Prepared {
  std::vector<double> inputs;
  std::vector<int> labels;
};

Prepared Prepare(const dataset::LabeledFeatureSet& set, const Standardizer& s) {
  Prepared p;
  p.inputs.resize(set.size() * kFeatureSize);
  p.labels.resize(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& item = set.items[i];
    if (item.label != 0 && item.label != 1) Fail(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    s.ApplyInto(item.features.coeffs, std::span<double>(p.inputs.data() + i * kFeatureSize, kFeatureSize));
    p.labels[i] = item.label;
  }
  return p;
}

}  // namespace

TrainResult Train(const dataset::LabeledFeatureSet& train_set, const dataset::LabeledFeatureSet& val_set,
                  const TrainConfig& config) {
  config.Validate();
  if (train_set.empty()) Fail(ErrorCode::kEmptySet, "training set is empty");
  if (val_set.empty()) Fail(ErrorCode::kEmptySet, "validation set is empty");

  TrainResult result{CnnDetector::HeUniform(config.seed), {}};
  CnnDetector& model = result.model;
  model.set_feature(train_set.items.front().features.name);
  model.set_standardizer(Standardizer::Fit(train_set));
  const Prepared train = Prepare(train_set, model.standardizer());
  const Prepared val = Prepare(val_set, model.standardizer());

  Rng shuffle_rng(DeriveSeed(config.seed, "shuffle"));
  std::vector<std::size_t> order(train.labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t n_params = kLayout.total;
  std::vector<double> grad(n_params), m(n_params, 0.0), v(n_params, 0.0);
  std::vector<double> best_params(model.params().begin(), model.params().end());
  double best_val = MeanLoss(model, val.inputs, val.labels);
  auto& history = result.history;
  history.best_epoch = 0;
  history.best_val_loss = best_val;

  std::uint64_t step = 0;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.Shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      epoch_loss += MeanLossAndGradient(model, train.inputs, train.labels, batch, grad, config.threads) *
                    static_cast<double>(batch.size());
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      auto params = model.params();
      for (std::size_t k = 0; k < n_params; ++k) {
        m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad[k];
        v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad[k] * grad[k];
        params[k] -= config.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config.epsilon);
      }
    }
    const double val_loss = MeanLoss(model, val.inputs, val.labels);
    history.epochs.push_back({epoch, epoch_loss / static_cast<double>(order.size()), val_loss});
    if (val_loss < best_val) {
      best_val = val_loss;
      history.best_epoch = epoch;
      history.best_val_loss = val_loss;
      std::copy(model.params().begin(), model.params().end(), best_params.begin());
      stale = 0;
    } else if (++stale >= config.patience) {
      history.early_stopped = true;
      break;
    }
  }
  std::copy(best_params.begin(), best_params.end(), model.params().begin());
  return result;
}

std::vector<ScoredLabel> PredictScores(const CnnDetector& model, const dataset::LabeledFeatureSet& set) {
  std::vector<ScoredLabel> out;
  out.reserve(set.size());
  Workspace ws;
  std::vector<double> input(kFeatureSize);
  for (const auto& item : set.items) {
    model.standardizer().ApplyInto(item.features.coeffs, input);
    out.push_back({model.Probability(input, ws), item.label});
  }
  return out;
}

namespace {

constexpr char kCkptMagic[8] = {'A', 'D', 'V', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCkptVersion = 1;

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void PutF64(std::string& out, double v) { PutU64(out, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
 public:
  ByteReader(std::string_view b, const std::string& origin) : b_(b), origin_(origin) {}
  std::string_view Take(std::size_t n) {
    if (pos_ + n > b_.size()) Fail(ErrorCode::kParse, origin_ + ": truncated checkpoint");
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t U(int width) {
    auto s = Take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = width - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[static_cast<std::size_t>(i)]);
    return v;
  }
  double F() { return std::bit_cast<double>(U(8)); }
  bool AtEnd() const { return pos_ == b_.size(); }

 private:
  std::string_view b_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string EncodeCheckpoint(const CnnDetector& model, const TrainConfig& config) {
  std::string out(kCkptMagic, 8);
  PutU32(out, kCkptVersion);
  const auto arch = Sha256Of(ArchitectureDescription());
  out.append(reinterpret_cast<const char*>(arch.data()), arch.size());
  const auto name = ToString(model.feature());
  PutU32(out, static_cast<std::uint32_t>(name.size()));
  out.append(name);
  for (double m : model.standardizer().mean) PutF64(out, m);
  for (double s : model.standardizer().stddev) PutF64(out, s);
  const std::string cfg = config.ToJson().dump();
  PutU32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  PutU64(out, config.seed);
  PutU64(out, model.params().size());
  for (double p : model.params()) PutF64(out, p);
  return out;
}

Checkpoint DecodeCheckpoint(std::string_view bytes, const std::string& origin) {
  ByteReader in(bytes, origin);
  if (in.Take(8) != std::string_view(kCkptMagic, 8)) Fail(ErrorCode::kParse, origin + ": not a checkpoint");
  if (in.U(4) != kCkptVersion) Fail(ErrorCode::kParse, origin + ": unsupported checkpoint version");
  Digest arch{};
  const auto raw = in.Take(arch.size());
  std::copy(raw.begin(), raw.end(), reinterpret_cast<char*>(arch.data()));
  Checkpoint ck;
  ck.architecture_hash = ToHex(arch);
  if (ck.architecture_hash != ArchitectureHash())
    Fail(ErrorCode::kShapeMismatch, origin + ": checkpoint was written for a different architecture");
  const auto name = ParseFeatureName(in.Take(in.U(4)));
  if (!name) Fail(ErrorCode::kParse, origin + ": unknown feature name");
  ck.model.set_feature(*name);
  Standardizer s;
  for (auto& m : s.mean) m = in.F();
  for (auto& d : s.stddev) d = in.F();
  ck.model.set_standardizer(s);
  const auto cfg_text = in.Take(in.U(4));
  try {
    ck.config = TrainConfig::FromJson(nlohmann::json::parse(cfg_text));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, origin + ": bad config block: " + e.what());
  }
  ck.config.seed = in.U(8);
  if (in.U(8) != kLayout.total) Fail(ErrorCode::kShapeMismatch, origin + ": wrong parameter count");
  for (auto& p : ck.model.params()) p = in.F();
  if (!in.AtEnd()) Fail(ErrorCode::kParse, origin + ": trailing bytes in checkpoint");
  return ck;
}

void SaveCheckpoint(const std::filesystem::path& path, const CnnDetector& model, const TrainConfig& config) {
  csv::WriteFileAtomic(path, EncodeCheckpoint(model, config));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) Fail(ErrorCode::kMissingCache, "no checkpoint at " + path.string());
  return DecodeCheckpoint(csv::ReadFile(path), path.string());
}

}  // namespace advdet::model
