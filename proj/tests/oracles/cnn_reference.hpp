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

// Loop-based reference for the detector network, written against the
// documented parameter layout only: conv weights [kh][kw][in][out], dense
// weights [out][in], flatten in (C, H, W) order. Activations are stored CHW,
// unlike the production code.
//
// Finite differences perturb one parameter at a time and re-evaluate only
// the affected part of the network. Perturbed activations are carried as
// exact differences from the base pass, so a central difference is limited
// by the loss curvature rather than by cancellation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace oracle {

struct RefLayout {
  static constexpr std::size_t kH0 = 31, kW0 = 20;
  static constexpr std::size_t kC1 = 64, kH1 = 30, kW1 = 19;  // conv1
  static constexpr std::size_t kP1H = 30, kP1W = 6;           // pool 1x3
  static constexpr std::size_t kC2 = 64, kH2 = 29, kW2 = 5;   // conv2 (pool 1x1)
  static constexpr std::size_t kC3 = 32, kH3 = 28, kW3 = 4;   // conv3
  static constexpr std::size_t kP3H = 14, kP3W = 2;           // pool 2x2
  static constexpr std::size_t kFlat = kC3 * kP3H * kP3W;     // 896
  static constexpr std::size_t kHid = 128;

  static constexpr std::size_t w1 = 0;
  static constexpr std::size_t b1 = w1 + 4 * 1 * kC1;
  static constexpr std::size_t w2 = b1 + kC1;
  static constexpr std::size_t b2 = w2 + 4 * kC1 * kC2;
  static constexpr std::size_t w3 = b2 + kC2;
  static constexpr std::size_t b3 = w3 + 4 * kC2 * kC3;
  static constexpr std::size_t d1 = b3 + kC3;
  static constexpr std::size_t bd1 = d1 + kHid * kFlat;
  static constexpr std::size_t d2 = bd1 + kHid;
  static constexpr std::size_t bd2 = d2 + kHid;
  static constexpr std::size_t total = bd2 + 1;

  static std::size_t W1(std::size_t kh, std::size_t kw, std::size_t co) { return w1 + (kh * 2 + kw) * kC1 + co; }
  static std::size_t W2(std::size_t kh, std::size_t kw, std::size_t ci, std::size_t co) {
    return w2 + ((kh * 2 + kw) * kC1 + ci) * kC2 + co;
  }
  static std::size_t W3(std::size_t kh, std::size_t kw, std::size_t ci, std::size_t co) {
    return w3 + ((kh * 2 + kw) * kC2 + ci) * kC3 + co;
  }
};

// BCE on a logit, accurate for moderate logits (no clamping active).
inline double LogitLoss(double logit, int y) {
  const double softplus = std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  return softplus - y * logit;
}

inline double Sigm(double z) { return z >= 0 ? 1 / (1 + std::exp(-z)) : std::exp(z) / (1 + std::exp(z)); }

// loss(l0 + a) - loss(l0 + b) without cancellation.
inline double LossDifference(double l0, double a, double b, int y) {
  const double sp = std::log1p(Sigm(l0 + b) * std::expm1(a - b));
  return sp - y * (a - b);
}

class ReferenceNet {
 public:
  using L = RefLayout;

  struct Trace {
    std::vector<double> in;      // [31][20]
    std::vector<double> pre1;    // [64][30][19]
    std::vector<double> p1;      // [64][30][6]
    std::vector<double> pre2;    // [64][29][5]
    std::vector<double> p2;      // [64][29][5] after relu and the 1x1 pool
    std::vector<double> pre3;    // [32][28][4]
    std::vector<double> p3;      // [32][14][2]
    std::vector<double> z;       // [128]
    double logit = 0.0;
  };

  explicit ReferenceNet(std::span<const double> params) : w_(params.begin(), params.end()) {
    d1t_.resize(L::kFlat * L::kHid);
    for (std::size_t j = 0; j < L::kHid; ++j)
      for (std::size_t i = 0; i < L::kFlat; ++i) d1t_[i * L::kHid + j] = w_[L::d1 + j * L::kFlat + i];
  }

  static double Relu(double v) { return v > 0 ? v : 0.0; }

  Trace Forward(std::span<const double> input) const {
    Trace t;
    t.in.assign(input.begin(), input.end());
    t.pre1.assign(L::kC1 * L::kH1 * L::kW1, 0.0);
    for (std::size_t c = 0; c < L::kC1; ++c)
      for (std::size_t y = 0; y < L::kH1; ++y)
        for (std::size_t x = 0; x < L::kW1; ++x) {
          double s = w_[L::b1 + c];
          for (std::size_t kh = 0; kh < 2; ++kh)
            for (std::size_t kw = 0; kw < 2; ++kw) s += t.in[(y + kh) * L::kW0 + x + kw] * w_[L::W1(kh, kw, c)];
          t.pre1[(c * L::kH1 + y) * L::kW1 + x] = s;
        }
    t.p1.assign(L::kC1 * L::kP1H * L::kP1W, 0.0);
    for (std::size_t c = 0; c < L::kC1; ++c) PoolChannel1(&t.pre1[c * L::kH1 * L::kW1], &t.p1[c * L::kP1H * L::kP1W]);
    t.pre2.assign(L::kC2 * L::kH2 * L::kW2, 0.0);
    t.p2.assign(L::kC2 * L::kH2 * L::kW2, 0.0);
    for (std::size_t c = 0; c < L::kC2; ++c)
      for (std::size_t y = 0; y < L::kH2; ++y)
        for (std::size_t x = 0; x < L::kW2; ++x) {
          double s = w_[L::b2 + c];
          for (std::size_t ci = 0; ci < L::kC1; ++ci)
            for (std::size_t kh = 0; kh < 2; ++kh)
              for (std::size_t kw = 0; kw < 2; ++kw)
                s += t.p1[(ci * L::kP1H + y + kh) * L::kP1W + x + kw] * w_[L::W2(kh, kw, ci, c)];
          const std::size_t o = (c * L::kH2 + y) * L::kW2 + x;
          t.pre2[o] = s;
          t.p2[o] = Relu(s);
        }
    t.pre3 = Conv3(t.p2);
    t.p3.assign(L::kFlat, 0.0);
    for (std::size_t c = 0; c < L::kC3; ++c) PoolChannel3(&t.pre3[c * L::kH3 * L::kW3], &t.p3[c * L::kP3H * L::kP3W]);
    t.z.assign(L::kHid, 0.0);
    t.logit = w_[L::bd2];
    for (std::size_t j = 0; j < L::kHid; ++j) {
      double s = w_[L::bd1 + j];
      for (std::size_t i = 0; i < L::kFlat; ++i) s += w_[L::d1 + j * L::kFlat + i] * t.p3[i];
      t.z[j] = s;
      t.logit += w_[L::d2 + j] * Relu(s);
    }
    return t;
  }

  // Change in the logit when parameter `p` moves by `h`. Sets *kink when a
  // ReLU or a max-pool selection flips on the way.
  double LogitDelta(const Trace& t, std::size_t p, double h, bool* kink) const {
    *kink = false;
    if (p == L::bd2) return h;
    if (p >= L::d2) {
      const std::size_t j = p - L::d2;
      return h * Relu(t.z[j]);
    }
    if (p >= L::bd1) {
      std::vector<double> dz(L::kHid, 0.0);
      dz[p - L::bd1] = h;
      return FromZ(t, dz, kink);
    }
    if (p >= L::d1) {
      const std::size_t j = (p - L::d1) / L::kFlat, i = (p - L::d1) % L::kFlat;
      std::vector<double> dz(L::kHid, 0.0);
      dz[j] = h * t.p3[i];
      return FromZ(t, dz, kink);
    }
    if (p >= L::w3) {
      std::size_t co, ci = 0, kh = 0, kw = 0;
      const bool bias = p >= L::b3;
      if (bias) {
        co = p - L::b3;
      } else {
        const std::size_t r = p - L::w3;
        co = r % L::kC3;
        ci = (r / L::kC3) % L::kC2;
        kw = (r / (L::kC3 * L::kC2)) % 2;
        kh = r / (L::kC3 * L::kC2 * 2);
      }
      std::vector<double> d3(L::kC3 * L::kH3 * L::kW3, 0.0);
      for (std::size_t y = 0; y < L::kH3; ++y)
        for (std::size_t x = 0; x < L::kW3; ++x)
          d3[(co * L::kH3 + y) * L::kW3 + x] = bias ? h : h * t.p2[(ci * L::kH2 + y + kh) * L::kW2 + x + kw];
      return FromPre3(t, d3, co, co + 1, kink);
    }
    if (p >= L::w2) {
      std::size_t co, ci = 0, kh = 0, kw = 0;
      const bool bias = p >= L::b2;
      if (bias) {
        co = p - L::b2;
      } else {
        const std::size_t r = p - L::w2;
        co = r % L::kC2;
        ci = (r / L::kC2) % L::kC1;
        kw = (r / (L::kC2 * L::kC1)) % 2;
        kh = r / (L::kC2 * L::kC1 * 2);
      }
      std::vector<double> dpre(L::kH2 * L::kW2);
      for (std::size_t y = 0; y < L::kH2; ++y)
        for (std::size_t x = 0; x < L::kW2; ++x)
          dpre[y * L::kW2 + x] = bias ? h : h * t.p1[(ci * L::kP1H + y + kh) * L::kP1W + x + kw];
      std::vector<double> dp2(L::kH2 * L::kW2);
      for (std::size_t k = 0; k < dp2.size(); ++k)
        dp2[k] = ReluDelta(t.pre2[co * L::kH2 * L::kW2 + k], dpre[k], kink);
      return FromP2Channel(t, co, dp2, kink);
    }
    // conv1
    std::size_t co, kh = 0, kw = 0;
    const bool bias = p >= L::b1;
    if (bias) {
      co = p - L::b1;
    } else {
      co = (p - L::w1) % L::kC1;
      kw = ((p - L::w1) / L::kC1) % 2;
      kh = (p - L::w1) / (L::kC1 * 2);
    }
    std::vector<double> dpre(L::kH1 * L::kW1);
    for (std::size_t y = 0; y < L::kH1; ++y)
      for (std::size_t x = 0; x < L::kW1; ++x) dpre[y * L::kW1 + x] = bias ? h : h * t.in[(y + kh) * L::kW0 + x + kw];
    // relu + 1x3 pool on channel co
    std::vector<double> dp1(L::kP1H * L::kP1W, 0.0);
    const double* pre = &t.pre1[co * L::kH1 * L::kW1];
    for (std::size_t y = 0; y < L::kP1H; ++y)
      for (std::size_t x = 0; x < L::kP1W; ++x) {
        std::array<double, 3> base, delta;
        for (std::size_t s = 0; s < 3; ++s) {
          const std::size_t k = y * L::kW1 + x * 3 + s;
          base[s] = Relu(pre[k]);
          delta[s] = ReluDelta(pre[k], dpre[k], kink);
        }
        dp1[y * L::kP1W + x] = MaxDelta(base, delta, kink);
      }
    // conv2, every output channel
    std::vector<double> dp2all(L::kC2 * L::kH2 * L::kW2, 0.0);
    for (std::size_t c2 = 0; c2 < L::kC2; ++c2)
      for (std::size_t y = 0; y < L::kH2; ++y)
        for (std::size_t x = 0; x < L::kW2; ++x) {
          double s = 0.0;
          for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b) s += dp1[(y + a) * L::kP1W + x + b] * w_[L::W2(a, b, co, c2)];
          const std::size_t o = (c2 * L::kH2 + y) * L::kW2 + x;
          dp2all[o] = ReluDelta(t.pre2[o], s, kink);
        }
    // conv3 on the perturbation (linear), then the shared tail
    std::vector<double> d3(L::kC3 * L::kH3 * L::kW3, 0.0);
    for (std::size_t c2 = 0; c2 < L::kC2; ++c2)
      AddConv3Channel(c2, &dp2all[c2 * L::kH2 * L::kW2], d3);
    return FromPre3(t, d3, 0, L::kC3, kink);
  }

  // Mean-loss central difference for every parameter over a batch. Steps
  // shrink by 10x (down to `min_h`) while a kink lies inside the interval.
  struct FdResult {
    std::vector<double> grad;
    std::size_t kinks_resolved = 0;
    std::size_t kinks_unresolved = 0;
  };

  FdResult FiniteDifference(std::span<const double> inputs, std::span<const int> labels, double h,
                            double min_h = 1e-9) const {
    const std::size_t n = labels.size();
    std::vector<Trace> traces;
    for (std::size_t e = 0; e < n; ++e) traces.push_back(Forward(inputs.subspan(e * 620, 620)));
    FdResult r;
    r.grad.assign(L::total, 0.0);
    for (std::size_t p = 0; p < L::total; ++p) {
      double step = h;
      for (;;) {
        bool any_kink = false;
        double sum = 0.0;
        for (std::size_t e = 0; e < n; ++e) {
          bool k1 = false, k2 = false;
          const double up = LogitDelta(traces[e], p, step, &k1);
          const double down = LogitDelta(traces[e], p, -step, &k2);
          any_kink = any_kink || k1 || k2;
          sum += LossDifference(traces[e].logit, up, down, labels[e]) / (2 * step);
        }
        if (!any_kink || step / 10 < min_h) {
          if (any_kink) ++r.kinks_unresolved;
          if (step != h && !any_kink) ++r.kinks_resolved;
          r.grad[p] = sum / static_cast<double>(n);
          break;
        }
        step /= 10;
      }
    }
    return r;
  }

 private:
  using L_ = RefLayout;

  static void PoolChannel1(const double* pre, double* out) {
    for (std::size_t y = 0; y < L_::kP1H; ++y)
      for (std::size_t x = 0; x < L_::kP1W; ++x) {
        double m = Relu(pre[y * L_::kW1 + x * 3]);
        for (std::size_t s = 1; s < 3; ++s) m = std::max(m, Relu(pre[y * L_::kW1 + x * 3 + s]));
        out[y * L_::kP1W + x] = m;
      }
  }

  static void PoolChannel3(const double* pre, double* out) {
    for (std::size_t y = 0; y < L_::kP3H; ++y)
      for (std::size_t x = 0; x < L_::kP3W; ++x) {
        double m = 0.0;
        bool first = true;
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 2; ++b) {
            const double v = Relu(pre[(2 * y + a) * L_::kW3 + 2 * x + b]);
            m = first ? v : std::max(m, v);
            first = false;
          }
        out[y * L_::kP3W + x] = m;
      }
  }

  std::vector<double> Conv3(const std::vector<double>& p2) const {
    std::vector<double> pre(L_::kC3 * L_::kH3 * L_::kW3, 0.0);
    for (std::size_t c = 0; c < L_::kC3; ++c)
      for (std::size_t k = 0; k < L_::kH3 * L_::kW3; ++k) pre[c * L_::kH3 * L_::kW3 + k] = w_[L_::b3 + c];
    for (std::size_t ci = 0; ci < L_::kC2; ++ci) AddConv3Channel(ci, &p2[ci * L_::kH2 * L_::kW2], pre);
    return pre;
  }

  // out[c3] += conv(in_channel ci -> c3) for every c3.
  void AddConv3Channel(std::size_t ci, const double* in, std::vector<double>& out) const {
    for (std::size_t c = 0; c < L_::kC3; ++c)
      for (std::size_t y = 0; y < L_::kH3; ++y)
        for (std::size_t x = 0; x < L_::kW3; ++x) {
          double s = 0.0;
          for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b) s += in[(y + a) * L_::kW2 + x + b] * w_[L_::W3(a, b, ci, c)];
          out[(c * L_::kH3 + y) * L_::kW3 + x] += s;
        }
  }

  // relu(pre + d) - relu(pre), exact when the sign does not change.
  static double ReluDelta(double pre, double d, bool* kink) {
    if (d == 0.0) return 0.0;
    const bool before = pre > 0, after = pre + d > 0;
    if (before != after) {
      *kink = true;
      return Relu(pre + d) - Relu(pre);
    }
    return before ? d : 0.0;
  }

  // max(base + delta) - max(base); exact when the winner does not change.
  template <std::size_t N>
  static double MaxDelta(const std::array<double, N>& base, const std::array<double, N>& delta, bool* kink) {
    std::size_t a = 0, b = 0;
    for (std::size_t i = 1; i < base.size(); ++i) {
      if (base[i] > base[a]) a = i;
      if (base[i] + delta[i] > base[b] + delta[b]) b = i;
    }
    if (a == b) return delta[a];
    // A tie among zeros that stay zero is not a kink.
    if (base[a] == base[b] && delta[a] == delta[b]) return delta[a];
    *kink = true;
    return (base[b] + delta[b]) - base[a];
  }

  double FromZ(const Trace& t, const std::vector<double>& dz, bool* kink) const {
    double dl = 0.0;
    for (std::size_t j = 0; j < L_::kHid; ++j)
      if (dz[j] != 0.0) dl += w_[L_::d2 + j] * ReluDelta(t.z[j], dz[j], kink);
    return dl;
  }

  double FromFlat(const Trace& t, const std::vector<double>& dflat, bool* kink) const {
    std::vector<double> dz(L_::kHid, 0.0);
    for (std::size_t i = 0; i < L_::kFlat; ++i) {
      if (dflat[i] == 0.0) continue;
      const double* col = &d1t_[i * L_::kHid];
      for (std::size_t j = 0; j < L_::kHid; ++j) dz[j] += dflat[i] * col[j];
    }
    return FromZ(t, dz, kink);
  }

  // d3 holds pre-activation changes for channels [c0, c1).
  double FromPre3(const Trace& t, const std::vector<double>& d3, std::size_t c0, std::size_t c1, bool* kink) const {
    std::vector<double> dflat(L_::kFlat, 0.0);
    for (std::size_t c = c0; c < c1; ++c)
      for (std::size_t y = 0; y < L_::kP3H; ++y)
        for (std::size_t x = 0; x < L_::kP3W; ++x) {
          std::array<double, 4> base, delta;
          for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b) {
              const std::size_t k = (c * L_::kH3 + 2 * y + a) * L_::kW3 + 2 * x + b;
              base[2 * a + b] = Relu(t.pre3[k]);
              delta[2 * a + b] = ReluDelta(t.pre3[k], d3[k], kink);
            }
          dflat[(c * L_::kP3H + y) * L_::kP3W + x] = MaxDelta(base, delta, kink);
        }
    return FromFlat(t, dflat, kink);
  }

  double FromP2Channel(const Trace& t, std::size_t c, const std::vector<double>& dp2, bool* kink) const {
    std::vector<double> d3(L_::kC3 * L_::kH3 * L_::kW3, 0.0);
    AddConv3Channel(c, dp2.data(), d3);
    return FromPre3(t, d3, 0, L_::kC3, kink);
  }

  std::vector<double> w_;
  std::vector<double> d1t_;  // dense1 weights transposed, [in][out]
};

}  // namespace oracle
