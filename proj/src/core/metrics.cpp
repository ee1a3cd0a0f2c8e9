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

#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace advdet::metrics {

double Rocauc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) Fail(ErrorCode::kLengthMismatch, "scores and labels differ in length");
  std::size_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) Fail(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(y);
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) Fail(ErrorCode::kSingleClass, "ROC AUC needs both classes");
  for (double s : scores)
    if (std::isnan(s)) Fail(ErrorCode::kInvalidArgument, "NaN score");

  // Mann-Whitney: sum of positive ranks with tied groups sharing their mean rank.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) pos_rank_sum += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

Aggregate AggregateValues(std::span<const double> values) {
  if (values.empty()) Fail(ErrorCode::kEmptyInput, "nothing to aggregate");
  Aggregate a;
  a.count = values.size();
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(a.count);
  double ss = 0.0;
  for (double v : values) ss += (v - a.mean) * (v - a.mean);
  a.stddev = std::sqrt(ss / static_cast<double>(a.count));
  return a;
}

}  // namespace advdet::metrics
