//
// Copyright 2026 The dputil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPUTIL_METRICS_H_
#define DPUTIL_METRICS_H_

#include <cstddef>
#include <span>

#include "absl/status/statusor.h"
#include "dputil/attack.h"

namespace dputil {

struct MetricRow {
  double acc_nonprivate = 0.0;
  double acc_private = 0.0;
  double utility_loss = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double privacy_leakage = 0.0;
  size_t true_revealed = 0;
  size_t n_members = 0;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

// 1 - acc_private / acc_nonprivate. Negative when the private model is more
// accurate; not clamped.
absl::StatusOr<double> UtilityLoss(double acc_private, double acc_nonprivate);

// TPR - FPR of the attack, in [-1, 1].
absl::StatusOr<double> PrivacyLeakage(const AttackOutcome& outcome);

// Members the attack correctly flagged (true positives).
size_t TrueRevealed(const AttackOutcome& outcome);

absl::StatusOr<MetricRow> ComputeMetrics(double acc_private,
                                         double acc_nonprivate,
                                         const AttackOutcome& outcome);

struct MeanStd {
  double mean = 0.0;
  // Sample standard deviation; 0 for a single value.
  double stddev = 0.0;
};
MeanStd Summarize(std::span<const double> values);

}  // namespace dputil

#endif  // DPUTIL_METRICS_H_
