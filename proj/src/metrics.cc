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

#include "dputil/metrics.h"

#include <cmath>

#include "absl/strings/str_format.h"
#include "dputil/status_macros.h"

namespace dputil {

absl::StatusOr<double> UtilityLoss(double acc_private, double acc_nonprivate) {
  if (!(acc_nonprivate > 0)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "undefined metric: utility loss with non-private accuracy %g",
        acc_nonprivate));
  }
  return 1.0 - acc_private / acc_nonprivate;
}

absl::StatusOr<double> PrivacyLeakage(const AttackOutcome& outcome) {
  const size_t members = outcome.tp + outcome.fn;
  const size_t non_members = outcome.fp + outcome.tn;
  if (members == 0 || non_members == 0) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "undefined metric: privacy leakage with %d members and %d "
        "non-members",
        members, non_members));
  }
  return static_cast<double>(outcome.tp) / static_cast<double>(members) -
         static_cast<double>(outcome.fp) / static_cast<double>(non_members);
}

size_t TrueRevealed(const AttackOutcome& outcome) { return outcome.tp; }

absl::StatusOr<MetricRow> ComputeMetrics(double acc_private,
                                         double acc_nonprivate,
                                         const AttackOutcome& outcome) {
  MetricRow row;
  row.acc_private = acc_private;
  row.acc_nonprivate = acc_nonprivate;
  ASSIGN_OR_RETURN(row.utility_loss, UtilityLoss(acc_private, acc_nonprivate));
  ASSIGN_OR_RETURN(row.privacy_leakage, PrivacyLeakage(outcome));
  row.n_members = outcome.tp + outcome.fn;
  row.tpr = static_cast<double>(outcome.tp) / static_cast<double>(row.n_members);
  row.fpr = static_cast<double>(outcome.fp) /
            static_cast<double>(outcome.fp + outcome.tn);
  row.true_revealed = TrueRevealed(outcome);
  return row;
}

MeanStd Summarize(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace dputil
