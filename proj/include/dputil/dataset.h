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

#ifndef DPUTIL_DATASET_H_
#define DPUTIL_DATASET_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "dputil/numkit.h"

namespace dputil {

struct FeatureBounds {
  double min = 0.0;
  double max = 0.0;
  // Value range, used as the per-feature sensitivity.
  double range() const { return max - min; }
  friend bool operator==(const FeatureBounds&, const FeatureBounds&) = default;
};

// Labeled numeric examples. Immutable once built; every feature lies inside
// its recorded bounds and every label is below class_count.
struct Dataset {
  std::string name;
  Matrix features;
  std::vector<int> labels;
  int class_count = 0;
  std::vector<FeatureBounds> feature_bounds;

  size_t size() const { return labels.size(); }
  size_t dim() const { return features.cols(); }

  // Rows at `indices`; bounds are recomputed from the selected rows, so a
  // training subset never carries test-set ranges.
  Dataset Subset(std::span<const size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Per-column observed (min, max).
std::vector<FeatureBounds> ObservedBounds(const Matrix& features);

absl::Status ValidateDataset(const Dataset& dataset);

// Header row required; every column other than `label_column` must parse as
// a finite real. Errors name the offending row (1-based, header is row 1) and
// column.
absl::StatusOr<Dataset> LoadCsv(const std::string& path,
                                const std::string& label_column,
                                int class_count);

absl::Status WriteCsv(const Dataset& dataset, const std::string& path,
                      const std::string& label_column = "label");

struct SyntheticSpec {
  size_t n = 1000;
  size_t d = 10;
  int class_count = 2;
  double class_separation = 4.0;
  uint64_t seed = 0;

  absl::Status Validate() const;
};

// Balanced Gaussian blobs with unit variance. Class k is centered at
// (separation / sqrt(2)) * e_k, so every pair of centers is exactly
// `class_separation` apart; this needs class_count <= d.
absl::StatusOr<Dataset> Synthesize(const SyntheticSpec& spec);

struct NormalizedDataset {
  Dataset dataset;
  // Factor applied to every row.
  double scale = 1.0;
};

// Scales all rows by 1 / max(1, max_i ||x_i||) so every row lies in the unit
// ball. Bounds are scaled with the rows.
NormalizedDataset NormalizeRowsToUnitBall(const Dataset& dataset);

struct SplitPlan {
  std::vector<size_t> target_train;
  std::vector<size_t> target_test;
  std::vector<size_t> shadow_pool;
  uint64_t seed = 0;

  friend bool operator==(const SplitPlan&, const SplitPlan&) = default;
};

inline constexpr size_t kMinSplittableSize = 8;

// Seeded shuffle, then floor(n/4) to target_train, floor(n/4) to target_test
// and the remainder to shadow_pool.
absl::StatusOr<SplitPlan> MakeSplit(const Dataset& dataset, uint64_t seed);

}  // namespace dputil

#endif  // DPUTIL_DATASET_H_
