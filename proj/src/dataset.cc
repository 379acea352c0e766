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

#include "dputil/dataset.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "dputil/status_macros.h"

namespace dputil {

std::vector<FeatureBounds> ObservedBounds(const Matrix& features) {
  std::vector<FeatureBounds> bounds(features.cols());
  for (size_t c = 0; c < features.cols(); ++c) {
    if (features.rows() == 0) continue;
    double lo = features(0, c);
    double hi = lo;
    for (size_t r = 1; r < features.rows(); ++r) {
      lo = std::min(lo, features(r, c));
      hi = std::max(hi, features(r, c));
    }
    bounds[c] = {lo, hi};
  }
  return bounds;
}

Dataset Dataset::Subset(std::span<const size_t> indices) const {
  Dataset out;
  out.name = name;
  out.class_count = class_count;
  out.features = features.SelectRows(indices);
  out.labels.reserve(indices.size());
  for (size_t i : indices) out.labels.push_back(labels[i]);
  out.feature_bounds = ObservedBounds(out.features);
  return out;
}

absl::Status ValidateDataset(const Dataset& dataset) {
  if (dataset.features.rows() != dataset.labels.size()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%d feature rows but %d labels",
                        dataset.features.rows(), dataset.labels.size()));
  }
  if (dataset.class_count < 2) {
    return absl::InvalidArgumentError("class_count must be at least 2");
  }
  if (dataset.feature_bounds.size() != dataset.dim()) {
    return absl::InvalidArgumentError("feature_bounds length != feature dim");
  }
  for (size_t r = 0; r < dataset.size(); ++r) {
    const int y = dataset.labels[r];
    if (y < 0 || y >= dataset.class_count) {
      return absl::InvalidArgumentError(
          absl::StrFormat("row %d: label %d outside [0, %d)", r, y,
                          dataset.class_count));
    }
    for (size_t c = 0; c < dataset.dim(); ++c) {
      const double v = dataset.features(r, c);
      if (!std::isfinite(v)) {
        return absl::InvalidArgumentError(
            absl::StrFormat("row %d column %d: non-finite value", r, c));
      }
      if (v < dataset.feature_bounds[c].min ||
          v > dataset.feature_bounds[c].max) {
        return absl::InvalidArgumentError(
            absl::StrFormat("row %d column %d: %g outside recorded bounds", r,
                            c, v));
      }
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<Dataset> LoadCsv(const std::string& path,
                                const std::string& label_column,
                                int class_count) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(absl::StrFormat("cannot open %s", path));
  }
  if (class_count < 2) {
    return absl::InvalidArgumentError("class_count must be at least 2");
  }
  std::string line;
  if (!std::getline(in, line)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%s: missing header row", path));
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = absl::StrSplit(line, ',');
  for (auto& h : header) h = std::string(absl::StripAsciiWhitespace(h));
  auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "%s: no column named '%s' in header", path, label_column));
  }
  const size_t label_index = label_it - header.begin();
  const size_t d = header.size() - 1;

  Vector values;
  std::vector<int> labels;
  size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (absl::StripAsciiWhitespace(line).empty()) continue;
    std::vector<absl::string_view> cells = absl::StrSplit(line, ',');
    if (cells.size() != header.size()) {
      return absl::InvalidArgumentError(
          absl::StrFormat("%s row %d: expected %d cells, found %d", path,
                          row_number, header.size(), cells.size()));
    }
    for (size_t c = 0; c < cells.size(); ++c) {
      const absl::string_view cell = absl::StripAsciiWhitespace(cells[c]);
      if (c == label_index) {
        int y = 0;
        if (!absl::SimpleAtoi(cell, &y)) {
          return absl::InvalidArgumentError(
              absl::StrFormat("%s row %d column '%s': label '%s' is not an "
                              "integer",
                              path, row_number, header[c], cell));
        }
        if (y < 0 || y >= class_count) {
          return absl::InvalidArgumentError(absl::StrFormat(
              "%s row %d column '%s': label %d outside [0, %d)", path,
              row_number, header[c], y, class_count));
        }
        labels.push_back(y);
      } else {
        double v = 0.0;
        if (!absl::SimpleAtod(cell, &v) || !std::isfinite(v)) {
          return absl::InvalidArgumentError(
              absl::StrFormat("%s row %d column '%s': cannot parse '%s' as a "
                              "finite real",
                              path, row_number, header[c], cell));
        }
        values.push_back(v);
      }
    }
  }
  Dataset out;
  out.name = std::filesystem::path(path).stem().string();
  out.class_count = class_count;
  ASSIGN_OR_RETURN(out.features,
                   Matrix::FromData(labels.size(), d, std::move(values)));
  out.labels = std::move(labels);
  out.feature_bounds = ObservedBounds(out.features);
  return out;
}

absl::Status WriteCsv(const Dataset& dataset, const std::string& path,
                      const std::string& label_column) {
  std::ofstream out(path);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrFormat("cannot write %s", path));
  }
  for (size_t c = 0; c < dataset.dim(); ++c) out << "x" << c << ",";
  out << label_column << "\n";
  for (size_t r = 0; r < dataset.size(); ++r) {
    for (size_t c = 0; c < dataset.dim(); ++c) {
      out << absl::StrFormat("%.17g,", dataset.features(r, c));
    }
    out << dataset.labels[r] << "\n";
  }
  if (!out) {
    return absl::DataLossError(absl::StrFormat("write to %s failed", path));
  }
  return absl::OkStatus();
}

absl::Status SyntheticSpec::Validate() const {
  if (class_count < 2) {
    return absl::InvalidArgumentError("class_count must be at least 2");
  }
  if (d == 0) return absl::InvalidArgumentError("d must be positive");
  if (static_cast<size_t>(class_count) > d) {
    return absl::InvalidArgumentError(
        "class_count must not exceed d (one center axis per class)");
  }
  if (!(class_separation >= 0) || !std::isfinite(class_separation)) {
    return absl::InvalidArgumentError("class_separation must be >= 0");
  }
  if (n < 8 * static_cast<size_t>(class_count)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("n=%d is below 8 * class_count", n));
  }
  return absl::OkStatus();
}

absl::StatusOr<Dataset> Synthesize(const SyntheticSpec& spec) {
  RETURN_IF_ERROR(spec.Validate());
  Rng rng = Rng::Derive(spec.seed, "synthesize");
  const double offset = spec.class_separation / std::sqrt(2.0);
  Dataset out;
  out.name = absl::StrFormat("synthetic-n%d-d%d-c%d-s%g", spec.n, spec.d,
                             spec.class_count, spec.class_separation);
  out.class_count = spec.class_count;
  out.features = Matrix(spec.n, spec.d);
  out.labels.resize(spec.n);
  for (size_t r = 0; r < spec.n; ++r) {
    const int y = static_cast<int>(r % spec.class_count);
    out.labels[r] = y;
    Vector noise = SampleGaussian(rng, 1.0, spec.d).value();
    for (size_t c = 0; c < spec.d; ++c) {
      out.features(r, c) = noise[c] + (c == static_cast<size_t>(y) ? offset : 0);
    }
  }
  out.feature_bounds = ObservedBounds(out.features);
  return out;
}

NormalizedDataset NormalizeRowsToUnitBall(const Dataset& dataset) {
  double max_norm = 0.0;
  for (size_t r = 0; r < dataset.size(); ++r) {
    max_norm = std::max(max_norm, L2Norm(dataset.features.row(r)));
  }
  NormalizedDataset out{dataset, 1.0};
  if (max_norm <= 1.0) return out;
  out.scale = 1.0 / max_norm;
  for (double& v : out.dataset.features.mutable_data()) v *= out.scale;
  // Scaling can round a row norm to just above 1; pull those rows back in.
  for (size_t r = 0; r < out.dataset.size(); ++r) {
    ClipToNorm(out.dataset.features.row(r), 1.0);
  }
  out.dataset.feature_bounds = ObservedBounds(out.dataset.features);
  return out;
}

absl::StatusOr<SplitPlan> MakeSplit(const Dataset& dataset, uint64_t seed) {
  const size_t n = dataset.size();
  if (n < kMinSplittableSize) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "dataset too small to split: n=%d, need at least %d", n,
        kMinSplittableSize));
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::Derive(seed, "split");
  Shuffle(order, rng);
  const size_t quarter = n / 4;
  SplitPlan plan;
  plan.seed = seed;
  plan.target_train.assign(order.begin(), order.begin() + quarter);
  plan.target_test.assign(order.begin() + quarter,
                          order.begin() + 2 * quarter);
  plan.shadow_pool.assign(order.begin() + 2 * quarter, order.end());
  return plan;
}

}  // namespace dputil
