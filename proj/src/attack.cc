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

#include "dputil/attack.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "absl/strings/str_format.h"
#include "dputil/status_macros.h"

namespace dputil {
namespace {

double Gini(size_t positives, size_t total) {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(positives) / static_cast<double>(total);
  return 2.0 * p * (1.0 - p);
}

int MajorityLabel(std::span<const int> y, std::span<const size_t> rows) {
  size_t positives = 0;
  for (size_t r : rows) positives += y[r] == 1;
  return 2 * positives > rows.size() ? 1 : 0;
}

}  // namespace

absl::StatusOr<ShadowEnsemble> TrainShadows(const Dataset& data,
                                            std::span<const size_t> pool,
                                            const ModelArch& arch,
                                            const TrainConfig& config,
                                            size_t count, uint64_t seed) {
  if (count == 0) {
    return absl::InvalidArgumentError("shadow count must be positive");
  }
  if (pool.size() < 4) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "configuration error: shadow pool of %d rows is too small (need 4)",
        pool.size()));
  }
  ShadowEnsemble ensemble;
  for (size_t s = 0; s < count; ++s) {
    std::vector<size_t> order(pool.begin(), pool.end());
    Rng rng = Rng::Derive(seed, absl::StrFormat("shadow/%d", s));
    Shuffle(order, rng);
    const size_t half = order.size() / 2;
    std::vector<size_t> train(order.begin(), order.begin() + half);
    std::vector<size_t> test(order.begin() + half, order.end());
    TrainConfig shadow_config = config;
    shadow_config.seed = rng.NextU64();
    ASSIGN_OR_RETURN(Model model,
                     Train(arch, data.Subset(train), shadow_config));
    ensemble.models.push_back(std::move(model));
    ensemble.train_indices.push_back(std::move(train));
    ensemble.test_indices.push_back(std::move(test));
  }
  return ensemble;
}

Vector AttackFeatures(std::span<const double> proba, int true_label) {
  Vector out(proba.begin(), proba.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  for (size_t k = 0; k < proba.size(); ++k) {
    out.push_back(static_cast<int>(k) == true_label ? 1.0 : 0.0);
  }
  return out;
}

absl::StatusOr<AttackSet> BuildAttackSet(const ShadowEnsemble& ensemble,
                                         const Dataset& data, uint64_t seed) {
  std::vector<Vector> members;
  std::vector<Vector> non_members;
  for (size_t s = 0; s < ensemble.models.size(); ++s) {
    const Model& model = ensemble.models[s];
    auto collect = [&](const std::vector<size_t>& indices,
                       std::vector<Vector>& sink) -> absl::Status {
      if (indices.empty()) return absl::OkStatus();
      const Dataset slice = data.Subset(indices);
      ASSIGN_OR_RETURN(Matrix proba, PredictProba(model, slice.features));
      for (size_t r = 0; r < proba.rows(); ++r) {
        sink.push_back(AttackFeatures(proba.row(r), slice.labels[r]));
      }
      return absl::OkStatus();
    };
    RETURN_IF_ERROR(collect(ensemble.train_indices[s], members));
    RETURN_IF_ERROR(collect(ensemble.test_indices[s], non_members));
  }
  Rng rng = Rng::Derive(seed, "attack-set/balance");
  auto downsample = [&rng](std::vector<Vector>& rows, size_t keep) {
    if (rows.size() <= keep) return;
    std::vector<size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    Shuffle(order, rng);
    order.resize(keep);
    std::sort(order.begin(), order.end());
    std::vector<Vector> kept;
    kept.reserve(keep);
    for (size_t i : order) kept.push_back(std::move(rows[i]));
    rows = std::move(kept);
  };
  const size_t keep = std::min(members.size(), non_members.size());
  downsample(members, keep);
  downsample(non_members, keep);

  std::vector<Vector> rows;
  AttackSet out;
  for (auto& m : members) {
    rows.push_back(std::move(m));
    out.labels.push_back(kMember);
  }
  for (auto& m : non_members) {
    rows.push_back(std::move(m));
    out.labels.push_back(kNonMember);
  }
  out.features = Matrix::FromRows(rows);
  return out;
}

DecisionTree DecisionTree::Fit(const Matrix& x, std::span<const int> y,
                               std::span<const size_t> rows, size_t max_depth,
                               size_t features_per_split, Rng& rng) {
  DecisionTree tree;
  tree.Grow(x, y, std::vector<size_t>(rows.begin(), rows.end()), 0, max_depth,
            features_per_split, rng);
  return tree;
}

int DecisionTree::Grow(const Matrix& x, std::span<const int> y,
                       std::vector<size_t> rows, size_t depth,
                       size_t max_depth, size_t features_per_split, Rng& rng) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  nodes_[index].label = MajorityLabel(y, rows);

  size_t positives = 0;
  for (size_t r : rows) positives += y[r] == 1;
  if (depth >= max_depth || rows.size() < 2 || positives == 0 ||
      positives == rows.size()) {
    return index;
  }

  const size_t p = x.cols();
  std::vector<size_t> candidates(p);
  std::iota(candidates.begin(), candidates.end(), 0);
  const size_t tries = std::min(features_per_split, p);
  // Partial Fisher-Yates: the first `tries` entries are a uniform subset.
  for (size_t i = 0; i < tries; ++i) {
    std::swap(candidates[i], candidates[i + rng.UniformIndex(p - i)]);
  }

  const double parent = Gini(positives, rows.size());
  double best_impurity = parent;
  int best_feature = -1;
  double best_threshold = 0.0;
  std::vector<size_t> sorted = rows;
  for (size_t t = 0; t < tries; ++t) {
    const size_t f = candidates[t];
    std::sort(sorted.begin(), sorted.end(), [&](size_t a, size_t b) {
      return x(a, f) < x(b, f);
    });
    size_t left_pos = 0;
    for (size_t i = 0; i + 1 < sorted.size(); ++i) {
      left_pos += y[sorted[i]] == 1;
      const double v = x(sorted[i], f);
      const double next = x(sorted[i + 1], f);
      if (v == next) continue;
      const size_t left_n = i + 1;
      const size_t right_n = sorted.size() - left_n;
      const double impurity =
          (static_cast<double>(left_n) * Gini(left_pos, left_n) +
           static_cast<double>(right_n) *
               Gini(positives - left_pos, right_n)) /
          static_cast<double>(sorted.size());
      if (impurity < best_impurity - 1e-15) {
        best_impurity = impurity;
        best_feature = static_cast<int>(f);
        best_threshold = v + 0.5 * (next - v);
        if (best_threshold >= next) best_threshold = v;
      }
    }
  }
  if (best_feature < 0) return index;

  std::vector<size_t> left_rows;
  std::vector<size_t> right_rows;
  for (size_t r : rows) {
    (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
  }
  rows.clear();
  rows.shrink_to_fit();
  const int left = Grow(x, y, std::move(left_rows), depth + 1, max_depth,
                        features_per_split, rng);
  const int right = Grow(x, y, std::move(right_rows), depth + 1, max_depth,
                         features_per_split, rng);
  nodes_[index].feature = best_feature;
  nodes_[index].threshold = best_threshold;
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

int DecisionTree::Predict(std::span<const double> x) const {
  int node = 0;
  while (nodes_[node].feature >= 0) {
    const Node& n = nodes_[node];
    node = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes_[node].label;
}

absl::StatusOr<ForestClassifier> ForestClassifier::Fit(
    const AttackSet& records, const ForestParams& params, uint64_t seed) {
  const size_t n = records.labels.size();
  if (n == 0 || records.features.rows() != n) {
    return absl::InvalidArgumentError("attack records are empty or ragged");
  }
  size_t members = 0;
  for (int y : records.labels) members += y == kMember;
  if (members == 0 || members == n) {
    return absl::FailedPreconditionError(
        "configuration error: attack training set has a single label");
  }
  if (params.trees == 0 || params.max_depth == 0) {
    return absl::InvalidArgumentError("forest needs trees >= 1, depth >= 1");
  }
  const size_t p = records.features.cols();
  const size_t tries =
      params.features_per_split > 0
          ? params.features_per_split
          : std::max<size_t>(1, static_cast<size_t>(
                                    std::floor(std::sqrt(static_cast<double>(p)))));
  ForestClassifier forest;
  for (size_t t = 0; t < params.trees; ++t) {
    Rng rng = Rng::Derive(seed, absl::StrFormat("tree/%d", t));
    std::vector<size_t> rows(n);
    if (params.bootstrap) {
      for (size_t& r : rows) r = rng.UniformIndex(n);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    forest.trees_.push_back(DecisionTree::Fit(records.features, records.labels,
                                              rows, params.max_depth, tries,
                                              rng));
  }
  return forest;
}

int ForestClassifier::Predict(std::span<const double> features) const {
  size_t member_votes = 0;
  for (const auto& tree : trees_) member_votes += tree.Predict(features) == 1;
  return 2 * member_votes > trees_.size() ? kMember : kNonMember;
}

double ForestClassifier::Accuracy(const AttackSet& records) const {
  if (records.labels.empty()) return 0.0;
  size_t correct = 0;
  for (size_t r = 0; r < records.labels.size(); ++r) {
    correct += Predict(records.features.row(r)) == records.labels[r];
  }
  return static_cast<double>(correct) /
         static_cast<double>(records.labels.size());
}

absl::StatusOr<AttackOutcome> EvaluateAttack(const AttackClassifier& attack,
                                             const PredictionApi& target,
                                             const Dataset& members,
                                             const Dataset& non_members) {
  if (members.size() != non_members.size()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "attack evaluation needs balanced sets, got %d members and %d "
        "non-members",
        members.size(), non_members.size()));
  }
  AttackOutcome out;
  ASSIGN_OR_RETURN(Matrix member_proba, target(members.features));
  ASSIGN_OR_RETURN(Matrix non_member_proba, target(non_members.features));
  for (size_t r = 0; r < members.size(); ++r) {
    const bool flagged =
        attack(AttackFeatures(member_proba.row(r), members.labels[r])) ==
        kMember;
    out.member_flags.push_back(flagged);
    (flagged ? out.tp : out.fn) += 1;
  }
  for (size_t r = 0; r < non_members.size(); ++r) {
    const bool flagged = attack(AttackFeatures(non_member_proba.row(r),
                                               non_members.labels[r])) ==
                         kMember;
    (flagged ? out.fp : out.tn) += 1;
  }
  return out;
}

absl::StatusOr<AttackOutcome> EvaluateAttack(const ForestClassifier& forest,
                                             const PredictionApi& target,
                                             const Dataset& members,
                                             const Dataset& non_members) {
  return EvaluateAttack(
      [&forest](std::span<const double> f) { return forest.Predict(f); },
      target, members, non_members);
}

}  // namespace dputil
