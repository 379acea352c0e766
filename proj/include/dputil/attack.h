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

// Black-box membership inference with shadow models and a random-forest
// attack classifier.
//
// Shadow models mimic the target: same architecture, same training config,
// trained on data the attacker owns. Their outputs on their own training
// rows (members) and on held-out rows (non-members) become labeled attack
// records. The target is then queried only through a PredictionApi, so the
// attack never sees parameters.

#ifndef DPUTIL_ATTACK_H_
#define DPUTIL_ATTACK_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "dputil/dataset.h"
#include "dputil/learners.h"
#include "dputil/numkit.h"

namespace dputil {

inline constexpr int kMember = 1;
inline constexpr int kNonMember = 0;

struct ShadowEnsemble {
  std::vector<Model> models;
  // Row indices into the dataset the shadows were drawn from.
  std::vector<std::vector<size_t>> train_indices;
  std::vector<std::vector<size_t>> test_indices;
};

// Each shadow reshuffles the whole pool independently and takes the first
// floor(|pool| / 2) rows for training and the rest as its non-members.
absl::StatusOr<ShadowEnsemble> TrainShadows(const Dataset& data,
                                            std::span<const size_t> pool,
                                            const ModelArch& arch,
                                            const TrainConfig& config,
                                            size_t count, uint64_t seed);

// Attack feature vector: probabilities sorted descending, then the one-hot
// true label.
Vector AttackFeatures(std::span<const double> proba, int true_label);

struct AttackSet {
  Matrix features;
  std::vector<int> labels;  // kMember or kNonMember
};

// Member rows from each shadow's training half, non-member rows from its
// test half; the larger side is down-sampled (seeded) to the smaller.
absl::StatusOr<AttackSet> BuildAttackSet(const ShadowEnsemble& ensemble,
                                         const Dataset& data, uint64_t seed);

struct ForestParams {
  size_t trees = 50;
  size_t max_depth = 10;
  bool bootstrap = true;
  // Features tried per split; 0 means floor(sqrt(feature count)).
  size_t features_per_split = 0;
};

// CART tree with Gini impurity. Splits send x[feature] <= threshold left.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
  };

  static DecisionTree Fit(const Matrix& x, std::span<const int> y,
                          std::span<const size_t> rows, size_t max_depth,
                          size_t features_per_split, Rng& rng);

  int Predict(std::span<const double> x) const;
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  int Grow(const Matrix& x, std::span<const int> y, std::vector<size_t> rows,
           size_t depth, size_t max_depth, size_t features_per_split,
           Rng& rng);

  std::vector<Node> nodes_;
};

class ForestClassifier {
 public:
  // Needs both labels present.
  static absl::StatusOr<ForestClassifier> Fit(const AttackSet& records,
                                              const ForestParams& params,
                                              uint64_t seed);

  // Majority vote of the trees; ties go to kNonMember.
  int Predict(std::span<const double> features) const;
  double Accuracy(const AttackSet& records) const;
  size_t tree_count() const { return trees_.size(); }

 private:
  std::vector<DecisionTree> trees_;
};

// Black-box prediction interface of a target model.
using PredictionApi = std::function<absl::StatusOr<Matrix>(const Matrix&)>;
using AttackClassifier = std::function<int(std::span<const double>)>;

struct AttackOutcome {
  size_t tp = 0;
  size_t fp = 0;
  size_t tn = 0;
  size_t fn = 0;
  // One flag per member row: did the attack call it a member?
  std::vector<bool> member_flags;
};

absl::StatusOr<AttackOutcome> EvaluateAttack(const AttackClassifier& attack,
                                             const PredictionApi& target,
                                             const Dataset& members,
                                             const Dataset& non_members);
absl::StatusOr<AttackOutcome> EvaluateAttack(const ForestClassifier& forest,
                                             const PredictionApi& target,
                                             const Dataset& members,
                                             const Dataset& non_members);

}  // namespace dputil

#endif  // DPUTIL_ATTACK_H_
