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

// Logistic regression and a two-hidden-layer ReLU network over a flat
// parameter vector, trained by mini-batch Adam.
//
// Parameter layout:
//   LR, two classes:   [w (d), b]                      sigmoid output
//   LR, c > 2 classes: [W (c x d, row-major), b (c)]   softmax output
//   MLP: for each layer in order, [W (out x in, row-major), b (out)], with
//        ReLU on hidden layers and softmax on the output layer.
// Bias entries are never regularized.

#ifndef DPUTIL_LEARNERS_H_
#define DPUTIL_LEARNERS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dputil/dataset.h"
#include "dputil/numkit.h"
#include "json.hpp"

namespace dputil {

enum class ArchKind { kLogistic, kMlp };

std::string ArchKindName(ArchKind kind);
absl::StatusOr<ArchKind> ParseArchKind(std::string_view name);

struct ModelArch {
  ArchKind kind = ArchKind::kLogistic;
  size_t input_dim = 0;
  int class_count = 2;
  std::vector<size_t> hidden;

  static ModelArch Logistic(size_t input_dim, int class_count);
  // Two hidden layers of 64 units.
  static ModelArch Mlp(size_t input_dim, int class_count);

  size_t ParameterCount() const;
  absl::Status Validate() const;

  friend bool operator==(const ModelArch&, const ModelArch&) = default;
};

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  friend bool operator==(const AdamParams&, const AdamParams&) = default;
};

struct TrainConfig {
  size_t epochs = 100;
  double learning_rate = 0.01;
  // Capped at the training-set size.
  size_t batch_size = 250;
  double lambda = 1e-4;
  AdamParams adam;
  uint64_t seed = 0;

  absl::Status Validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct Model {
  ModelArch arch;
  Vector params;
  TrainConfig config;
  // Mechanism tag, "nonprivate" for plain training.
  std::string mechanism = "nonprivate";

  friend bool operator==(const Model&, const Model&) = default;
};

// Zeros for LR; fan-in scaled uniform U(-sqrt(6/fan_in), sqrt(6/fan_in))
// weights and zero biases for the MLP.
Model InitialModel(const ModelArch& arch, uint64_t seed);

// 1 for regularized (weight) entries, 0 for biases.
Vector RegularizationMask(const ModelArch& arch);

struct LossAndGrad {
  double loss = 0.0;
  Vector grad;
};

// Mean cross-entropy over the batch plus (lambda/2) * ||w||^2 over non-bias
// weights, with its exact gradient.
absl::StatusOr<LossAndGrad> ComputeLossAndGrad(const Model& model,
                                               const Matrix& features,
                                               std::span<const int> labels,
                                               double lambda);

// Row i is the gradient of example i's data loss alone (no regularizer).
absl::StatusOr<Matrix> PerExampleGrads(const Model& model,
                                       const Matrix& features,
                                       std::span<const int> labels);

// Receives (per-example gradients, batch indices into the training slice,
// global step index) and returns the data-term update direction. The
// trainer adds lambda * theta on weights before the Adam step.
using GradientHook = std::function<absl::StatusOr<Vector>(
    const Matrix& per_example, std::span<const size_t> batch, size_t step)>;

// Adam over seeded shuffles of the slice; the final short batch is kept.
absl::StatusOr<Model> Train(const ModelArch& arch, const Dataset& slice,
                            const TrainConfig& config,
                            const GradientHook& hook = nullptr);

// Rows sum to 1.
absl::StatusOr<Matrix> PredictProba(const Model& model,
                                    const Matrix& features);
// Fraction of rows whose argmax (lowest index on ties) equals the label.
double Accuracy(const Matrix& proba, std::span<const int> labels);
absl::StatusOr<double> Evaluate(const Model& model, const Dataset& slice);

size_t ArgMax(std::span<const double> values);

// Minimizes (1/n) sum_i log(1 + exp(-y_i theta.x_i)) + (lambda/2)||theta||^2
// + linear_term.theta / n by damped Newton steps. Labels are +-1, there is
// no separate intercept, and every coordinate is regularized.
struct LinearFit {
  Vector theta;
  double gradient_norm = 0.0;
  size_t iterations = 0;
};
absl::StatusOr<LinearFit> FitRegularizedLogistic(
    const Matrix& features, std::span<const int> signed_labels, double lambda,
    std::span<const double> linear_term, double tolerance = 1e-9,
    size_t max_iterations = 200);

// Gradient of the objective FitRegularizedLogistic minimizes.
Vector RegularizedLogisticGradient(const Matrix& features,
                                   std::span<const int> signed_labels,
                                   double lambda,
                                   std::span<const double> linear_term,
                                   std::span<const double> theta);

nlohmann::json TrainConfigToJson(const TrainConfig& config);
absl::StatusOr<TrainConfig> TrainConfigFromJson(const nlohmann::json& j,
                                                TrainConfig defaults = {});
nlohmann::json ModelToJson(const Model& model);
absl::StatusOr<Model> ModelFromJson(const nlohmann::json& j);

}  // namespace dputil

#endif  // DPUTIL_LEARNERS_H_
