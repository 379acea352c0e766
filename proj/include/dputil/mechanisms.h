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

// The five perturbation points of a training pipeline: input features, the
// training objective, gradients, trained parameters and predictions. Each
// entry point consumes a training slice and returns a PrivateModel that only
// exposes probability vectors.

#ifndef DPUTIL_MECHANISMS_H_
#define DPUTIL_MECHANISMS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "dputil/dataset.h"
#include "dputil/learners.h"
#include "dputil/numkit.h"
#include "json.hpp"

namespace dputil {

enum class MechanismKind { kInput, kObjective, kGradient, kOutput, kPrediction };

std::string MechanismName(MechanismKind kind);
absl::StatusOr<MechanismKind> ParseMechanismKind(std::string_view name);
inline constexpr MechanismKind kAllMechanisms[] = {
    MechanismKind::kInput, MechanismKind::kObjective, MechanismKind::kGradient,
    MechanismKind::kOutput, MechanismKind::kPrediction};

struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 1e-5;

  // Largest power of ten not above 1 / (10 * n_train).
  static double DefaultDelta(size_t n_train);
  // epsilon > 0 and finite, 0 <= delta < 1.
  absl::Status Validate() const;

  friend bool operator==(const PrivacyBudget&, const PrivacyBudget&) = default;
};

// Which gradient perturbation LR uses; the MLP always uses DP-SGD.
enum class GradientVariant { kDpSgd, kConvexLaplace };

struct MechanismSpec {
  MechanismKind kind = MechanismKind::kGradient;
  PrivacyBudget budget;
  // DP-SGD clipping threshold C and noise constant c2.
  double clip_norm = 1.0;
  double c2 = 1.0;
  // Teacher count; 0 picks 30 for binary and 40 for multi-class tasks.
  size_t teachers = 0;
  // Lipschitz constant G and constant c of the MLP input-perturbation bound.
  double lipschitz = 1.0;
  double input_constant = 1.0;
  GradientVariant gradient_variant = GradientVariant::kDpSgd;
  // Debug switches: disable noise entirely, or use per-coordinate Laplace
  // instead of the Gamma-magnitude construction for objective/output noise.
  bool noise_enabled = true;
  bool per_coordinate_laplace = false;

  size_t TeacherCount(int class_count) const;
  // Objective and output perturbation are LR-only.
  absl::Status ValidateFor(ArchKind arch) const;

  friend bool operator==(const MechanismSpec&, const MechanismSpec&) = default;
};

struct TeacherEnsemble {
  std::vector<Model> teachers;
};

// A trained predictor and the spec that produced it. Immutable; prediction
// perturbation draws its noise from the caller's query Rng so concurrent
// query streams stay independent.
class PrivateModel {
 public:
  PrivateModel(Model model, MechanismSpec spec)
      : underlying_(std::move(model)), spec_(spec) {}
  PrivateModel(TeacherEnsemble ensemble, MechanismSpec spec)
      : underlying_(std::move(ensemble)), spec_(spec) {}

  const MechanismSpec& spec() const { return spec_; }
  const ModelArch& arch() const;
  bool is_ensemble() const {
    return std::holds_alternative<TeacherEnsemble>(underlying_);
  }
  const Model& model() const { return std::get<Model>(underlying_); }
  const TeacherEnsemble& ensemble() const {
    return std::get<TeacherEnsemble>(underlying_);
  }

  // One row per query, each summing to 1.
  absl::StatusOr<Matrix> PredictProba(const Matrix& features,
                                      Rng& query_rng) const;

 private:
  std::variant<Model, TeacherEnsemble> underlying_;
  MechanismSpec spec_;
};

absl::StatusOr<double> EvaluatePrivate(const PrivateModel& model,
                                       const Dataset& slice, Rng& query_rng);

// ---- Noise calibration -----------------------------------------------------

struct InputLrNoise {
  double a = 0.0;
  double sigma = 0.0;
  // Per-feature standard deviation sigma / sqrt(n).
  double feature_stddev = 0.0;
};
// a = sqrt((4/delta)/n) and
// sigma = (sqrt(2d) a lambda + sqrt(2d a^2 lambda^2 + 2 lambda (1-2a)/eps))
//         / (1 - 2a).
// Fails when a >= 1/2.
absl::StatusOr<InputLrNoise> InputLrNoiseScale(size_t n, size_t d,
                                               const PrivacyBudget& budget,
                                               double lambda);
// sigma^2 = c G^2 T ln(1/delta) / (n (n-1) eps^2).
absl::StatusOr<double> InputMlpNoiseVariance(size_t n, double lipschitz,
                                             size_t steps,
                                             const PrivacyBudget& budget,
                                             double constant = 1.0);
// 2 / (n eps)
double ObjectiveNoiseScale(size_t n, double epsilon);
// 2 / (n eps), per iteration.
double ConvexGradientNoiseScale(size_t n, double epsilon);
// sigma = c2 q sqrt(T ln(1/delta)) / eps.
double DpSgdSigma(double sampling_ratio, size_t steps, double delta,
                  double epsilon, double c2);
// 2 / (n lambda eps)
double OutputNoiseScale(size_t n, double lambda, double epsilon);
// Total optimizer steps: epochs * ceil(n / batch).
size_t TotalSteps(size_t n, const TrainConfig& config);

// ---- Mechanisms ------------------------------------------------------------

absl::StatusOr<PrivateModel> InputPerturbLr(const Dataset& train,
                                            const MechanismSpec& spec,
                                            const TrainConfig& config,
                                            uint64_t seed);
absl::StatusOr<PrivateModel> InputPerturbMlp(const Dataset& train,
                                             const MechanismSpec& spec,
                                             const TrainConfig& config,
                                             uint64_t seed);

// Adds N(0, stddev^2) to each feature, then clamps it to the slice's bounds.
Dataset PerturbFeatures(const Dataset& train, double stddev, Rng& rng);

// Minimizer of the perturbed objective on rows that already lie in the unit
// ball, with labels in {-1, +1}. Fails on any row with norm above 1.
absl::StatusOr<LinearFit> ObjectivePerturbNormalized(
    const Matrix& features, std::span<const int> signed_labels,
    const PrivacyBudget& budget, double lambda, Rng& rng,
    bool per_coordinate_laplace = false, bool noise_enabled = true);

// Appends a constant feature, normalizes the augmented rows into the unit
// ball and solves one perturbed problem per class (a single one for binary
// tasks). The intercept is the coefficient on the constant feature, so it is
// regularized and noised like every other coordinate.
absl::StatusOr<PrivateModel> ObjectivePerturb(const Dataset& train,
                                              const MechanismSpec& spec,
                                              const TrainConfig& config,
                                              uint64_t seed);

// Full-batch training on unit-ball rows; each step adds Laplace(2/(n eps))
// to every coordinate of the data gradient.
absl::StatusOr<PrivateModel> GradientPerturbLr(const Dataset& train,
                                               const MechanismSpec& spec,
                                               const TrainConfig& config,
                                               uint64_t seed);

// Called once per step with the clipped per-example gradients.
using ClipObserver = std::function<void(const Matrix& clipped, size_t step)>;

absl::StatusOr<PrivateModel> GradientPerturbDpSgd(
    const ModelArch& arch, const Dataset& train, const MechanismSpec& spec,
    const TrainConfig& config, uint64_t seed,
    const ClipObserver& observer = nullptr);

// Regularized optimum on augmented unit-ball rows (as ObjectivePerturb)
// plus Gamma-magnitude noise of scale 2/(n lambda eps) on the parameters.
absl::StatusOr<PrivateModel> OutputPerturb(const Dataset& train,
                                           const MechanismSpec& spec,
                                           const TrainConfig& config,
                                           uint64_t seed);

// Class-stratified round-robin assignment of the slice into `count` disjoint
// shards.
std::vector<std::vector<size_t>> MakeShards(const Dataset& train, size_t count,
                                            uint64_t seed);

absl::StatusOr<PrivateModel> PredictionPerturb(const ModelArch& arch,
                                               const Dataset& train,
                                               const MechanismSpec& spec,
                                               const TrainConfig& config,
                                               uint64_t seed);

struct NoisyVote {
  int label = 0;
  // Noisy counts floored at 0 and normalized; when every count is <= 0 the
  // whole mass sits on the noisy argmax, so argmax(probabilities) == label.
  Vector probabilities;
};
// argmax_j (votes_j + Laplace(1/eps)), lowest index on ties.
NoisyVote NoisyAggregate(std::span<const double> votes, double epsilon,
                         Rng& rng, bool noise_enabled = true);

// Dispatches on spec.kind (and arch for input/gradient).
absl::StatusOr<PrivateModel> TrainPrivate(const ModelArch& arch,
                                          const Dataset& train,
                                          const MechanismSpec& spec,
                                          const TrainConfig& config,
                                          uint64_t seed);

nlohmann::json MechanismSpecToJson(const MechanismSpec& spec);
absl::StatusOr<MechanismSpec> MechanismSpecFromJson(const nlohmann::json& j,
                                                    MechanismSpec defaults = {});
nlohmann::json PrivateModelToJson(const PrivateModel& model);
absl::StatusOr<PrivateModel> PrivateModelFromJson(const nlohmann::json& j);

}  // namespace dputil

#endif  // DPUTIL_MECHANISMS_H_
