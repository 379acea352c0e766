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

#include "dputil/mechanisms.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/strings/str_format.h"
#include "dputil/status_macros.h"

namespace dputil {
namespace {

constexpr double kUnitBallSlack = 1e-12;

absl::Status CheckTrainSlice(const Dataset& train) {
  if (train.size() == 0) {
    return absl::InvalidArgumentError("training slice is empty");
  }
  return absl::OkStatus();
}

// Rows [x, 1] scaled into the unit ball.
struct AugmentedRows {
  Matrix rows;
  double scale = 1.0;
};

AugmentedRows AugmentAndNormalize(const Matrix& features) {
  const size_t d = features.cols();
  Dataset tmp;
  tmp.features = Matrix(features.rows(), d + 1);
  tmp.labels.assign(features.rows(), 0);
  for (size_t r = 0; r < features.rows(); ++r) {
    for (size_t c = 0; c < d; ++c) tmp.features(r, c) = features(r, c);
    tmp.features(r, d) = 1.0;
  }
  tmp.feature_bounds = ObservedBounds(tmp.features);
  NormalizedDataset normalized = NormalizeRowsToUnitBall(tmp);
  return {std::move(normalized.dataset.features), normalized.scale};
}

// One-vs-rest problems: a single +-1 labelling for binary tasks, one per
// class otherwise.
std::vector<std::vector<int>> SignedLabelSets(const Dataset& train) {
  std::vector<std::vector<int>> sets;
  if (train.class_count == 2) {
    std::vector<int> y(train.size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = train.labels[i] == 1 ? 1 : -1;
    sets.push_back(std::move(y));
    return sets;
  }
  for (int k = 0; k < train.class_count; ++k) {
    std::vector<int> y(train.size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = train.labels[i] == k ? 1 : -1;
    sets.push_back(std::move(y));
  }
  return sets;
}

// Maps coefficients over augmented, scaled rows back to an LR model on raw
// features: score = theta . (s [x, 1]) = (s w) . x + s b.
Model LinearModelFromAugmented(const std::vector<Vector>& thetas, double scale,
                               size_t d, int class_count,
                               const TrainConfig& config) {
  Model model;
  model.arch = ModelArch::Logistic(d, class_count);
  model.config = config;
  model.params.assign(model.arch.ParameterCount(), 0.0);
  if (class_count == 2) {
    for (size_t j = 0; j < d; ++j) model.params[j] = scale * thetas[0][j];
    model.params[d] = scale * thetas[0][d];
    return model;
  }
  for (int k = 0; k < class_count; ++k) {
    for (size_t j = 0; j < d; ++j) {
      model.params[k * d + j] = scale * thetas[k][j];
    }
    model.params[class_count * d + k] = scale * thetas[k][d];
  }
  return model;
}

// Rescales the weights of a model trained on rows multiplied by `scale` so
// it accepts raw rows.
void FoldInputScale(Model& model, double scale) {
  const Vector mask = RegularizationMask(model.arch);
  for (size_t i = 0; i < model.params.size(); ++i) {
    if (mask[i] == 1.0) model.params[i] *= scale;
  }
}

absl::StatusOr<Vector> ParameterNoise(Rng& rng, size_t dim, double scale,
                                      bool per_coordinate) {
  if (per_coordinate) return SampleLaplace(rng, scale, dim);
  return SampleHighDimLaplace(rng, dim, scale);
}

}  // namespace

std::string MechanismName(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::kInput:
      return "input";
    case MechanismKind::kObjective:
      return "objective";
    case MechanismKind::kGradient:
      return "gradient";
    case MechanismKind::kOutput:
      return "output";
    case MechanismKind::kPrediction:
      return "prediction";
  }
  return "unknown";
}

absl::StatusOr<MechanismKind> ParseMechanismKind(std::string_view name) {
  for (MechanismKind kind : kAllMechanisms) {
    if (MechanismName(kind) == name) return kind;
  }
  return absl::InvalidArgumentError(absl::StrFormat(
      "unknown mechanism '%s' (expected input, objective, gradient, output "
      "or prediction)",
      std::string(name)));
}

double PrivacyBudget::DefaultDelta(size_t n_train) {
  const double target = 1.0 / (10.0 * static_cast<double>(n_train));
  double delta = std::pow(10.0, std::floor(std::log10(target)));
  // Guard against log10 rounding up across a power of ten.
  if (delta > target) delta /= 10.0;
  return delta;
}

absl::Status PrivacyBudget::Validate() const {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("epsilon must be positive, got %g", epsilon));
  }
  if (!(delta >= 0 && delta < 1)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("delta must lie in [0, 1), got %g", delta));
  }
  return absl::OkStatus();
}

size_t MechanismSpec::TeacherCount(int class_count) const {
  if (teachers > 0) return teachers;
  return class_count == 2 ? 30 : 40;
}

absl::Status MechanismSpec::ValidateFor(ArchKind arch) const {
  RETURN_IF_ERROR(budget.Validate());
  if ((kind == MechanismKind::kObjective || kind == MechanismKind::kOutput) &&
      arch != ArchKind::kLogistic) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "%s perturbation is only defined for LR; it is out of scope for "
        "MLP models",
        MechanismName(kind)));
  }
  if (!(clip_norm > 0) || !(c2 > 0) || !(lipschitz > 0) ||
      !(input_constant > 0)) {
    return absl::InvalidArgumentError(
        "clip_norm, c2, lipschitz and input_constant must be positive");
  }
  if (kind == MechanismKind::kPrediction && teachers == 1) {
    return absl::InvalidArgumentError("prediction perturbation needs >= 2 "
                                      "teachers");
  }
  return absl::OkStatus();
}

const ModelArch& PrivateModel::arch() const {
  if (is_ensemble()) return ensemble().teachers.front().arch;
  return model().arch;
}

absl::StatusOr<Matrix> PrivateModel::PredictProba(const Matrix& features,
                                                  Rng& query_rng) const {
  if (!is_ensemble()) return dputil::PredictProba(model(), features);
  const auto& teachers = ensemble().teachers;
  const size_t c = static_cast<size_t>(arch().class_count);
  Matrix votes(features.rows(), c);
  for (const Model& teacher : teachers) {
    ASSIGN_OR_RETURN(Matrix proba, dputil::PredictProba(teacher, features));
    for (size_t r = 0; r < features.rows(); ++r) {
      votes(r, ArgMax(proba.row(r))) += 1.0;
    }
  }
  Matrix out(features.rows(), c);
  for (size_t r = 0; r < features.rows(); ++r) {
    NoisyVote vote = NoisyAggregate(votes.row(r), spec_.budget.epsilon,
                                    query_rng, spec_.noise_enabled);
    std::copy(vote.probabilities.begin(), vote.probabilities.end(),
              out.row(r).begin());
  }
  return out;
}

absl::StatusOr<double> EvaluatePrivate(const PrivateModel& model,
                                       const Dataset& slice, Rng& query_rng) {
  ASSIGN_OR_RETURN(Matrix proba, model.PredictProba(slice.features, query_rng));
  return Accuracy(proba, slice.labels);
}

absl::StatusOr<InputLrNoise> InputLrNoiseScale(size_t n, size_t d,
                                               const PrivacyBudget& budget,
                                               double lambda) {
  RETURN_IF_ERROR(budget.Validate());
  if (n == 0 || !(budget.delta > 0)) {
    return absl::InvalidArgumentError(
        "input perturbation needs n > 0 and delta > 0");
  }
  InputLrNoise noise;
  noise.a = std::sqrt((4.0 / budget.delta) / static_cast<double>(n));
  if (noise.a >= 0.5) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "infeasible input-perturbation parameters: a = sqrt((4/delta)/n) = "
        "%g >= 1/2 for n=%d, delta=%g (needs n > 16/delta)",
        noise.a, n, budget.delta));
  }
  const double two_d = 2.0 * static_cast<double>(d);
  const double a = noise.a;
  noise.sigma = (std::sqrt(two_d) * a * lambda +
                 std::sqrt(two_d * a * a * lambda * lambda +
                           2.0 * lambda * (1.0 - 2.0 * a) / budget.epsilon)) /
                (1.0 - 2.0 * a);
  noise.feature_stddev = noise.sigma / std::sqrt(static_cast<double>(n));
  return noise;
}

absl::StatusOr<double> InputMlpNoiseVariance(size_t n, double lipschitz,
                                             size_t steps,
                                             const PrivacyBudget& budget,
                                             double constant) {
  RETURN_IF_ERROR(budget.Validate());
  if (n < 2) {
    return absl::InvalidArgumentError(
        absl::StrFormat("MLP input perturbation needs n >= 2, got %d", n));
  }
  if (!(budget.delta > 0)) {
    return absl::InvalidArgumentError("MLP input perturbation needs delta > 0");
  }
  const double nd = static_cast<double>(n);
  return constant * lipschitz * lipschitz * static_cast<double>(steps) *
         std::log(1.0 / budget.delta) /
         (nd * (nd - 1.0) * budget.epsilon * budget.epsilon);
}

double ObjectiveNoiseScale(size_t n, double epsilon) {
  return 2.0 / (static_cast<double>(n) * epsilon);
}

double ConvexGradientNoiseScale(size_t n, double epsilon) {
  return 2.0 / (static_cast<double>(n) * epsilon);
}

double DpSgdSigma(double sampling_ratio, size_t steps, double delta,
                  double epsilon, double c2) {
  return c2 * sampling_ratio *
         std::sqrt(static_cast<double>(steps) * std::log(1.0 / delta)) /
         epsilon;
}

double OutputNoiseScale(size_t n, double lambda, double epsilon) {
  return 2.0 / (static_cast<double>(n) * lambda * epsilon);
}

size_t TotalSteps(size_t n, const TrainConfig& config) {
  const size_t batch = std::min(config.batch_size, n);
  return config.epochs * ((n + batch - 1) / batch);
}

Dataset PerturbFeatures(const Dataset& train, double stddev, Rng& rng) {
  Dataset out = train;
  if (stddev > 0) {
    Vector noise =
        SampleGaussian(rng, stddev, train.size() * train.dim()).value();
    Vector& data = out.features.mutable_data();
    for (size_t i = 0; i < data.size(); ++i) data[i] += noise[i];
  }
  for (size_t r = 0; r < out.size(); ++r) {
    for (size_t c = 0; c < out.dim(); ++c) {
      const FeatureBounds& b = train.feature_bounds[c];
      out.features(r, c) = std::clamp(out.features(r, c), b.min, b.max);
    }
  }
  // Bounds stay those of the unperturbed slice; every value is inside them.
  return out;
}

absl::StatusOr<PrivateModel> InputPerturbLr(const Dataset& train,
                                            const MechanismSpec& spec,
                                            const TrainConfig& config,
                                            uint64_t seed) {
  RETURN_IF_ERROR(CheckTrainSlice(train));
  RETURN_IF_ERROR(spec.ValidateFor(ArchKind::kLogistic));
  ASSIGN_OR_RETURN(InputLrNoise noise,
                   InputLrNoiseScale(train.size(), train.dim(), spec.budget,
                                     config.lambda));
  Rng rng = Rng::Derive(seed, "input/lr");
  const Dataset perturbed = PerturbFeatures(
      train, spec.noise_enabled ? noise.feature_stddev : 0.0, rng);
  ASSIGN_OR_RETURN(Model model,
                   Train(ModelArch::Logistic(train.dim(), train.class_count),
                         perturbed, config));
  model.mechanism = "input";
  return PrivateModel(std::move(model), spec);
}

absl::StatusOr<PrivateModel> InputPerturbMlp(const Dataset& train,
                                             const MechanismSpec& spec,
                                             const TrainConfig& config,
                                             uint64_t seed) {
  RETURN_IF_ERROR(CheckTrainSlice(train));
  RETURN_IF_ERROR(spec.ValidateFor(ArchKind::kMlp));
  ASSIGN_OR_RETURN(
      double variance,
      InputMlpNoiseVariance(train.size(), spec.lipschitz,
                            TotalSteps(train.size(), config), spec.budget,
                            spec.input_constant));
  Rng rng = Rng::Derive(seed, "input/mlp");
  const Dataset perturbed = PerturbFeatures(
      train, spec.noise_enabled ? std::sqrt(variance) : 0.0, rng);
  ASSIGN_OR_RETURN(Model model,
                   Train(ModelArch::Mlp(train.dim(), train.class_count),
                         perturbed, config));
  model.mechanism = "input";
  return PrivateModel(std::move(model), spec);
}

absl::StatusOr<LinearFit> ObjectivePerturbNormalized(
    const Matrix& features, std::span<const int> signed_labels,
    const PrivacyBudget& budget, double lambda, Rng& rng,
    bool per_coordinate_laplace, bool noise_enabled) {
  RETURN_IF_ERROR(budget.Validate());
  for (size_t r = 0; r < features.rows(); ++r) {
    const double norm = L2Norm(features.row(r));
    if (norm > 1.0 + kUnitBallSlack) {
      return absl::FailedPreconditionError(absl::StrFormat(
          "objective perturbation needs ||x_i|| <= 1; row %d has norm %g", r,
          norm));
    }
  }
  const size_t dim = features.cols();
  Vector linear_term(dim, 0.0);
  if (noise_enabled) {
    // Density proportional to exp(-(eps/2) ||b||).
    ASSIGN_OR_RETURN(linear_term,
                     ParameterNoise(rng, dim, 2.0 / budget.epsilon,
                                    per_coordinate_laplace));
  }
  return FitRegularizedLogistic(features, signed_labels, lambda, linear_term);
}

absl::StatusOr<PrivateModel> ObjectivePerturb(const Dataset& train,
                                              const MechanismSpec& spec,
                                              const TrainConfig& config,
                                              uint64_t seed) {
  RETURN_IF_ERROR(CheckTrainSlice(train));
  RETURN_IF_ERROR(spec.ValidateFor(ArchKind::kLogistic));
  const AugmentedRows rows = AugmentAndNormalize(train.features);
  Rng rng = Rng::Derive(seed, "objective");
  std::vector<Vector> thetas;
  for (const auto& y : SignedLabelSets(train)) {
    ASSIGN_OR_RETURN(LinearFit fit,
                     ObjectivePerturbNormalized(
                         rows.rows, y, spec.budget, config.lambda, rng,
                         spec.per_coordinate_laplace, spec.noise_enabled));
    thetas.push_back(std::move(fit.theta));
  }
  Model model = LinearModelFromAugmented(thetas, rows.scale, train.dim(),
                                         train.class_count, config);
  model.mechanism = "objective";
  return PrivateModel(std::move(model), spec);
}

absl::StatusOr<PrivateModel> GradientPerturbLr(const Dataset& train,
                                               const MechanismSpec& spec,
                                               const TrainConfig& config,
                                               uint64_t seed) {
  RETURN_IF_ERROR(CheckTrainSlice(train));
  RETURN_IF_ERROR(spec.ValidateFor(ArchKind::kLogistic));
  const NormalizedDataset normalized = NormalizeRowsToUnitBall(train);
  TrainConfig full_batch = config;
  full_batch.batch_size = train.size();
  const double scale =
      ConvexGradientNoiseScale(train.size(), spec.budget.epsilon);
  Rng rng = Rng::Derive(seed, "gradient/convex");
  const bool noisy = spec.noise_enabled;
  GradientHook hook =
      [&rng, scale, noisy](const Matrix& per_example, std::span<const size_t>,
                           size_t) -> absl::StatusOr<Vector> {
    Vector direction = MeanOfRows(per_example);
    if (!noisy) return direction;
    ASSIGN_OR_RETURN(Vector noise,
                     SampleLaplace(rng, scale, direction.size()));
    for (size_t i = 0; i < direction.size(); ++i) direction[i] += noise[i];
    return direction;
  };
  ASSIGN_OR_RETURN(
      Model model,
      Train(ModelArch::Logistic(train.dim(), train.class_count),
            normalized.dataset, full_batch, hook));
  FoldInputScale(model, normalized.scale);
  model.config = config;
  model.mechanism = "gradient";
  return PrivateModel(std::move(model), spec);
}

absl::StatusOr<PrivateModel> GradientPerturbDpSgd(
    const ModelArch& arch, const Dataset& train, const MechanismSpec& spec,
    const TrainConfig& config, uint64_t seed, const ClipObserver& observer) {
  RETURN_IF_ERROR(CheckTrainSlice(train));
  RETURN_IF_ERROR(spec.ValidateFor(arch.kind));
  if (!(spec.budget.delta > 0)) {
    return absl::InvalidArgumentError("DP-SGD needs delta > 0");
  }
  const size_t n = train.size();
  const size_t lot = std::min(config.batch_size, n);
  const double q = static_cast<double>(lot) / static_cast<double>(n);
  const double sigma = DpSgdSigma(q, TotalSteps(n, config), spec.budget.delta,
                                  spec.budget.epsilon, spec.c2);
  const double clip = spec.clip_norm;
  const bool noisy = spec.noise_enabled;
  Rng rng = Rng::Derive(seed, "gradient/dpsgd");
  GradientHook hook = [&](const Matrix& per_example, std::span<const size_t>,
                          size_t step) -> absl::StatusOr<Vector> {
    ASSIGN_OR_RETURN(Matrix clipped, ClipRowsToNorm(per_example, clip));
    if (observer) observer(clipped, step);
    Vector sum(clipped.cols(), 0.0);
    for (size_t r = 0; r < clipped.rows(); ++r) {
      auto row = clipped.row(r);
      for (size_t c = 0; c < sum.size(); ++c) sum[c] += row[c];
    }
    if (noisy) {
      ASSIGN_OR_RETURN(Vector noise,
                       SampleGaussian(rng, sigma * clip, sum.size()));
      for (size_t c = 0; c < sum.size(); ++c) sum[c] += noise[c];
    }
    for (double& v : sum) v /= static_cast<double>(lot);
    return sum;
  };
  auto model = Train(arch, train, config, hook);
  if (!model.ok()) {
    return absl::Status(model.status().code(),
                        absl::StrFormat("DP-SGD with sigma=%g: %s", sigma,
                                        model.status().message()));
  }
  model->mechanism = "gradient";
  return PrivateModel(*std::move(model), spec);
}

absl::StatusOr<PrivateModel> OutputPerturb(const Dataset& train,
                                           const MechanismSpec& spec,
                                           const TrainConfig& config,
                                           uint64_t seed) {
  RETURN_IF_ERROR(CheckTrainSlice(train));
  RETURN_IF_ERROR(spec.ValidateFor(ArchKind::kLogistic));
  if (!(config.lambda > 0)) {
    return absl::InvalidArgumentError("output perturbation needs lambda > 0");
  }
  const AugmentedRows rows = AugmentAndNormalize(train.features);
  const double scale =
      OutputNoiseScale(train.size(), config.lambda, spec.budget.epsilon);
  Rng rng = Rng::Derive(seed, "output");
  const Vector no_linear_term(rows.rows.cols(), 0.0);
  std::vector<Vector> thetas;
  for (const auto& y : SignedLabelSets(train)) {
    ASSIGN_OR_RETURN(LinearFit fit,
                     FitRegularizedLogistic(rows.rows, y, config.lambda,
                                            no_linear_term));
    if (spec.noise_enabled) {
      ASSIGN_OR_RETURN(Vector noise,
                       ParameterNoise(rng, fit.theta.size(), scale,
                                      spec.per_coordinate_laplace));
      for (size_t j = 0; j < noise.size(); ++j) fit.theta[j] += noise[j];
    }
    thetas.push_back(std::move(fit.theta));
  }
  Model model = LinearModelFromAugmented(thetas, rows.scale, train.dim(),
                                         train.class_count, config);
  model.mechanism = "output";
  return PrivateModel(std::move(model), spec);
}

std::vector<std::vector<size_t>> MakeShards(const Dataset& train, size_t count,
                                            uint64_t seed) {
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::Derive(seed, "shards");
  Shuffle(order, rng);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return train.labels[a] < train.labels[b];
  });
  std::vector<std::vector<size_t>> shards(count);
  for (size_t i = 0; i < order.size(); ++i) {
    shards[i % count].push_back(order[i]);
  }
  return shards;
}

absl::StatusOr<PrivateModel> PredictionPerturb(const ModelArch& arch,
                                               const Dataset& train,
                                               const MechanismSpec& spec,
                                               const TrainConfig& config,
                                               uint64_t seed) {
  RETURN_IF_ERROR(CheckTrainSlice(train));
  RETURN_IF_ERROR(spec.ValidateFor(arch.kind));
  const size_t count = spec.TeacherCount(train.class_count);
  if (count < 2) {
    return absl::InvalidArgumentError("prediction perturbation needs >= 2 "
                                      "teachers");
  }
  const auto shards = MakeShards(train, count, seed);
  TeacherEnsemble ensemble;
  for (size_t t = 0; t < count; ++t) {
    if (shards[t].size() < 2) {
      return absl::FailedPreconditionError(absl::StrFormat(
          "configuration error: shard %d of %d has %d examples; need at "
          "least 2 to train a teacher (n=%d)",
          t, count, shards[t].size(), train.size()));
    }
    TrainConfig teacher_config = config;
    teacher_config.seed =
        Rng::Derive(config.seed, absl::StrFormat("teacher/%d", t)).NextU64();
    ASSIGN_OR_RETURN(Model teacher,
                     Train(arch, train.Subset(shards[t]), teacher_config));
    teacher.mechanism = "prediction";
    ensemble.teachers.push_back(std::move(teacher));
  }
  return PrivateModel(std::move(ensemble), spec);
}

NoisyVote NoisyAggregate(std::span<const double> votes, double epsilon,
                         Rng& rng, bool noise_enabled) {
  Vector noisy(votes.begin(), votes.end());
  if (noise_enabled) {
    Vector noise = SampleLaplace(rng, 1.0 / epsilon, noisy.size()).value();
    for (size_t j = 0; j < noisy.size(); ++j) noisy[j] += noise[j];
  }
  NoisyVote out;
  out.label = static_cast<int>(ArgMax(noisy));
  out.probabilities.assign(noisy.size(), 0.0);
  double total = 0.0;
  for (size_t j = 0; j < noisy.size(); ++j) {
    out.probabilities[j] = std::max(0.0, noisy[j]);
    total += out.probabilities[j];
  }
  if (total > 0) {
    for (double& p : out.probabilities) p /= total;
  } else {
    out.probabilities[out.label] = 1.0;
  }
  return out;
}

absl::StatusOr<PrivateModel> TrainPrivate(const ModelArch& arch,
                                          const Dataset& train,
                                          const MechanismSpec& spec,
                                          const TrainConfig& config,
                                          uint64_t seed) {
  RETURN_IF_ERROR(spec.ValidateFor(arch.kind));
  const bool lr = arch.kind == ArchKind::kLogistic;
  switch (spec.kind) {
    case MechanismKind::kInput:
      return lr ? InputPerturbLr(train, spec, config, seed)
                : InputPerturbMlp(train, spec, config, seed);
    case MechanismKind::kObjective:
      return ObjectivePerturb(train, spec, config, seed);
    case MechanismKind::kGradient:
      if (lr && spec.gradient_variant == GradientVariant::kConvexLaplace) {
        return GradientPerturbLr(train, spec, config, seed);
      }
      return GradientPerturbDpSgd(arch, train, spec, config, seed);
    case MechanismKind::kOutput:
      return OutputPerturb(train, spec, config, seed);
    case MechanismKind::kPrediction:
      return PredictionPerturb(arch, train, spec, config, seed);
  }
  return absl::InternalError("unknown mechanism kind");
}

nlohmann::json MechanismSpecToJson(const MechanismSpec& spec) {
  return {{"kind", MechanismName(spec.kind)},
          {"epsilon", spec.budget.epsilon},
          {"delta", spec.budget.delta},
          {"clip_norm", spec.clip_norm},
          {"c2", spec.c2},
          {"teachers", spec.teachers},
          {"lipschitz", spec.lipschitz},
          {"input_constant", spec.input_constant},
          {"gradient_variant",
           spec.gradient_variant == GradientVariant::kDpSgd ? "dpsgd"
                                                            : "convex"},
          {"noise_enabled", spec.noise_enabled},
          {"per_coordinate_laplace", spec.per_coordinate_laplace}};
}

absl::StatusOr<MechanismSpec> MechanismSpecFromJson(const nlohmann::json& j,
                                                    MechanismSpec defaults) {
  MechanismSpec spec = defaults;
  try {
    if (j.is_string()) {
      ASSIGN_OR_RETURN(spec.kind, ParseMechanismKind(j.get<std::string>()));
      return spec;
    }
    if (!j.is_object()) {
      return absl::InvalidArgumentError(
          "mechanism must be a name or an object");
    }
    ASSIGN_OR_RETURN(spec.kind,
                     ParseMechanismKind(j.at("kind").get<std::string>()));
    spec.budget.epsilon = j.value("epsilon", spec.budget.epsilon);
    spec.budget.delta = j.value("delta", spec.budget.delta);
    spec.clip_norm = j.value("clip_norm", spec.clip_norm);
    spec.c2 = j.value("c2", spec.c2);
    spec.teachers = j.value("teachers", spec.teachers);
    spec.lipschitz = j.value("lipschitz", spec.lipschitz);
    spec.input_constant = j.value("input_constant", spec.input_constant);
    const std::string variant = j.value("gradient_variant", std::string(
        spec.gradient_variant == GradientVariant::kDpSgd ? "dpsgd" : "convex"));
    if (variant == "dpsgd") {
      spec.gradient_variant = GradientVariant::kDpSgd;
    } else if (variant == "convex") {
      spec.gradient_variant = GradientVariant::kConvexLaplace;
    } else {
      return absl::InvalidArgumentError(absl::StrFormat(
          "unknown gradient_variant '%s' (expected dpsgd or convex)", variant));
    }
    spec.noise_enabled = j.value("noise_enabled", spec.noise_enabled);
    spec.per_coordinate_laplace =
        j.value("per_coordinate_laplace", spec.per_coordinate_laplace);
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrFormat("mechanism spec: %s", e.what()));
  }
  return spec;
}

nlohmann::json PrivateModelToJson(const PrivateModel& model) {
  nlohmann::json j = {{"format", "dputil-private-model/1"},
                      {"spec", MechanismSpecToJson(model.spec())}};
  if (model.is_ensemble()) {
    nlohmann::json teachers = nlohmann::json::array();
    for (const Model& t : model.ensemble().teachers) {
      teachers.push_back(ModelToJson(t));
    }
    j["teachers"] = std::move(teachers);
  } else {
    j["model"] = ModelToJson(model.model());
  }
  return j;
}

absl::StatusOr<PrivateModel> PrivateModelFromJson(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "dputil-private-model/1") {
      return absl::InvalidArgumentError("not a dputil-private-model/1 record");
    }
    ASSIGN_OR_RETURN(MechanismSpec spec, MechanismSpecFromJson(j.at("spec")));
    if (j.contains("teachers")) {
      TeacherEnsemble ensemble;
      for (const auto& t : j.at("teachers")) {
        ASSIGN_OR_RETURN(Model teacher, ModelFromJson(t));
        ensemble.teachers.push_back(std::move(teacher));
      }
      if (ensemble.teachers.size() < 2) {
        return absl::InvalidArgumentError("ensemble needs >= 2 teachers");
      }
      return PrivateModel(std::move(ensemble), spec);
    }
    ASSIGN_OR_RETURN(Model model, ModelFromJson(j.at("model")));
    return PrivateModel(std::move(model), spec);
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrFormat("private model record: %s", e.what()));
  }
}

}  // namespace dputil
