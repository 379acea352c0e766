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


#include "dputil/learners.h"

#include <algorithm>
#include <cmath>

#include "dputil/dataset.h"
#include "gtest/gtest.h"

namespace dputil {
namespace {

Dataset Blobs(size_t n, size_t d, int c, double sep, uint64_t seed) {
  return *Synthesize({n, d, c, sep, seed});
}

Model RandomModel(const ModelArch& arch, Rng& rng, double spread) {
  Model m = InitialModel(arch, rng.NextU64());
  for (double& p : m.params) p = spread * (2.0 * rng.NextDouble() - 1.0);
  return m;
}

// Central finite differences of the full objective.
Vector FiniteDifferenceGrad(Model model, const Dataset& data, double lambda) {
  constexpr double kStep = 1e-6;
  Vector grad(model.params.size());
  for (size_t i = 0; i < grad.size(); ++i) {
    const double saved = model.params[i];
    model.params[i] = saved + kStep;
    const double up =
        ComputeLossAndGrad(model, data.features, data.labels, lambda)->loss;
    model.params[i] = saved - kStep;
    const double down =
        ComputeLossAndGrad(model, data.features, data.labels, lambda)->loss;
    model.params[i] = saved;
    grad[i] = (up - down) / (2 * kStep);
  }
  return grad;
}

// Smallest |pre-activation| over the MLP's hidden units, computed from the
// documented layout: per layer W (out x in, row-major) then b (out).
double MinHiddenMargin(const Model& model, const Matrix& x) {
  std::vector<size_t> widths = {model.arch.input_dim};
  widths.insert(widths.end(), model.arch.hidden.begin(),
                model.arch.hidden.end());
  double margin = 1e300;
  for (size_t r = 0; r < x.rows(); ++r) {
    Vector a(x.row(r).begin(), x.row(r).end());
    size_t offset = 0;
    for (size_t l = 1; l < widths.size(); ++l) {
      const size_t in = widths[l - 1], out = widths[l];
      Vector z(out);
      for (size_t o = 0; o < out; ++o) {
        double s = model.params[offset + in * out + o];
        for (size_t i = 0; i < in; ++i) {
          s += model.params[offset + o * in + i] * a[i];
        }
        margin = std::min(margin, std::abs(s));
        z[o] = std::max(0.0, s);
      }
      offset += in * out + out;
      a = z;
    }
  }
  return margin;
}

double RelativeError(const Vector& a, const Vector& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

TEST(ArchTest, ParameterCounts) {
  EXPECT_EQ(ModelArch::Logistic(5, 2).ParameterCount(), 6u);
  EXPECT_EQ(ModelArch::Logistic(5, 3).ParameterCount(), 18u);
  EXPECT_EQ(ModelArch::Mlp(5, 3).ParameterCount(),
            5u * 64 + 64 + 64 * 64 + 64 + 64 * 3 + 3);
  EXPECT_FALSE(ModelArch::Logistic(0, 2).Validate().ok());
  EXPECT_EQ(*ParseArchKind("MLP"), ArchKind::kMlp);
  EXPECT_FALSE(ParseArchKind("svm").ok());
}

TEST(LossTest, ZeroParametersGiveLn2) {
  const Dataset data = Blobs(40, 3, 2, 1.0, 1);
  Model model = InitialModel(ModelArch::Logistic(3, 2), 0);
  for (double p : model.params) EXPECT_EQ(p, 0.0);
  auto lg = ComputeLossAndGrad(model, data.features, data.labels, 1e-4);
  ASSERT_TRUE(lg.ok());
  EXPECT_NEAR(lg->loss, std::log(2.0), 1e-12);
  auto proba = PredictProba(model, data.features);
  for (size_t r = 0; r < proba->rows(); ++r) {
    EXPECT_DOUBLE_EQ((*proba)(r, 0), 0.5);
  }
}

TEST(LossTest, RegularizerGradientVanishesWithZeroLambda) {
  Model model = InitialModel(ModelArch::Logistic(2, 2), 0);
  model.params = {0.0, 0.0, 0.0};
  const Matrix x = Matrix::FromRows({{1.0, -1.0}});
  const std::vector<int> y = {1};
  auto with = ComputeLossAndGrad(model, x, y, 0.0);
  auto per = PerExampleGrads(model, x, y);
  ASSERT_TRUE(with.ok() && per.ok());
  for (size_t i = 0; i < 3; ++i) EXPECT_EQ(with->grad[i], (*per)(0, i));
}

TEST(LossTest, RegularizerSkipsBiases) {
  const Vector lr = RegularizationMask(ModelArch::Logistic(3, 2));
  EXPECT_EQ(lr, (Vector{1, 1, 1, 0}));
  const Vector multi = RegularizationMask(ModelArch::Logistic(2, 3));
  EXPECT_EQ(multi, (Vector{1, 1, 1, 1, 1, 1, 0, 0, 0}));
}

TEST(GradientCheckTest, LogisticBinaryAndMulticlass) {
  Rng rng(21);
  for (int c : {2, 4}) {
    const Dataset data = Blobs(64, 5, c, 2.0, 3);
    const ModelArch arch = ModelArch::Logistic(5, c);
    for (int point = 0; point < 20; ++point) {
      const Model model = RandomModel(arch, rng, 1.0);
      auto lg = ComputeLossAndGrad(model, data.features, data.labels, 0.01);
      ASSERT_TRUE(lg.ok());
      EXPECT_LE(RelativeError(lg->grad, FiniteDifferenceGrad(model, data, 0.01)),
                1e-5);
    }
  }
}

TEST(GradientCheckTest, Mlp) {
  Rng rng(22);
  const Dataset data = Blobs(24, 4, 3, 2.0, 4);
  ModelArch arch = ModelArch::Mlp(4, 3);
  for (int point = 0; point < 20; ++point) {
    Model model = RandomModel(arch, rng, 0.3);
    // Finite differences are only valid away from ReLU kinks.
    while (MinHiddenMargin(model, data.features) < 1e-4) {
      model = RandomModel(arch, rng, 0.3);
    }
    auto lg = ComputeLossAndGrad(model, data.features, data.labels, 0.01);
    ASSERT_TRUE(lg.ok());
    EXPECT_LE(RelativeError(lg->grad, FiniteDifferenceGrad(model, data, 0.01)),
              1e-5);
  }
}

TEST(PerExampleTest, MeanPlusRegularizerMatchesBatchGradient) {
  Rng rng(23);
  for (ArchKind kind : {ArchKind::kLogistic, ArchKind::kMlp}) {
    const Dataset data = Blobs(30, 4, 3, 2.0, 5);
    const ModelArch arch = kind == ArchKind::kLogistic
                               ? ModelArch::Logistic(4, 3)
                               : ModelArch::Mlp(4, 3);
    const Model model = RandomModel(arch, rng, 0.5);
    const double lambda = 0.05;
    auto per = PerExampleGrads(model, data.features, data.labels);
    auto full = ComputeLossAndGrad(model, data.features, data.labels, lambda);
    ASSERT_TRUE(per.ok() && full.ok());
    const Vector mean = MeanOfRows(*per);
    const Vector mask = RegularizationMask(arch);
    for (size_t i = 0; i < mean.size(); ++i) {
      EXPECT_NEAR(mean[i] + lambda * mask[i] * model.params[i], full->grad[i],
                  1e-10);
    }
  }
}

TEST(PerExampleTest, DuplicatedExampleGivesIdenticalRows) {
  Rng rng(24);
  const ModelArch arch = ModelArch::Mlp(3, 2);
  const Model model = RandomModel(arch, rng, 0.5);
  const Matrix x = Matrix::FromRows({{0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}});
  const std::vector<int> y = {1, 1};
  auto per = PerExampleGrads(model, x, y);
  ASSERT_TRUE(per.ok());
  for (size_t i = 0; i < per->cols(); ++i) EXPECT_EQ((*per)(0, i), (*per)(1, i));
}

TEST(TrainTest, SeparableBlobsReachHighAccuracy) {
  const Dataset data = Blobs(1000, 10, 2, 4.0, 7);
  auto split = MakeSplit(data, 1);
  auto model = Train(ModelArch::Logistic(10, 2),
                     data.Subset(split->target_train), TrainConfig{});
  ASSERT_TRUE(model.ok());
  EXPECT_GE(*Evaluate(*model, data.Subset(split->target_test)), 0.95);
}

TEST(TrainTest, IdentityMeanHookBitMatchesPlainTraining) {
  const Dataset data = Blobs(90, 4, 3, 2.0, 8);
  TrainConfig config;
  config.epochs = 5;
  config.batch_size = 32;
  config.seed = 77;
  GradientHook mean_hook = [](const Matrix& per_example,
                              std::span<const size_t>,
                              size_t) -> absl::StatusOr<Vector> {
    Vector sum(per_example.cols(), 0.0);
    for (size_t r = 0; r < per_example.rows(); ++r) {
      for (size_t c = 0; c < sum.size(); ++c) sum[c] += per_example(r, c);
    }
    const double inv = 1.0 / static_cast<double>(per_example.rows());
    for (double& v : sum) v *= inv;
    return sum;
  };
  for (const ModelArch& arch :
       {ModelArch::Logistic(4, 3), ModelArch::Mlp(4, 3)}) {
    auto plain = Train(arch, data, config);
    auto hooked = Train(arch, data, config, mean_hook);
    ASSERT_TRUE(plain.ok() && hooked.ok());
    EXPECT_EQ(plain->params, hooked->params);
  }
}

TEST(TrainTest, HookSeesEveryStepAndShortLastBatch) {
  const Dataset data = Blobs(70, 3, 2, 2.0, 9);
  TrainConfig config;
  config.epochs = 2;
  config.batch_size = 32;
  std::vector<size_t> sizes;
  std::vector<size_t> steps;
  GradientHook hook = [&](const Matrix& per_example,
                          std::span<const size_t> batch,
                          size_t step) -> absl::StatusOr<Vector> {
    sizes.push_back(batch.size());
    steps.push_back(step);
    EXPECT_EQ(per_example.rows(), batch.size());
    return MeanOfRows(per_example);
  };
  ASSERT_TRUE(Train(ModelArch::Logistic(3, 2), data, config, hook).ok());
  EXPECT_EQ(sizes, (std::vector<size_t>{32, 32, 6, 32, 32, 6}));
  EXPECT_EQ(steps, (std::vector<size_t>{0, 1, 2, 3, 4, 5}));
}

TEST(TrainTest, ZeroEpochsReturnsInitialization) {
  const Dataset data = Blobs(40, 3, 2, 2.0, 10);
  TrainConfig config;
  config.epochs = 0;
  config.seed = 5;
  const ModelArch arch = ModelArch::Mlp(3, 2);
  auto model = Train(arch, data, config);
  ASSERT_TRUE(model.ok());
  EXPECT_EQ(model->params, InitialModel(arch, config.seed).params);
}

TEST(TrainTest, DeterministicInSeed) {
  const Dataset data = Blobs(120, 4, 2, 2.0, 11);
  TrainConfig config;
  config.epochs = 3;
  config.batch_size = 16;
  config.seed = 3;
  auto a = Train(ModelArch::Mlp(4, 2), data, config);
  auto b = Train(ModelArch::Mlp(4, 2), data, config);
  EXPECT_EQ(a->params, b->params);
  config.seed = 4;
  EXPECT_NE(Train(ModelArch::Mlp(4, 2), data, config)->params, a->params);
}

TEST(TrainTest, DivergenceNamesTheStep) {
  const Dataset data = Blobs(40, 3, 2, 2.0, 12);
  GradientHook nan_hook = [](const Matrix& per_example, std::span<const size_t>,
                             size_t step) -> absl::StatusOr<Vector> {
    Vector g(per_example.cols(), step == 1 ? std::nan("") : 0.0);
    return g;
  };
  TrainConfig config;
  config.epochs = 2;
  config.batch_size = 40;
  auto model = Train(ModelArch::Logistic(3, 2), data, config, nan_hook);
  ASSERT_FALSE(model.ok());
  EXPECT_NE(model.status().message().find("step 1"), std::string::npos)
      << model.status();
}

TEST(TrainTest, FullBatchLogisticLossNonIncreasing) {
  const Dataset data = Blobs(200, 5, 2, 1.5, 13);
  TrainConfig config;
  config.batch_size = data.size();
  double previous = std::log(2.0);
  for (size_t epochs = 1; epochs <= 60; ++epochs) {
    config.epochs = epochs;
    auto model = Train(ModelArch::Logistic(5, 2), data, config);
    ASSERT_TRUE(model.ok());
    const double loss =
        ComputeLossAndGrad(*model, data.features, data.labels, config.lambda)
            ->loss;
    EXPECT_LE(loss, previous + 1e-9) << "epoch " << epochs;
    previous = loss;
  }
}

TEST(PredictTest, RowsSumToOneAndShapeChecked) {
  Rng rng(25);
  for (const ModelArch& arch :
       {ModelArch::Logistic(4, 2), ModelArch::Logistic(4, 5),
        ModelArch::Mlp(4, 5)}) {
    const Model model = RandomModel(arch, rng, 3.0);
    const Dataset data = Blobs(50, 4, 2, 2.0, 14);
    auto proba = PredictProba(model, data.features);
    ASSERT_TRUE(proba.ok());
    EXPECT_EQ(proba->cols(), static_cast<size_t>(arch.class_count));
    for (size_t r = 0; r < proba->rows(); ++r) {
      double sum = 0.0;
      for (double p : proba->row(r)) sum += p;
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
    EXPECT_FALSE(PredictProba(model, Matrix(2, 3)).ok());
  }
}

TEST(PredictTest, ArgMaxTiesGoToLowestIndex) {
  EXPECT_EQ(ArgMax(Vector{0.5, 0.5}), 0u);
  EXPECT_EQ(ArgMax(Vector{0.1, 0.3, 0.3}), 1u);
  EXPECT_DOUBLE_EQ(Accuracy(Matrix::FromRows({{0.9, 0.1}, {0.2, 0.8}}),
                            std::vector<int>{0, 0}),
                   0.5);
}

TEST(PredictTest, OverfitMlpMemorizesSmallTrainingSet) {
  const Dataset data = Blobs(50, 20, 2, 1.0, 15);
  TrainConfig config;
  config.epochs = 300;
  config.batch_size = 10;
  auto model = Train(ModelArch::Mlp(20, 2), data, config);
  ASSERT_TRUE(model.ok());
  EXPECT_GE(*Evaluate(*model, data), 0.98);
}

TEST(LinearFitTest, ReachesStationaryPoint) {
  const Dataset data = Blobs(300, 4, 2, 1.0, 16);
  std::vector<int> signs;
  for (int y : data.labels) signs.push_back(y == 1 ? 1 : -1);
  const Vector linear = {0.1, -0.2, 0.0, 0.3};
  auto fit = FitRegularizedLogistic(data.features, signs, 1e-2, linear);
  ASSERT_TRUE(fit.ok());
  const Vector g = RegularizedLogisticGradient(data.features, signs, 1e-2,
                                               linear, fit->theta);
  EXPECT_LE(L2Norm(g), 1e-9);
}

TEST(JsonTest, ModelRoundTrip) {
  Rng rng(26);
  Model model = RandomModel(ModelArch::Mlp(3, 2), rng, 1.0);
  model.config.epochs = 7;
  model.mechanism = "gradient";
  auto back = ModelFromJson(ModelToJson(model));
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back, model);
  nlohmann::json broken = ModelToJson(model);
  broken["params"].erase(0);
  EXPECT_FALSE(ModelFromJson(broken).ok());
}

}  // namespace
}  // namespace dputil
