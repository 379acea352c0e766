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
#include <numeric>

#include "absl/strings/str_format.h"
#include "dputil/status_macros.h"

namespace dputil {
namespace {

constexpr size_t kHiddenWidth = 64;

double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct LayerShape {
  size_t in = 0;
  size_t out = 0;
  size_t weight_offset = 0;
  size_t bias_offset = 0;
};

std::vector<LayerShape> Layers(const ModelArch& arch) {
  std::vector<size_t> widths;
  widths.push_back(arch.input_dim);
  if (arch.kind == ArchKind::kMlp) {
    widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
  }
  const bool binary_lr =
      arch.kind == ArchKind::kLogistic && arch.class_count == 2;
  widths.push_back(binary_lr ? 1 : static_cast<size_t>(arch.class_count));
  std::vector<LayerShape> layers;
  size_t offset = 0;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    LayerShape shape;
    shape.in = widths[l];
    shape.out = widths[l + 1];
    shape.weight_offset = offset;
    shape.bias_offset = offset + shape.in * shape.out;
    offset = shape.bias_offset + shape.out;
    layers.push_back(shape);
  }
  return layers;
}

bool IsBinaryLogistic(const ModelArch& arch) {
  return arch.kind == ArchKind::kLogistic && arch.class_count == 2;
}

// Scratch buffers reused across examples of one batch.
struct Workspace {
  std::vector<Vector> pre;   // pre-activations per layer
  std::vector<Vector> post;  // activations per layer (post[0] unused)
  Vector delta;
  Vector next_delta;
  Vector proba;
};

// Forward pass; leaves softmax/sigmoid output in ws.proba and returns the
// output-layer logits in ws.pre.back().
void Forward(const ModelArch& arch, const std::vector<LayerShape>& layers,
             std::span<const double> params, std::span<const double> x,
             Workspace& ws) {
  ws.pre.resize(layers.size());
  ws.post.resize(layers.size());
  std::span<const double> input = x;
  for (size_t l = 0; l < layers.size(); ++l) {
    const LayerShape& s = layers[l];
    Vector& z = ws.pre[l];
    z.assign(s.out, 0.0);
    for (size_t o = 0; o < s.out; ++o) {
      const double* w = params.data() + s.weight_offset + o * s.in;
      double sum = params[s.bias_offset + o];
      for (size_t i = 0; i < s.in; ++i) sum += w[i] * input[i];
      z[o] = sum;
    }
    if (l + 1 < layers.size()) {
      Vector& a = ws.post[l];
      a.resize(s.out);
      for (size_t o = 0; o < s.out; ++o) a[o] = z[o] > 0 ? z[o] : 0.0;
      input = a;
    }
  }
  const Vector& logits = ws.pre.back();
  const size_t c = static_cast<size_t>(arch.class_count);
  ws.proba.assign(c, 0.0);
  if (IsBinaryLogistic(arch)) {
    const double p1 = Sigmoid(logits[0]);
    ws.proba[0] = 1.0 - p1;
    ws.proba[1] = p1;
    return;
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (size_t k = 0; k < c; ++k) {
    ws.proba[k] = std::exp(logits[k] - m);
    total += ws.proba[k];
  }
  for (double& p : ws.proba) p /= total;
}

// Loss of one example; writes its data gradient into `grad` (overwritten).
double ExampleLossGrad(const ModelArch& arch,
                       const std::vector<LayerShape>& layers,
                       std::span<const double> params,
                       std::span<const double> x, int y,
                       std::span<double> grad, Workspace& ws) {
  Forward(arch, layers, params, x, ws);
  const Vector& logits = ws.pre.back();
  double loss = 0.0;
  ws.delta.assign(layers.back().out, 0.0);
  if (IsBinaryLogistic(arch)) {
    loss = Softplus(logits[0]) - (y == 1 ? logits[0] : 0.0);
    ws.delta[0] = ws.proba[1] - (y == 1 ? 1.0 : 0.0);
  } else {
    const double m = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double z : logits) total += std::exp(z - m);
    loss = std::log(total) + m - logits[y];
    for (size_t k = 0; k < ws.delta.size(); ++k) {
      ws.delta[k] = ws.proba[k] - (static_cast<int>(k) == y ? 1.0 : 0.0);
    }
  }
  for (size_t l = layers.size(); l-- > 0;) {
    const LayerShape& s = layers[l];
    std::span<const double> input =
        l == 0 ? x : std::span<const double>(ws.post[l - 1]);
    for (size_t o = 0; o < s.out; ++o) {
      const double d = ws.delta[o];
      double* gw = grad.data() + s.weight_offset + o * s.in;
      for (size_t i = 0; i < s.in; ++i) gw[i] = d * input[i];
      grad[s.bias_offset + o] = d;
    }
    if (l == 0) break;
    ws.next_delta.assign(s.in, 0.0);
    for (size_t o = 0; o < s.out; ++o) {
      const double d = ws.delta[o];
      if (d == 0.0) continue;
      const double* w = params.data() + s.weight_offset + o * s.in;
      for (size_t i = 0; i < s.in; ++i) ws.next_delta[i] += w[i] * d;
    }
    const Vector& z_prev = ws.pre[l - 1];
    for (size_t i = 0; i < s.in; ++i) {
      if (z_prev[i] <= 0) ws.next_delta[i] = 0.0;
    }
    std::swap(ws.delta, ws.next_delta);
  }
  return loss;
}

absl::Status CheckBatch(const Model& model, const Matrix& features,
                        std::span<const int> labels) {
  if (features.rows() == 0) return absl::InvalidArgumentError("empty batch");
  if (features.rows() != labels.size()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("shape error: %d rows but %d labels", features.rows(),
                        labels.size()));
  }
  if (features.cols() != model.arch.input_dim) {
    return absl::InvalidArgumentError(
        absl::StrFormat("shape error: feature dim %d, model expects %d",
                        features.cols(), model.arch.input_dim));
  }
  if (model.params.size() != model.arch.ParameterCount()) {
    return absl::InvalidArgumentError("parameter vector does not match arch");
  }
  for (int y : labels) {
    if (y < 0 || y >= model.arch.class_count) {
      return absl::InvalidArgumentError(
          absl::StrFormat("label %d outside [0, %d)", y,
                          model.arch.class_count));
    }
  }
  return absl::OkStatus();
}

// Data-term mean gradient plus lambda * mask * theta. Shared by the hooked
// and plain training paths so the two agree bit for bit.
void AddRegularizerGradient(const Vector& mask, double lambda,
                            std::span<const double> params,
                            std::span<double> grad) {
  for (size_t i = 0; i < grad.size(); ++i) {
    grad[i] = grad[i] + lambda * mask[i] * params[i];
  }
}

double RegularizerValue(const Vector& mask, double lambda,
                        std::span<const double> params) {
  double sum = 0.0;
  for (size_t i = 0; i < params.size(); ++i) {
    sum += mask[i] * params[i] * params[i];
  }
  return 0.5 * lambda * sum;
}

// Sequential sum of example gradients times 1/batch, in the same order and
// arithmetic as MeanOfRows.
absl::StatusOr<std::pair<double, Vector>> MeanDataLossGrad(
    const Model& model, const Matrix& features, std::span<const int> labels) {
  const auto layers = Layers(model.arch);
  const size_t p = model.params.size();
  Vector sum(p, 0.0);
  Vector row(p);
  Workspace ws;
  double loss_sum = 0.0;
  for (size_t r = 0; r < features.rows(); ++r) {
    const double loss = ExampleLossGrad(model.arch, layers, model.params,
                                        features.row(r), labels[r], row, ws);
    if (!std::isfinite(loss)) {
      return absl::OutOfRangeError(
          absl::StrFormat("numerical error: non-finite loss at batch "
                          "example %d",
                          r));
    }
    loss_sum += loss;
    for (size_t i = 0; i < p; ++i) sum[i] += row[i];
  }
  const double inv = 1.0 / static_cast<double>(features.rows());
  for (double& v : sum) v *= inv;
  return std::make_pair(loss_sum / static_cast<double>(features.rows()),
                        std::move(sum));
}

// Solves a x = b in place for symmetric positive definite a (n x n).
bool CholeskySolve(std::vector<double> a, size_t n, Vector& b) {
  for (size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0)) return false;
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  for (size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (size_t i = n; i-- > 0;) {
    double s = b[i];
    for (size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return true;
}

double RegularizedLogisticObjective(const Matrix& x,
                                    std::span<const int> y, double lambda,
                                    std::span<const double> linear_term,
                                    std::span<const double> theta) {
  const double n = static_cast<double>(x.rows());
  double loss = 0.0;
  for (size_t i = 0; i < x.rows(); ++i) {
    loss += Softplus(-y[i] * Dot(x.row(i), theta));
  }
  return loss / n + 0.5 * lambda * Dot(theta, theta) +
         Dot(linear_term, theta) / n;
}

}  // namespace

std::string ArchKindName(ArchKind kind) {
  return kind == ArchKind::kLogistic ? "LR" : "MLP";
}

absl::StatusOr<ArchKind> ParseArchKind(std::string_view name) {
  if (name == "LR" || name == "lr") return ArchKind::kLogistic;
  if (name == "MLP" || name == "mlp") return ArchKind::kMlp;
  return absl::InvalidArgumentError(
      absl::StrFormat("unknown arch '%s' (expected LR or MLP)", std::string(name)));
}

ModelArch ModelArch::Logistic(size_t input_dim, int class_count) {
  return ModelArch{ArchKind::kLogistic, input_dim, class_count, {}};
}

ModelArch ModelArch::Mlp(size_t input_dim, int class_count) {
  return ModelArch{ArchKind::kMlp, input_dim, class_count,
                   {kHiddenWidth, kHiddenWidth}};
}

size_t ModelArch::ParameterCount() const {
  const auto layers = Layers(*this);
  return layers.back().bias_offset + layers.back().out;
}

absl::Status ModelArch::Validate() const {
  if (input_dim == 0) return absl::InvalidArgumentError("input_dim is zero");
  if (class_count < 2) {
    return absl::InvalidArgumentError("class_count must be at least 2");
  }
  if (kind == ArchKind::kLogistic && !hidden.empty()) {
    return absl::InvalidArgumentError("LR has no hidden layers");
  }
  if (kind == ArchKind::kMlp &&
      hidden != std::vector<size_t>{kHiddenWidth, kHiddenWidth}) {
    return absl::InvalidArgumentError("MLP hidden widths must be [64, 64]");
  }
  return absl::OkStatus();
}

absl::Status TrainConfig::Validate() const {
  if (!(learning_rate > 0)) {
    return absl::InvalidArgumentError("learning_rate must be positive");
  }
  if (batch_size == 0) {
    return absl::InvalidArgumentError("batch_size must be positive");
  }
  if (!(lambda >= 0)) return absl::InvalidArgumentError("lambda must be >= 0");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 &&
        adam.beta2 < 1 && adam.epsilon > 0)) {
    return absl::InvalidArgumentError("invalid Adam parameters");
  }
  return absl::OkStatus();
}

Model InitialModel(const ModelArch& arch, uint64_t seed) {
  Model model;
  model.arch = arch;
  model.params.assign(arch.ParameterCount(), 0.0);
  if (arch.kind == ArchKind::kMlp) {
    Rng rng = Rng::Derive(seed, "init");
    for (const LayerShape& s : Layers(arch)) {
      const double limit = std::sqrt(6.0 / static_cast<double>(s.in));
      for (size_t i = 0; i < s.in * s.out; ++i) {
        model.params[s.weight_offset + i] =
            (2.0 * rng.NextDouble() - 1.0) * limit;
      }
    }
  }
  return model;
}

Vector RegularizationMask(const ModelArch& arch) {
  Vector mask(arch.ParameterCount(), 0.0);
  for (const LayerShape& s : Layers(arch)) {
    std::fill(mask.begin() + s.weight_offset, mask.begin() + s.bias_offset,
              1.0);
  }
  return mask;
}

absl::StatusOr<LossAndGrad> ComputeLossAndGrad(const Model& model,
                                               const Matrix& features,
                                               std::span<const int> labels,
                                               double lambda) {
  RETURN_IF_ERROR(CheckBatch(model, features, labels));
  ASSIGN_OR_RETURN(auto data, MeanDataLossGrad(model, features, labels));
  const Vector mask = RegularizationMask(model.arch);
  LossAndGrad out;
  out.loss = data.first + RegularizerValue(mask, lambda, model.params);
  out.grad = std::move(data.second);
  AddRegularizerGradient(mask, lambda, model.params, out.grad);
  return out;
}

absl::StatusOr<Matrix> PerExampleGrads(const Model& model,
                                       const Matrix& features,
                                       std::span<const int> labels) {
  RETURN_IF_ERROR(CheckBatch(model, features, labels));
  const auto layers = Layers(model.arch);
  Matrix out(features.rows(), model.params.size());
  Workspace ws;
  for (size_t r = 0; r < features.rows(); ++r) {
    const double loss = ExampleLossGrad(model.arch, layers, model.params,
                                        features.row(r), labels[r],
                                        out.row(r), ws);
    if (!std::isfinite(loss)) {
      return absl::OutOfRangeError(absl::StrFormat(
          "numerical error: non-finite loss at batch example %d", r));
    }
  }
  return out;
}

absl::StatusOr<Model> Train(const ModelArch& arch, const Dataset& slice,
                            const TrainConfig& config,
                            const GradientHook& hook) {
  RETURN_IF_ERROR(arch.Validate());
  RETURN_IF_ERROR(config.Validate());
  if (slice.size() == 0) {
    return absl::InvalidArgumentError("cannot train on an empty slice");
  }
  if (slice.dim() != arch.input_dim) {
    return absl::InvalidArgumentError(
        absl::StrFormat("shape error: slice dim %d, arch expects %d",
                        slice.dim(), arch.input_dim));
  }
  Model model = InitialModel(arch, config.seed);
  model.config = config;
  const size_t n = slice.size();
  const size_t p = model.params.size();
  const size_t batch_size = std::min(config.batch_size, n);
  const Vector mask = RegularizationMask(arch);
  Vector m(p, 0.0);
  Vector v(p, 0.0);
  double beta1_power = 1.0;
  double beta2_power = 1.0;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::Derive(config.seed, "shuffle");
  size_t step = 0;
  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Shuffle(order, rng);
    for (size_t start = 0; start < n; start += batch_size) {
      const size_t end = std::min(start + batch_size, n);
      std::span<const size_t> batch(order.data() + start, end - start);
      const Matrix x = slice.features.SelectRows(batch);
      std::vector<int> y(batch.size());
      for (size_t i = 0; i < batch.size(); ++i) y[i] = slice.labels[batch[i]];

      Vector grad;
      if (hook) {
        ASSIGN_OR_RETURN(Matrix per_example, PerExampleGrads(model, x, y));
        ASSIGN_OR_RETURN(grad, hook(per_example, batch, step));
        if (grad.size() != p) {
          return absl::InvalidArgumentError(
              "gradient hook returned a vector of the wrong length");
        }
      } else {
        auto data = MeanDataLossGrad(model, x, y);
        if (!data.ok()) {
          return absl::OutOfRangeError(absl::StrFormat(
              "training error at step %d: %s", step, data.status().message()));
        }
        grad = std::move(data->second);
      }
      AddRegularizerGradient(mask, config.lambda, model.params, grad);

      ++step;
      beta1_power *= config.adam.beta1;
      beta2_power *= config.adam.beta2;
      const double lr = config.learning_rate;
      for (size_t i = 0; i < p; ++i) {
        m[i] = config.adam.beta1 * m[i] + (1 - config.adam.beta1) * grad[i];
        v[i] = config.adam.beta2 * v[i] +
               (1 - config.adam.beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / (1 - beta1_power);
        const double v_hat = v[i] / (1 - beta2_power);
        model.params[i] -= lr * m_hat / (std::sqrt(v_hat) + config.adam.epsilon);
      }
      for (double w : model.params) {
        if (!std::isfinite(w)) {
          return absl::OutOfRangeError(absl::StrFormat(
              "training error: parameters diverged at step %d", step - 1));
        }
      }
    }
  }
  return model;
}

absl::StatusOr<Matrix> PredictProba(const Model& model,
                                    const Matrix& features) {
  if (features.cols() != model.arch.input_dim) {
    return absl::InvalidArgumentError(
        absl::StrFormat("shape error: feature dim %d, model expects %d",
                        features.cols(), model.arch.input_dim));
  }
  if (model.params.size() != model.arch.ParameterCount()) {
    return absl::InvalidArgumentError("parameter vector does not match arch");
  }
  const auto layers = Layers(model.arch);
  Matrix out(features.rows(), static_cast<size_t>(model.arch.class_count));
  Workspace ws;
  for (size_t r = 0; r < features.rows(); ++r) {
    Forward(model.arch, layers, model.params, features.row(r), ws);
    std::copy(ws.proba.begin(), ws.proba.end(), out.row(r).begin());
  }
  return out;
}

size_t ArgMax(std::span<const double> values) {
  size_t best = 0;
  for (size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double Accuracy(const Matrix& proba, std::span<const int> labels) {
  if (proba.rows() == 0) return 0.0;
  size_t correct = 0;
  for (size_t r = 0; r < proba.rows(); ++r) {
    if (static_cast<int>(ArgMax(proba.row(r))) == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(proba.rows());
}

absl::StatusOr<double> Evaluate(const Model& model, const Dataset& slice) {
  ASSIGN_OR_RETURN(Matrix proba, PredictProba(model, slice.features));
  return Accuracy(proba, slice.labels);
}

Vector RegularizedLogisticGradient(const Matrix& features,
                                   std::span<const int> signed_labels,
                                   double lambda,
                                   std::span<const double> linear_term,
                                   std::span<const double> theta) {
  const size_t dim = theta.size();
  const double n = static_cast<double>(features.rows());
  Vector grad(dim, 0.0);
  for (size_t i = 0; i < features.rows(); ++i) {
    auto x = features.row(i);
    const double y = signed_labels[i];
    // d/dz softplus(-y z) = -y * sigmoid(-y z)
    const double coeff = -y * Sigmoid(-y * Dot(x, theta));
    for (size_t j = 0; j < dim; ++j) grad[j] += coeff * x[j];
  }
  for (size_t j = 0; j < dim; ++j) {
    grad[j] = grad[j] / n + lambda * theta[j] + linear_term[j] / n;
  }
  return grad;
}

absl::StatusOr<LinearFit> FitRegularizedLogistic(
    const Matrix& features, std::span<const int> signed_labels, double lambda,
    std::span<const double> linear_term, double tolerance,
    size_t max_iterations) {
  const size_t dim = features.cols();
  if (features.rows() == 0 || features.rows() != signed_labels.size()) {
    return absl::InvalidArgumentError("shape error: empty or mismatched fit");
  }
  if (linear_term.size() != dim) {
    return absl::InvalidArgumentError("shape error: linear term length");
  }
  for (int y : signed_labels) {
    if (y != 1 && y != -1) {
      return absl::InvalidArgumentError("labels must be -1 or +1");
    }
  }
  if (!(lambda > 0)) {
    return absl::InvalidArgumentError("lambda must be positive");
  }
  const double n = static_cast<double>(features.rows());
  LinearFit fit;
  fit.theta.assign(dim, 0.0);
  Vector grad = RegularizedLogisticGradient(features, signed_labels, lambda,
                                            linear_term, fit.theta);
  double objective = RegularizedLogisticObjective(
      features, signed_labels, lambda, linear_term, fit.theta);
  for (; fit.iterations < max_iterations; ++fit.iterations) {
    if (L2Norm(grad) <= tolerance) break;
    std::vector<double> hessian(dim * dim, 0.0);
    for (size_t i = 0; i < features.rows(); ++i) {
      auto x = features.row(i);
      const double s = Sigmoid(Dot(x, fit.theta));
      const double w = s * (1.0 - s) / n;
      if (w == 0.0) continue;
      for (size_t a = 0; a < dim; ++a) {
        for (size_t b = 0; b <= a; ++b) hessian[a * dim + b] += w * x[a] * x[b];
      }
    }
    for (size_t a = 0; a < dim; ++a) {
      hessian[a * dim + a] += lambda;
      for (size_t b = a + 1; b < dim; ++b) {
        hessian[a * dim + b] = hessian[b * dim + a];
      }
    }
    Vector direction = grad;
    if (!CholeskySolve(hessian, dim, direction)) {
      return absl::InternalError("Newton system is not positive definite");
    }
    for (double& x : direction) x = -x;
    const double slope = Dot(grad, direction);
    double step = 1.0;
    Vector candidate(dim);
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
      for (size_t j = 0; j < dim; ++j) {
        candidate[j] = fit.theta[j] + step * direction[j];
      }
      const double value = RegularizedLogisticObjective(
          features, signed_labels, lambda, linear_term, candidate);
      if (value <= objective + 1e-4 * step * slope) {
        objective = value;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Objective differences are below rounding; accept the full step if it
      // shrinks the gradient, otherwise stop where we are.
      for (size_t j = 0; j < dim; ++j) {
        candidate[j] = fit.theta[j] + direction[j];
      }
      Vector g = RegularizedLogisticGradient(features, signed_labels, lambda,
                                             linear_term, candidate);
      if (L2Norm(g) >= L2Norm(grad)) break;
      objective = RegularizedLogisticObjective(features, signed_labels,
                                               lambda, linear_term, candidate);
    }
    fit.theta = candidate;
    grad = RegularizedLogisticGradient(features, signed_labels, lambda,
                                       linear_term, fit.theta);
  }
  fit.gradient_norm = L2Norm(grad);
  return fit;
}

nlohmann::json TrainConfigToJson(const TrainConfig& config) {
  return {{"epochs", config.epochs},
          {"learning_rate", config.learning_rate},
          {"batch_size", config.batch_size},
          {"lambda", config.lambda},
          {"adam",
           {{"beta1", config.adam.beta1},
            {"beta2", config.adam.beta2},
            {"epsilon", config.adam.epsilon}}},
          {"seed", config.seed}};
}

absl::StatusOr<TrainConfig> TrainConfigFromJson(const nlohmann::json& j,
                                                TrainConfig defaults) {
  TrainConfig c = defaults;
  try {
    if (!j.is_object()) {
      return absl::InvalidArgumentError("train config must be an object");
    }
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lambda = j.value("lambda", c.lambda);
    c.seed = j.value("seed", c.seed);
    if (j.contains("adam")) {
      const auto& a = j.at("adam");
      c.adam.beta1 = a.value("beta1", c.adam.beta1);
      c.adam.beta2 = a.value("beta2", c.adam.beta2);
      c.adam.epsilon = a.value("epsilon", c.adam.epsilon);
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrFormat("train config: %s", e.what()));
  }
  RETURN_IF_ERROR(c.Validate());
  return c;
}

nlohmann::json ModelToJson(const Model& model) {
  return {{"format", "dputil-model/1"},
          {"arch",
           {{"kind", ArchKindName(model.arch.kind)},
            {"input_dim", model.arch.input_dim},
            {"class_count", model.arch.class_count},
            {"hidden", model.arch.hidden}}},
          {"params", model.params},
          {"config", TrainConfigToJson(model.config)},
          {"mechanism", model.mechanism}};
}

absl::StatusOr<Model> ModelFromJson(const nlohmann::json& j) {
  Model model;
  try {
    if (j.value("format", "") != "dputil-model/1") {
      return absl::InvalidArgumentError("not a dputil-model/1 record");
    }
    const auto& a = j.at("arch");
    ASSIGN_OR_RETURN(model.arch.kind,
                     ParseArchKind(a.at("kind").get<std::string>()));
    model.arch.input_dim = a.at("input_dim").get<size_t>();
    model.arch.class_count = a.at("class_count").get<int>();
    model.arch.hidden = a.at("hidden").get<std::vector<size_t>>();
    model.params = j.at("params").get<Vector>();
    model.mechanism = j.value("mechanism", "nonprivate");
    ASSIGN_OR_RETURN(model.config, TrainConfigFromJson(j.at("config")));
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrFormat("model record: %s", e.what()));
  }
  RETURN_IF_ERROR(model.arch.Validate());
  if (model.params.size() != model.arch.ParameterCount()) {
    return absl::InvalidArgumentError(
        "model record: parameter count does not match arch");
  }
  for (double w : model.params) {
    if (!std::isfinite(w)) {
      return absl::InvalidArgumentError("model record: non-finite parameter");
    }
  }
  return model;
}

}  // namespace dputil
