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

#include "dputil/numkit.h"

#include <cmath>
#include <numbers>
#include <utility>

#include "absl/strings/str_format.h"

namespace dputil {
namespace {

uint64_t SplitMix64(uint64_t& x) {
  uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t Rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

uint64_t Fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

absl::StatusOr<Matrix> Matrix::FromData(size_t rows, size_t cols,
                                        Vector data) {
  if (data.size() != rows * cols) {
    return absl::InvalidArgumentError(
        absl::StrFormat("shape error: %d values for a %dx%d matrix",
                        data.size(), rows, cols));
  }
  Matrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_ = std::move(data);
  return m;
}

Matrix Matrix::FromRows(const std::vector<Vector>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < m.cols_; ++c) m(r, c) = rows[r].at(c);
  }
  return m;
}

Matrix Matrix::SelectRows(std::span<const size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

bool Matrix::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Rng::Rng(uint64_t seed) {
  uint64_t x = seed;
  for (auto& s : state_) s = SplitMix64(x);
}

Rng Rng::Derive(uint64_t master_seed, std::string_view label) {
  uint64_t x = master_seed;
  const uint64_t a = SplitMix64(x);
  uint64_t y = Fnv1a(label);
  const uint64_t b = SplitMix64(y);
  return Rng(a ^ Rotl(b, 17) ^ 0x5851f42d4c957f2dULL);
}

uint64_t Rng::NextU64() {
  const uint64_t result = Rotl(state_[1] * 5, 7) * 9;
  const uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = Rotl(state_[3], 45);
  return result;
}

double Rng::NextDouble() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double Rng::NextOpenDouble() {
  return (static_cast<double>(NextU64() >> 12) + 0.5) * 0x1.0p-52;
}

size_t Rng::UniformIndex(size_t n) {
  const unsigned __int128 product =
      static_cast<unsigned __int128>(NextU64()) * n;
  return static_cast<size_t>(product >> 64);
}

void Shuffle(std::span<size_t> values, Rng& rng) {
  for (size_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[rng.UniformIndex(i)]);
  }
}

absl::Status NoiseSpec::Validate() const {
  if (!(scale > 0) || !std::isfinite(scale)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("noise scale must be positive, got %g", scale));
  }
  if (count == 0) return absl::InvalidArgumentError("noise shape is empty");
  return absl::OkStatus();
}

absl::StatusOr<Vector> SampleLaplace(Rng& rng, double scale, size_t n) {
  if (!(scale > 0) || !std::isfinite(scale)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("Laplace scale must be positive, got %g", scale));
  }
  Vector out(n);
  for (double& v : out) {
    // u in (-1/2, 1/2); x = -b sgn(u) ln(1 - 2|u|)
    const double u = rng.NextOpenDouble() - 0.5;
    const double magnitude = -scale * std::log1p(-2.0 * std::abs(u));
    v = u < 0 ? -magnitude : magnitude;
  }
  return out;
}

absl::StatusOr<Vector> SampleGaussian(Rng& rng, double sigma, size_t n) {
  if (!(sigma > 0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("Gaussian sigma must be positive, got %g", sigma));
  }
  Vector out(n);
  for (size_t i = 0; i < n; i += 2) {
    const double u1 = rng.NextOpenDouble();
    const double u2 = rng.NextDouble();
    const double radius = sigma * std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[i] = radius * std::cos(angle);
    if (i + 1 < n) out[i + 1] = radius * std::sin(angle);
  }
  return out;
}

absl::StatusOr<Vector> SampleNoise(Rng& rng, const NoiseSpec& spec) {
  if (auto status = spec.Validate(); !status.ok()) return status;
  switch (spec.distribution) {
    case NoiseDistribution::kLaplace:
      return SampleLaplace(rng, spec.scale, spec.count);
    case NoiseDistribution::kGaussian:
      return SampleGaussian(rng, spec.scale, spec.count);
  }
  return absl::InternalError("unknown noise distribution");
}

absl::StatusOr<double> SampleErlang(Rng& rng, size_t shape, double scale) {
  if (shape == 0) return absl::InvalidArgumentError("Gamma shape must be >= 1");
  if (!(scale > 0) || !std::isfinite(scale)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("Gamma scale must be positive, got %g", scale));
  }
  double sum = 0.0;
  for (size_t i = 0; i < shape; ++i) sum -= std::log(rng.NextOpenDouble());
  return sum * scale;
}

Vector SampleUnitSphere(Rng& rng, size_t dim) {
  while (true) {
    Vector v = SampleGaussian(rng, 1.0, dim).value();
    const double norm = L2Norm(v);
    if (norm > 0) {
      for (double& x : v) x /= norm;
      return v;
    }
  }
}

absl::StatusOr<Vector> SampleHighDimLaplace(Rng& rng, size_t dim,
                                            double scale) {
  if (dim == 0) return absl::InvalidArgumentError("dimension must be >= 1");
  Vector direction = SampleUnitSphere(rng, dim);
  auto magnitude = SampleErlang(rng, dim, scale);
  if (!magnitude.ok()) return magnitude.status();
  for (double& x : direction) x *= *magnitude;
  return direction;
}

absl::StatusOr<Matrix> MatMul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("shape error: %dx%d times %dx%d", a.rows(), a.cols(),
                        b.rows(), b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (size_t i = 0; i < a.rows(); ++i) {
    for (size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

absl::Status Axpy(double alpha, std::span<const double> x,
                  std::span<double> y) {
  if (x.size() != y.size()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "shape error: axpy on lengths %d and %d", x.size(), y.size()));
  }
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
  return absl::OkStatus();
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double L2Norm(std::span<const double> v) { return std::sqrt(Dot(v, v)); }

void ClipToNorm(std::span<double> v, double bound) {
  const double norm = L2Norm(v);
  if (norm > bound) {
    const double factor = bound / norm;
    for (double& x : v) x *= factor;
  }
}

absl::StatusOr<Matrix> ClipRowsToNorm(const Matrix& m, double bound) {
  if (!(bound > 0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("clip bound must be positive, got %g", bound));
  }
  Matrix out = m;
  for (size_t r = 0; r < out.rows(); ++r) ClipToNorm(out.row(r), bound);
  return out;
}

Vector MeanOfRows(const Matrix& m) {
  Vector sum(m.cols(), 0.0);
  for (size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (size_t c = 0; c < m.cols(); ++c) sum[c] += row[c];
  }
  if (m.rows() > 0) {
    const double inv = 1.0 / static_cast<double>(m.rows());
    for (double& v : sum) v *= inv;
  }
  return sum;
}

}  // namespace dputil
