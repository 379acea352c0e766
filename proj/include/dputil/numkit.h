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

// Dense linear algebra, the seeded generator and the noise samplers shared by
// every mechanism. All arithmetic is in double precision.

#ifndef DPUTIL_NUMKIT_H_
#define DPUTIL_NUMKIT_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace dputil {

using Vector = std::vector<double>;

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  // Fails when data.size() != rows * cols.
  static absl::StatusOr<Matrix> FromData(size_t rows, size_t cols,
                                         Vector data);
  static Matrix FromRows(const std::vector<Vector>& rows);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  const Vector& data() const { return data_; }
  Vector& mutable_data() { return data_; }

  // Copies the listed rows, in order.
  Matrix SelectRows(std::span<const size_t> indices) const;

  bool AllFinite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  Vector data_;
};

// xoshiro256** with splitmix64 seeding. The stream for a given seed is fixed
// for all releases; results files depend on it.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "xoshiro256**/splitmix64";

  explicit Rng(uint64_t seed);

  // Independent stream for (master_seed, label). Label hashing is FNV-1a, so
  // distinct labels give unrelated streams.
  static Rng Derive(uint64_t master_seed, std::string_view label);

  uint64_t NextU64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double NextDouble();
  // Uniform on (0, 1).
  double NextOpenDouble();
  // Uniform integer in [0, n). n must be positive.
  size_t UniformIndex(size_t n);

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::array<uint64_t, 4> state_;
};

void Shuffle(std::span<size_t> values, Rng& rng);

enum class NoiseDistribution { kLaplace, kGaussian };

struct NoiseSpec {
  NoiseDistribution distribution = NoiseDistribution::kLaplace;
  // Laplace b or Gaussian sigma.
  double scale = 1.0;
  size_t count = 1;

  absl::Status Validate() const;
};

// Laplace(0, scale) by inverse CDF.
absl::StatusOr<Vector> SampleLaplace(Rng& rng, double scale, size_t n);
// N(0, sigma^2) by the Box-Muller transform; each pair of uniforms yields two
// draws, and an odd trailing draw discards its partner.
absl::StatusOr<Vector> SampleGaussian(Rng& rng, double sigma, size_t n);
absl::StatusOr<Vector> SampleNoise(Rng& rng, const NoiseSpec& spec);

// Gamma(shape, scale) for integer shape (sum of exponentials).
absl::StatusOr<double> SampleErlang(Rng& rng, size_t shape, double scale);
// Uniformly distributed unit vector in R^dim.
Vector SampleUnitSphere(Rng& rng, size_t dim);
// Draw with density proportional to exp(-||b|| / scale): uniform direction,
// Gamma(dim, scale) magnitude.
absl::StatusOr<Vector> SampleHighDimLaplace(Rng& rng, size_t dim,
                                            double scale);

absl::StatusOr<Matrix> MatMul(const Matrix& a, const Matrix& b);
// y += alpha * x
absl::Status Axpy(double alpha, std::span<const double> x,
                  std::span<double> y);
double Dot(std::span<const double> a, std::span<const double> b);
double L2Norm(std::span<const double> v);
// Scales each row r to r * min(1, bound / ||r||).
absl::StatusOr<Matrix> ClipRowsToNorm(const Matrix& m, double bound);
void ClipToNorm(std::span<double> v, double bound);
// Sequential row sum multiplied by 1/rows. Every gradient average in the
// library goes through here so that equal inputs give equal bits.
Vector MeanOfRows(const Matrix& m);

}  // namespace dputil

#endif  // DPUTIL_NUMKIT_H_
