/* Copyright (c) 2026 The gtgen Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gtgen {

struct Dims3 {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;

  std::size_t volume() const { return i * j * k; }
  std::size_t sum() const { return i + j + k; }
  bool positive() const { return i > 0 && j > 0 && k > 0; }
  friend bool operator==(const Dims3&, const Dims3&) = default;
};

std::string to_string(const Dims3& d);

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Dense third-order tensor, row-major: index = (i*J + j)*K + k.
class DenseTensor3 {
 public:
  DenseTensor3() = default;
  explicit DenseTensor3(Dims3 dims, double fill = 0.0);
  DenseTensor3(Dims3 dims, std::vector<double> values);

  const Dims3& dims() const { return dims_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return values_[(i * dims_.j + j) * dims_.k + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[(i * dims_.j + j) * dims_.k + k];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

 private:
  Dims3 dims_;
  std::vector<double> values_;
};

/// CP factor matrices A (I x r), B (J x r), C (K x r). No weight vector:
/// component magnitudes live in the factors.
struct CPFactors {
  Matrix a;
  Matrix b;
  Matrix c;

  CPFactors() = default;
  CPFactors(Matrix a_, Matrix b_, Matrix c_);
  CPFactors(Dims3 dims, std::size_t rank);  // zero factors

  std::size_t rank() const { return a.cols(); }
  Dims3 dims() const { return {a.rows(), b.rows(), c.rows()}; }
};

/// Output rank of a generative head: a CP rank r >= 1, or the full tensor.
class RankSpec {
 public:
  static RankSpec full() { return RankSpec(); }
  static RankSpec of(std::size_t r);

  bool is_full() const { return !rank_; }
  std::size_t value() const;  // throws on Full

  std::string to_string() const;  // "full" or the decimal rank
  static RankSpec parse(const std::string& s);

  friend bool operator==(const RankSpec&, const RankSpec&) = default;

 private:
  RankSpec() = default;
  std::optional<std::size_t> rank_;
};

/// X[i,j,k] = sum_r A[i,r] B[j,r] C[k,r].
DenseTensor3 reconstruct(const CPFactors& f);

/// Gradient of <G, reconstruct(f)> with respect to each factor (MTTKRP of G
/// against the other two factors).
CPFactors reconstruct_backward(const CPFactors& f, const DenseTensor3& grad);

double frobenius_norm(const DenseTensor3& x);
double frobenius_distance(const DenseTensor3& x, const DenseTensor3& y);

/// Mode-n matricization with Kolda-style column ordering:
///   mode 1: I x JK, column = k*J + j
///   mode 2: J x IK, column = k*I + i
///   mode 3: K x IJ, column = j*I + i
/// so that X(1) = A (C kr B)^T, X(2) = B (C kr A)^T, X(3) = C (B kr A)^T.
Matrix unfold(const DenseTensor3& x, int mode);

/// Column-wise Kronecker product; row index = r1 * rows(m2) + r2.
Matrix khatri_rao(const Matrix& m1, const Matrix& m2);

/// Values a generative head emits per sample: I*J*K for Full, (I+J+K)*r else.
std::size_t output_param_count(const Dims3& dims, const RankSpec& rank);

/// Smallest CP rank whose factor output count reaches the full tensor size.
std::size_t full_matching_rank(const Dims3& dims);

/// Throws a numerical error if any entry is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);

}  // namespace gtgen
