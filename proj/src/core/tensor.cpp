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

#include "gtgen/tensor.hpp"

#include <cmath>
#include <vector>

#include "gtgen/error.hpp"

namespace gtgen {

std::string to_string(const Dims3& d) {
  return std::to_string(d.i) + "x" + std::to_string(d.j) + "x" +
         std::to_string(d.k);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    fail_usage("matrix data length " + std::to_string(data_.size()) +
               " does not match " + std::to_string(rows_) + "x" +
               std::to_string(cols_));
  }
}

DenseTensor3::DenseTensor3(Dims3 dims, double fill)
    : dims_(dims), values_(dims.volume(), fill) {
  if (!dims.positive()) fail_usage("tensor dims must be positive, got " + to_string(dims));
}

DenseTensor3::DenseTensor3(Dims3 dims, std::vector<double> values)
    : dims_(dims), values_(std::move(values)) {
  if (!dims.positive()) fail_usage("tensor dims must be positive, got " + to_string(dims));
  if (values_.size() != dims.volume()) {
    fail_usage("tensor value count " + std::to_string(values_.size()) +
               " does not match dims " + to_string(dims));
  }
}

CPFactors::CPFactors(Matrix a_, Matrix b_, Matrix c_)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)) {
  if (a.cols() == 0 || a.cols() != b.cols() || a.cols() != c.cols()) {
    fail_usage("CP factors must share a rank >= 1");
  }
  if (a.rows() == 0 || b.rows() == 0 || c.rows() == 0) {
    fail_usage("CP factors must have at least one row");
  }
}

CPFactors::CPFactors(Dims3 dims, std::size_t rank)
    : CPFactors(Matrix(dims.i, rank), Matrix(dims.j, rank), Matrix(dims.k, rank)) {}

RankSpec RankSpec::of(std::size_t r) {
  if (r == 0) fail_usage("rank must be >= 1");
  RankSpec s;
  s.rank_ = r;
  return s;
}

std::size_t RankSpec::value() const {
  if (!rank_) fail_usage("rank is Full; no CP rank");
  return *rank_;
}

std::string RankSpec::to_string() const {
  return rank_ ? std::to_string(*rank_) : std::string("full");
}

RankSpec RankSpec::parse(const std::string& s) {
  if (s == "full" || s == "Full" || s == "FULL") return full();
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (...) {
    fail_usage("invalid rank '" + s + "'");
  }
  if (pos != s.size()) fail_usage("invalid rank '" + s + "'");
  return of(static_cast<std::size_t>(v));
}

DenseTensor3 reconstruct(const CPFactors& f) {
  const Dims3 d = f.dims();
  const std::size_t r = f.rank();
  DenseTensor3 x(d);
  std::vector<double> ab(r);
  for (std::size_t i = 0; i < d.i; ++i) {
    for (std::size_t j = 0; j < d.j; ++j) {
      for (std::size_t q = 0; q < r; ++q) ab[q] = f.a(i, q) * f.b(j, q);
      for (std::size_t k = 0; k < d.k; ++k) {
        double s = 0.0;
        for (std::size_t q = 0; q < r; ++q) s += ab[q] * f.c(k, q);
        x(i, j, k) = s;
      }
    }
  }
  return x;
}

CPFactors reconstruct_backward(const CPFactors& f, const DenseTensor3& grad) {
  const Dims3 d = f.dims();
  if (!(grad.dims() == d)) {
    fail_usage("gradient dims " + to_string(grad.dims()) +
               " do not match factor dims " + to_string(d));
  }
  const std::size_t r = f.rank();
  CPFactors g(d, r);
  std::vector<double> w(r);
  std::vector<double> ab(r);
  for (std::size_t i = 0; i < d.i; ++i) {
    for (std::size_t j = 0; j < d.j; ++j) {
      std::fill(w.begin(), w.end(), 0.0);
      for (std::size_t q = 0; q < r; ++q) ab[q] = f.a(i, q) * f.b(j, q);
      for (std::size_t k = 0; k < d.k; ++k) {
        const double gv = grad(i, j, k);
        for (std::size_t q = 0; q < r; ++q) {
          w[q] += gv * f.c(k, q);
          g.c(k, q) += gv * ab[q];
        }
      }
      for (std::size_t q = 0; q < r; ++q) {
        g.a(i, q) += f.b(j, q) * w[q];
        g.b(j, q) += f.a(i, q) * w[q];
      }
    }
  }
  return g;
}

double frobenius_norm(const DenseTensor3& x) {
  double s = 0.0;
  for (double v : x.values()) s += v * v;
  return std::sqrt(s);
}

double frobenius_distance(const DenseTensor3& x, const DenseTensor3& y) {
  if (!(x.dims() == y.dims())) {
    fail_usage("shape mismatch: " + to_string(x.dims()) + " vs " +
               to_string(y.dims()));
  }
  double s = 0.0;
  const auto xv = x.values();
  const auto yv = y.values();
  for (std::size_t n = 0; n < xv.size(); ++n) {
    const double e = xv[n] - yv[n];
    s += e * e;
  }
  return std::sqrt(s);
}

Matrix unfold(const DenseTensor3& x, int mode) {
  const Dims3 d = x.dims();
  switch (mode) {
    case 1: {
      Matrix m(d.i, d.j * d.k);
      for (std::size_t i = 0; i < d.i; ++i)
        for (std::size_t j = 0; j < d.j; ++j)
          for (std::size_t k = 0; k < d.k; ++k) m(i, k * d.j + j) = x(i, j, k);
      return m;
    }
    case 2: {
      Matrix m(d.j, d.i * d.k);
      for (std::size_t i = 0; i < d.i; ++i)
        for (std::size_t j = 0; j < d.j; ++j)
          for (std::size_t k = 0; k < d.k; ++k) m(j, k * d.i + i) = x(i, j, k);
      return m;
    }
    case 3: {
      Matrix m(d.k, d.i * d.j);
      for (std::size_t i = 0; i < d.i; ++i)
        for (std::size_t j = 0; j < d.j; ++j)
          for (std::size_t k = 0; k < d.k; ++k) m(k, j * d.i + i) = x(i, j, k);
      return m;
    }
    default:
      fail_usage("unfold mode must be 1, 2 or 3, got " + std::to_string(mode));
  }
}

Matrix khatri_rao(const Matrix& m1, const Matrix& m2) {
  if (m1.cols() != m2.cols()) {
    fail_usage("khatri_rao column mismatch: " + std::to_string(m1.cols()) +
               " vs " + std::to_string(m2.cols()));
  }
  const std::size_t cols = m1.cols();
  Matrix out(m1.rows() * m2.rows(), cols);
  for (std::size_t r1 = 0; r1 < m1.rows(); ++r1)
    for (std::size_t r2 = 0; r2 < m2.rows(); ++r2)
      for (std::size_t c = 0; c < cols; ++c)
        out(r1 * m2.rows() + r2, c) = m1(r1, c) * m2(r2, c);
  return out;
}

std::size_t output_param_count(const Dims3& dims, const RankSpec& rank) {
  if (rank.is_full()) return dims.volume();
  return dims.sum() * rank.value();
}

std::size_t full_matching_rank(const Dims3& dims) {
  return (dims.volume() + dims.sum() - 1) / dims.sum();
}

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) fail_numerical(std::string("non-finite value in ") + what);
  }
}

}  // namespace gtgen
