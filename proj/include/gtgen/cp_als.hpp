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

#include <cstdint>
#include <vector>

#include "gtgen/tensor.hpp"

namespace gtgen {

struct CpAlsOptions {
  std::size_t rank = 1;
  std::size_t max_iters = 200;
  /// Stop once the relative error improves by less than this between sweeps.
  double tol = 1e-10;
  std::uint64_t seed = 0;
};

struct CpAlsResult {
  CPFactors factors;
  /// ||X - reconstruct(factors)||_F / ||X||_F after each sweep.
  std::vector<double> fit_history;

  double final_error() const { return fit_history.back(); }
};

/**
 * Rank-r CP decomposition by alternating least squares.
 *
 * Each sweep solves, in order,
 *   A <- X(1) (C kr B) pinv((C'C) .* (B'B))
 *   B <- X(2) (C kr A) pinv((C'C) .* (A'A))
 *   C <- X(3) (B kr A) pinv((B'B) .* (A'A))
 * Initial factors are i.i.d. uniform[-1, 1] from `seed`. The r x r
 * pseudo-inverse drops eigenvalues below 1e-12 * lambda_max.
 *
 * Throws a numerical error for an all-zero input (relative error undefined).
 */
CpAlsResult cp_als(const DenseTensor3& x, const CpAlsOptions& opts);

/// Number of cp_als calls made by this process so far.
std::uint64_t cp_als_call_count();

/// Symmetric pseudo-inverse via eigendecomposition with relative clamp.
Matrix symmetric_pinv(const Matrix& gram, double rel_clamp = 1e-12);

/// Dense matrix product.
Matrix matmul(const Matrix& a, const Matrix& b);

}  // namespace gtgen
