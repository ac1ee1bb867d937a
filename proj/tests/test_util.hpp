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

// Shared helpers for the unit tests: hand-rolled generators and small
// brute-force references that do not go through the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "gtgen/rng.hpp"
#include "gtgen/tensor.hpp"

namespace gtgen::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

inline CPFactors random_factors(const Dims3& d, std::size_t r, Rng& rng) {
  return CPFactors(random_matrix(d.i, r, rng), random_matrix(d.j, r, rng),
                   random_matrix(d.k, r, rng));
}

inline DenseTensor3 random_tensor(const Dims3& d, Rng& rng) {
  DenseTensor3 x(d);
  for (double& v : x.values()) v = rng.normal();
  return x;
}

/// Random dims with each extent in [lo, hi].
inline Dims3 random_dims(Rng& rng, std::size_t lo, std::size_t hi) {
  auto pick = [&] { return lo + static_cast<std::size_t>(rng.below(hi - lo + 1)); };
  const std::size_t i = pick();
  const std::size_t j = pick();
  return {i, j, pick()};
}

/// Triple loop reference for X = [[A, B, C]].
inline DenseTensor3 naive_reconstruct(const CPFactors& f) {
  const Dims3 d = f.dims();
  DenseTensor3 x(d);
  for (std::size_t i = 0; i < d.i; ++i)
    for (std::size_t j = 0; j < d.j; ++j)
      for (std::size_t k = 0; k < d.k; ++k) {
        double s = 0.0;
        for (std::size_t r = 0; r < f.rank(); ++r) s += f.a(i, r) * f.b(j, r) * f.c(k, r);
        x(i, j, k) = s;
      }
  return x;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) m = std::max(m, std::abs(a[q] - b[q]));
  return m;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("gtgen_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace gtgen::testing
