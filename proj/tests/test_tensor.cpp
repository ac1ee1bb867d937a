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


#include <doctest.h>

#include "gtgen/error.hpp"
#include "gtgen/tensor.hpp"
#include "test_util.hpp"

using namespace gtgen;
using gtgen::testing::naive_reconstruct;
using gtgen::testing::random_dims;
using gtgen::testing::random_factors;
using gtgen::testing::random_tensor;

namespace {

double inner(const DenseTensor3& x, const DenseTensor3& y) {
  double s = 0.0;
  for (std::size_t q = 0; q < x.size(); ++q) s += x.values()[q] * y.values()[q];
  return s;
}

}  // namespace

TEST_CASE("output_param_count on the calorimeter shape") {
  const Dims3 d{25, 51, 51};
  CHECK(output_param_count(d, RankSpec::of(10)) == 1270u);
  CHECK(output_param_count(d, RankSpec::full()) == 65025u);
  CHECK(output_param_count(d, RankSpec::of(1)) == 127u);
  const double ratio = 1270.0 / 65025.0;
  CHECK(ratio == doctest::Approx(0.019531).epsilon(1e-4));
  CHECK(full_matching_rank(d) == 513u);  // ceil(65025 / 127)
  CHECK(output_param_count(Dims3{2, 3, 4}, RankSpec::of(5)) == 45u);
}

TEST_CASE("RankSpec parsing and printing") {
  CHECK(RankSpec::parse("full").is_full());
  CHECK(RankSpec::parse("7") == RankSpec::of(7));
  CHECK(RankSpec::of(12).to_string() == "12");
  CHECK(RankSpec::full().to_string() == "full");
  CHECK_THROWS_AS(RankSpec::of(0), Error);
  CHECK_THROWS_AS(RankSpec::parse("0"), Error);
  CHECK_THROWS_AS(RankSpec::parse("4x"), Error);
  CHECK_THROWS_AS(RankSpec::parse(""), Error);
  CHECK_THROWS_AS(RankSpec::full().value(), Error);
}

TEST_CASE("constructors reject inconsistent shapes") {
  CHECK_THROWS_AS(DenseTensor3(Dims3{0, 2, 2}), Error);
  CHECK_THROWS_AS(DenseTensor3(Dims3{2, 2, 2}, std::vector<double>(7)), Error);
  CHECK_THROWS_AS(Matrix(2, 3, std::vector<double>(5)), Error);
  CHECK_THROWS_AS(CPFactors(Matrix(2, 2), Matrix(3, 3), Matrix(4, 2)), Error);
  try {
    DenseTensor3(Dims3{2, 0, 1});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::usage);
  }
}

TEST_CASE("reconstruct matches the triple-loop reference") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Dims3 d = random_dims(rng, 1, 7);
    const std::size_t r = 1 + rng.below(5);
    const CPFactors f = random_factors(d, r, rng);
    const DenseTensor3 fast = reconstruct(f);
    const DenseTensor3 slow = naive_reconstruct(f);
    CHECK(fast.dims() == d);
    CHECK(gtgen::testing::max_abs_diff(fast.values(), slow.values()) < 1e-12);
  }
}

TEST_CASE("rank-1 outer product by hand") {
  const CPFactors f(Matrix(2, 1, {1.0, 2.0}), Matrix(2, 1, {3.0, -1.0}),
                    Matrix(3, 1, {1.0, 0.5, 2.0}));
  const DenseTensor3 x = reconstruct(f);
  CHECK(x(0, 0, 0) == 3.0);
  CHECK(x(1, 0, 2) == 12.0);
  CHECK(x(1, 1, 1) == -1.0);
  CHECK(x(0, 1, 2) == -2.0);
}

TEST_CASE("unfold uses Kolda column order") {
  Rng rng(3);
  const Dims3 d{3, 4, 5};
  const DenseTensor3 x = random_tensor(d, rng);
  const Matrix x1 = unfold(x, 1), x2 = unfold(x, 2), x3 = unfold(x, 3);
  REQUIRE(x1.rows() == 3);
  REQUIRE(x1.cols() == 20);
  REQUIRE(x2.rows() == 4);
  REQUIRE(x3.rows() == 5);
  for (std::size_t i = 0; i < d.i; ++i)
    for (std::size_t j = 0; j < d.j; ++j)
      for (std::size_t k = 0; k < d.k; ++k) {
        CHECK(x1(i, k * d.j + j) == x(i, j, k));
        CHECK(x2(j, k * d.i + i) == x(i, j, k));
        CHECK(x3(k, j * d.i + i) == x(i, j, k));
      }
  CHECK_THROWS_AS(unfold(x, 0), Error);
  CHECK_THROWS_AS(unfold(x, 4), Error);
}

TEST_CASE("khatri_rao layout") {
  const Matrix m1(2, 2, {1, 2, 3, 4});
  const Matrix m2(3, 2, {5, 6, 7, 8, 9, 10});
  const Matrix kr = khatri_rao(m1, m2);
  REQUIRE(kr.rows() == 6);
  REQUIRE(kr.cols() == 2);
  // row r1 * 3 + r2 = m1(r1, c) * m2(r2, c)
  CHECK(kr(0, 0) == 5);
  CHECK(kr(2, 1) == 20);
  CHECK(kr(3, 0) == 15);
  CHECK(kr(5, 1) == 40);
  CHECK_THROWS_AS(khatri_rao(Matrix(2, 2), Matrix(2, 3)), Error);
}

TEST_CASE("property: unfoldings of a CP tensor factor through khatri_rao") {
  Rng rng(5);
  for (int trial = 0; trial < 15; ++trial) {
    const Dims3 d = random_dims(rng, 1, 6);
    const std::size_t r = 1 + rng.below(4);
    const CPFactors f = random_factors(d, r, rng);
    const DenseTensor3 x = reconstruct(f);
    const struct {
      int mode;
      const Matrix& lead;
      Matrix kr;
    } cases[] = {{1, f.a, khatri_rao(f.c, f.b)},
                 {2, f.b, khatri_rao(f.c, f.a)},
                 {3, f.c, khatri_rao(f.b, f.a)}};
    for (const auto& c : cases) {
      const Matrix u = unfold(x, c.mode);
      for (std::size_t row = 0; row < u.rows(); ++row)
        for (std::size_t col = 0; col < u.cols(); ++col) {
          double s = 0.0;
          for (std::size_t q = 0; q < r; ++q) s += c.lead(row, q) * c.kr(col, q);
          CHECK(std::abs(u(row, col) - s) < 1e-12);
        }
    }
  }
}

TEST_CASE("reconstruct_backward matches finite differences") {
  Rng rng(9);
  const Dims3 d{3, 4, 2};
  CPFactors f = random_factors(d, 3, rng);
  const DenseTensor3 g = random_tensor(d, rng);
  const CPFactors grad = reconstruct_backward(f, g);
  const double h = 1e-5;
  Matrix* mats[] = {&f.a, &f.b, &f.c};
  const Matrix* grads[] = {&grad.a, &grad.b, &grad.c};
  for (int m = 0; m < 3; ++m) {
    REQUIRE(grads[m]->rows() == mats[m]->rows());
    for (std::size_t e = 0; e < mats[m]->data().size(); ++e) {
      double& v = mats[m]->data()[e];
      const double saved = v;
      v = saved + h;
      const double up = inner(g, reconstruct(f));
      v = saved - h;
      const double dn = inner(g, reconstruct(f));
      v = saved;
      CHECK(grads[m]->data()[e] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-7));
    }
  }
}

TEST_CASE("frobenius norm and distance") {
  const DenseTensor3 x(Dims3{1, 1, 2}, {3.0, 4.0});
  const DenseTensor3 y(Dims3{1, 1, 2}, {0.0, 0.0});
  CHECK(frobenius_norm(x) == 5.0);
  CHECK(frobenius_distance(x, y) == 5.0);
  CHECK(frobenius_distance(x, x) == 0.0);
  CHECK_THROWS_AS(frobenius_distance(x, DenseTensor3(Dims3{1, 2, 1})), Error);
}

TEST_CASE("require_finite flags NaN and inf as numerical errors") {
  std::vector<double> v{1.0, 2.0};
  CHECK_NOTHROW(require_finite(v, "v"));
  v[1] = std::nan("");
  try {
    require_finite(v, "v");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical);
  }
  v[1] = INFINITY;
  CHECK_THROWS_AS(require_finite(v, "v"), Error);
}
