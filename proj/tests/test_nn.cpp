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

#include <cmath>
#include <numbers>

#include "gtgen/error.hpp"
#include "gtgen/nn.hpp"
#include "test_util.hpp"

using namespace gtgen;
using namespace gtgen::nn;

namespace {

constexpr double kTol = 1e-3;

Array random_array(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Array a(std::move(shape));
  for (double& v : a.data) v = scale * rng.normal();
  return a;
}

double dot(const Array& a, const Array& b) {
  double s = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) s += a.data[q] * b.data[q];
  return s;
}

// Checks an input gradient by holding the input in a one-segment store.
// Loss = <w, f(x)> for a fixed random w.
void check_input_grad(const std::vector<std::size_t>& shape,
                      const std::function<Array(const Array&)>& fwd,
                      const std::function<Array(const Array&, const Array&, const Array&)>& bwd,
                      std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  ParamStore ps;
  const std::size_t xi = ps.add("x", shape);
  for (double& v : ps[xi].values) v = scale * rng.normal();
  const Array probe = fwd(Array(shape, ps[xi].values));
  const Array w = random_array(probe.shape, rng);
  auto loss = [&](ParamStore& p, bool backward) {
    const Array x(shape, p[xi].values);
    const Array y = fwd(x);
    if (backward) {
      const Array gx = bwd(x, y, w);
      for (std::size_t q = 0; q < gx.size(); ++q) p[xi].grads[q] += gx.data[q];
    }
    return dot(w, y);
  };
  const auto report = grad_check(loss, ps, {1e-5, kTol, 0, seed});
  CHECK_MESSAGE(report.passed(), "max rel error " << report.max_rel_error);
  CHECK(report.checked == shape_volume(shape));
}

// Brute-force cross-correlation with zero padding.
Array naive_conv(const Array& x, const Array& k, std::size_t stride, std::size_t pad) {
  const std::size_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t co = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const std::size_t ho = (h + 2 * pad - kh) / stride + 1;
  const std::size_t wo = (w + 2 * pad - kw) / stride + 1;
  Array y({n, co, ho, wo});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t r = 0; r < ho; ++r)
        for (std::size_t c = 0; c < wo; ++c) {
          double s = 0.0;
          for (std::size_t i = 0; i < ci; ++i)
            for (std::size_t u = 0; u < kh; ++u)
              for (std::size_t v = 0; v < kw; ++v) {
                const long yy = static_cast<long>(r * stride + u) - static_cast<long>(pad);
                const long xx = static_cast<long>(c * stride + v) - static_cast<long>(pad);
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w))
                  continue;
                s += x.data[((b * ci + i) * h + yy) * w + xx] *
                     k.data[((o * ci + i) * kh + u) * kw + v];
              }
          y.data[((b * co + o) * ho + r) * wo + c] = s;
        }
  return y;
}

}  // namespace

TEST_CASE("ParamStore bookkeeping") {
  ParamStore ps;
  CHECK(ps.add("a", {2, 3}) == 0);
  CHECK(ps.add("b", {4}) == 1);
  CHECK(ps.total_size() == 10);
  CHECK(ps.contains("a"));
  CHECK_FALSE(ps.contains("c"));
  CHECK(ps.find("b").shape == std::vector<std::size_t>{4});
  CHECK_THROWS_AS(ps.add("a", {1}), Error);
  CHECK_THROWS_AS(ps.find("zzz"), Error);
  ps[0].grads[1] = 5.0;
  ps.zero_grads();
  CHECK(ps[0].grads[1] == 0.0);
}

TEST_CASE("Glorot init stays within its limit") {
  ParamStore ps;
  Rng rng(1);
  const Dense d = Dense::create(ps, "fc", 30, 20, rng);
  const double limit = std::sqrt(6.0 / 50.0);
  double lo = 0, hi = 0;
  for (double v : ps[d.weight_index()].values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= -limit);
  CHECK(hi <= limit);
  CHECK(hi > 0.8 * limit);  // 600 draws cover the range
  for (double v : ps[d.bias_index()].values) CHECK(v == 0.0);
}

TEST_CASE("dense forward by hand") {
  ParamStore ps;
  Rng rng(0);
  const Dense d = Dense::create(ps, "fc", 2, 1, rng);
  ps[d.weight_index()].values = {2.0, -1.0};
  ps[d.bias_index()].values = {0.5};
  const Array y = d.forward(ps, Array({2, 2}, {1.0, 1.0, 3.0, 4.0}));
  CHECK(y.data == std::vector<double>{1.5, 2.5});
  CHECK_THROWS_AS(d.forward(ps, Array({1, 3})), Error);
}

TEST_CASE("property: dense gradients on random shapes") {
  Rng gen(41);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t batch = 1 + gen.below(4), in = 1 + gen.below(6), out = 1 + gen.below(5);
    ParamStore ps;
    Rng rng(trial);
    const Dense d = Dense::create(ps, "fc", in, out, rng);
    for (double& v : ps[d.bias_index()].values) v = rng.normal();
    const Array x = random_array({batch, in}, rng);
    const Array w = random_array({batch, out}, rng);
    auto loss = [&](ParamStore& p, bool backward) {
      const Array y = d.forward(p, x);
      if (backward) d.backward(p, x, w);
      return dot(w, y);
    };
    const auto report = grad_check(loss, ps, {1e-5, kTol, 0, 1});
    CHECK_MESSAGE(report.passed(), "worst " << report.worst_segment);
    check_input_grad(
        {batch, in}, [&](const Array& xx) { return d.forward(ps, xx); },
        [&](const Array& xx, const Array&, const Array& g) {
          ParamStore scratch = ps;
          return d.backward(scratch, xx, g);
        },
        100 + trial);
  }
}

TEST_CASE("property: conv forward equals the brute-force loop") {
  Rng gen(8);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 1 + gen.below(2), ci = 1 + gen.below(3), co = 1 + gen.below(3);
    const std::size_t h = 3 + gen.below(6), w = 3 + gen.below(6);
    const std::size_t kern = 1 + gen.below(3), stride = 1 + gen.below(2), pad = gen.below(2);
    Rng rng(trial);
    const Array x = random_array({n, ci, h, w}, rng);
    const Array k = random_array({co, ci, kern, kern}, rng);
    const Array fast = conv2d_forward(x, k, stride, pad);
    const Array slow = naive_conv(x, k, stride, pad);
    REQUIRE(fast.shape == slow.shape);
    CHECK(gtgen::testing::max_abs_diff(fast.data, slow.data) < 1e-12);
  }
}

TEST_CASE("conv output extent uses floor") {
  ParamStore ps;
  Rng rng(0);
  const Conv2d c = Conv2d::create(ps, "c", 1, 1, 3, 2, 0, rng);
  CHECK(c.out_extent(12, 3) == 5);
  CHECK(c.out_extent(5, 3) == 2);
  CHECK(c.out_extent(3, 3) == 1);
  const Conv2d p = Conv2d::create(ps, "p", 1, 1, 3, 2, 1, rng);
  CHECK(p.out_extent(12, 3) == 6);
  CHECK(p.out_extent(51, 3) == 26);
  CHECK_THROWS_AS(c.out_extent(2, 3), Error);
}

TEST_CASE("property: conv gradients on random geometries") {
  Rng gen(13);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n = 1 + gen.below(2), ci = 1 + gen.below(3), co = 1 + gen.below(3);
    const std::size_t h = 4 + gen.below(4), w = 4 + gen.below(4);
    const std::size_t stride = 1 + gen.below(2), pad = gen.below(2);
    ParamStore ps;
    Rng rng(trial);
    const Conv2d c = Conv2d::create(ps, "c", ci, co, 3, stride, pad, rng);
    const Array x = random_array({n, ci, h, w}, rng);
    const Array probe = c.forward(ps, x);
    const Array g = random_array(probe.shape, rng);
    auto loss = [&](ParamStore& p, bool backward) {
      const Array y = c.forward(p, x);
      if (backward) c.backward(p, x, g);
      return dot(g, y);
    };
    const auto report = grad_check(loss, ps, {1e-5, kTol, 0, 2});
    CHECK_MESSAGE(report.passed(), "max rel " << report.max_rel_error);
    check_input_grad(
        {n, ci, h, w}, [&](const Array& xx) { return c.forward(ps, xx); },
        [&](const Array& xx, const Array&, const Array& gy) {
          ParamStore scratch = ps;
          return c.backward(scratch, xx, gy);
        },
        200 + trial);
  }
}

TEST_CASE("pool and activation gradients") {
  check_input_grad({2, 3, 4, 5}, [](const Array& x) { return pool_mean(x); },
                   [](const Array& x, const Array&, const Array& g) {
                     return pool_mean_backward(x, g);
                   },
                   1);
  check_input_grad({3, 7}, [](const Array& x) { return sigmoid(x); },
                   [](const Array&, const Array& y, const Array& g) {
                     return sigmoid_backward(y, g);
                   },
                   2, 2.0);
  check_input_grad({3, 7}, [](const Array& x) { return tanh(x); },
                   [](const Array&, const Array& y, const Array& g) {
                     return tanh_backward(y, g);
                   },
                   3, 2.0);
  // Inputs kept away from the kink so the central difference is smooth.
  check_input_grad({4, 6},
                   [](const Array& x) {
                     Array s = x;
                     for (double& v : s.data) v += v >= 0 ? 0.1 : -0.1;
                     return leaky_relu(s, 0.2);
                   },
                   [](const Array& x, const Array&, const Array& g) {
                     Array s = x;
                     for (double& v : s.data) v += v >= 0 ? 0.1 : -0.1;
                     return leaky_relu_backward(s, g, 0.2);
                   },
                   4);
}

TEST_CASE("activation values by hand") {
  const Array x({1, 3}, {-1.0, 0.0, 2.0});
  CHECK(sigmoid(x).data[1] == 0.5);
  CHECK(sigmoid(x).data[2] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
  CHECK(leaky_relu(x, 0.2).data == std::vector<double>{-0.2, 0.0, 2.0});
  CHECK(tanh(x).data[0] == doctest::Approx(std::tanh(-1.0)));
  const Array pooled = pool_mean(Array({1, 1, 2, 2}, {1, 2, 3, 6}));
  CHECK(pooled.shape == std::vector<std::size_t>{1, 1});
  CHECK(pooled.data[0] == 3.0);
}

TEST_CASE("bce values, clamp and gradient") {
  const std::vector<double> half{0.5, 0.5};
  CHECK(bce_loss(half, std::vector<double>{0.0, 1.0}) == doctest::Approx(std::numbers::ln2));
  const std::vector<double> p{0.2, 0.9};
  const std::vector<double> t{0.0, 1.0};
  CHECK(bce_loss(p, t) == doctest::Approx(-(std::log(0.8) + std::log(0.9)) / 2));
  const std::vector<double> g = bce_grad(p, t);
  const double h = 1e-6;
  for (std::size_t q = 0; q < p.size(); ++q) {
    auto up = p, dn = p;
    up[q] += h;
    dn[q] -= h;
    CHECK(g[q] == doctest::Approx((bce_loss(up, t) - bce_loss(dn, t)) / (2 * h)).epsilon(1e-6));
  }
  const std::vector<double> saturated{0.0, 1.0};
  const std::vector<double> wrong{1.0, 0.0};
  CHECK(bce_loss(saturated, wrong) == doctest::Approx(-std::log(kBceEps)));
  CHECK(std::isfinite(bce_loss(saturated, wrong)));
  CHECK(bce_grad(saturated, wrong) == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(bce_loss(p, std::vector<double>{1.0}), Error);
}

TEST_CASE("concat and split are inverse") {
  Rng rng(5);
  const Array a = random_array({3, 2}, rng), b = random_array({3, 4}, rng);
  const Array c = concat_features(a, b);
  CHECK(c.shape == std::vector<std::size_t>{3, 6});
  CHECK(c.data[6] == a.data[2]);
  CHECK(c.data[8] == b.data[4]);
  const auto [ga, gb] = split_features(c, 2);
  CHECK(ga.data == a.data);
  CHECK(gb.data == b.data);
}

TEST_CASE("timestep embedding by hand") {
  const std::size_t steps[] = {0, 3};
  const Array e = timestep_embedding(steps, 4);
  REQUIRE(e.shape == std::vector<std::size_t>{2, 4});
  CHECK(e.data[0] == 0.0);
  CHECK(e.data[2] == 1.0);
  CHECK(e.data[4] == doctest::Approx(std::sin(3.0)));
  CHECK(e.data[5] == doctest::Approx(std::sin(0.03)));
  CHECK(e.data[6] == doctest::Approx(std::cos(3.0)));
  CHECK(e.data[7] == doctest::Approx(std::cos(0.03)));
  CHECK_THROWS_AS(timestep_embedding(steps, 3), Error);
}

TEST_CASE("Adam first step moves each weight by about lr against the gradient sign") {
  ParamStore ps;
  ps.add("w", {4});
  ps[0].values = {1.0, -2.0, 0.5, 3.0};
  ps[0].grads = {0.3, -7.0, 1e-3, -0.01};
  AdamState st = AdamState::for_store(ps, 0.01);
  const auto before = ps[0].values;
  adam_step(ps, st);
  CHECK(ps.step_count == 1);
  const double sign[] = {1, -1, 1, -1};
  for (std::size_t q = 0; q < 4; ++q) {
    CHECK(ps[0].values[q] - before[q] == doctest::Approx(-0.01 * sign[q]).epsilon(1e-4));
    CHECK(ps[0].grads[q] == 0.0);
  }
}

TEST_CASE("Adam second step matches a hand-computed update") {
  ParamStore ps;
  ps.add("w", {1});
  AdamState st = AdamState::for_store(ps, 0.1, 0.5, 0.9, 1e-8);
  ps[0].grads = {1.0};
  adam_step(ps, st);
  ps[0].grads = {3.0};
  adam_step(ps, st);
  // m = 0.5*0.5 + 0.5*3 = 1.75, v = 0.9*0.1 + 0.1*9 = 0.99
  const double mhat = 1.75 / (1 - 0.25), vhat = 0.99 / (1 - 0.81);
  const double step2 = 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
  CHECK(ps[0].values[0] == doctest::Approx(-0.1 - step2).epsilon(1e-6));
}

TEST_CASE("Adam drives a quadratic to its minimum") {
  ParamStore ps;
  ps.add("w", {3});
  ps[0].values = {1.5, -0.7, 2.0};
  AdamState st = AdamState::for_store(ps, 0.05);
  for (int it = 0; it < 2000; ++it) {
    for (std::size_t q = 0; q < 3; ++q) ps[0].grads[q] = 2.0 * ps[0].values[q];
    adam_step(ps, st);
  }
  for (double v : ps[0].values) CHECK(std::abs(v) < 1e-2);
  ParamStore other;
  other.add("x", {1});
  CHECK_THROWS_AS(adam_step(other, st), Error);
  CHECK_THROWS_AS(AdamState::for_store(ps, 0.0), Error);
}

TEST_CASE("grad_check catches a wrong gradient") {
  ParamStore ps;
  ps.add("w", {3});
  ps[0].values = {0.3, -0.4, 1.2};
  auto loss = [](ParamStore& p, bool backward) {
    double s = 0.0;
    for (std::size_t q = 0; q < 3; ++q) {
      s += p[0].values[q] * p[0].values[q];
      if (backward) p[0].grads[q] += 3.0 * p[0].values[q];  // should be 2x
    }
    return s;
  };
  const auto report = grad_check(loss, ps);
  CHECK_FALSE(report.passed());
  CHECK(report.worst_segment == "w");
  CHECK(report.max_rel_error > 0.3);
}
