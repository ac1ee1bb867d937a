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

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "gtgen/error.hpp"
#include "gtgen/gan.hpp"
#include "test_util.hpp"

using namespace gtgen;
using gtgen::testing::random_tensor;

namespace {

GanConfig small_config(RankSpec rank = RankSpec::of(2)) {
  GanConfig cfg;
  cfg.dims = {4, 6, 6};
  cfg.rank = rank;
  cfg.latent_dim = 5;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.seed = 3;
  return cfg;
}

std::vector<double> latent(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> z(n);
  rng.fill_normal(z);
  return z;
}

std::vector<DenseTensor3> positive_set(const Dims3& d, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DenseTensor3> xs;
  for (std::size_t q = 0; q < n; ++q) {
    DenseTensor3 x(d);
    for (double& v : x.values()) v = rng.uniform(0.0, 1.0);
    xs.push_back(std::move(x));
  }
  return xs;
}

}  // namespace

TEST_CASE("generator head width equals the factorized output count") {
  GanConfig cfg;
  cfg.dims = {25, 51, 51};
  cfg.rank = RankSpec::of(10);
  const FactorGan gan(cfg);
  CHECK(gan.generator().head().output_count() == 1270u);
  std::size_t width = 0;
  for (const auto& h : gan.generator().head().heads()) width += h.out();
  CHECK(width == 1270u);
  const auto z = latent(cfg.latent_dim, 1);
  const CPFactors f = gan.generator_forward(z);
  CHECK(f.dims() == cfg.dims);
  CHECK(f.rank() == 10u);
}

TEST_CASE("Full generator emits the whole tensor") {
  const FactorGan gan(small_config(RankSpec::full()));
  CHECK(gan.generator().head().output_count() == 4u * 6u * 6u);
  const auto z = latent(5, 2);
  CHECK(gan.generate_sample(z).dims() == Dims3{4, 6, 6});
  CHECK_THROWS_AS(gan.generator_forward(z), Error);
}

TEST_CASE("zeroed heads give a zero tensor; distinct latents give distinct samples") {
  FactorGan gan(small_config());
  const auto z1 = latent(5, 1), z2 = latent(5, 2);
  CHECK(frobenius_distance(gan.generate_sample(z1), gan.generate_sample(z2)) > 1e-6);
  gan.generator().head().zero_init(gan.generator_params());
  CHECK(frobenius_norm(gan.generate_sample(z1)) == 0.0);
}

TEST_CASE("generated sample has mode unfoldings of rank at most r") {
  for (std::size_t r : {1u, 2u, 3u}) {
    const FactorGan gan(small_config(RankSpec::of(r)));
    const DenseTensor3 x = gan.generate_sample(latent(5, 7));
    for (int mode = 1; mode <= 3; ++mode) {
      const Matrix u = unfold(x, mode);
      Eigen::MatrixXd e(u.rows(), u.cols());
      for (std::size_t a = 0; a < u.rows(); ++a)
        for (std::size_t b = 0; b < u.cols(); ++b) e(a, b) = u(a, b);
      const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(e).singularValues();
      for (Eigen::Index q = static_cast<Eigen::Index>(r); q < sv.size(); ++q) {
        CHECK(sv(q) < 1e-10 * sv(0));
      }
    }
  }
}

TEST_CASE("discriminator with a zeroed output layer is undecided") {
  FactorGan gan(small_config());
  auto& dp = gan.discriminator_params();
  const auto& out = gan.discriminator().output_layer();
  std::fill(dp[out.weight_index()].values.begin(), dp[out.weight_index()].values.end(), 0.0);
  const auto real = positive_set({4, 6, 6}, 3, 1);
  const auto fake = positive_set({4, 6, 6}, 2, 2);
  CHECK(gan.discriminator_forward(real[0]) == 0.5);
  CHECK(gan.discriminator_loss(real, fake) == doctest::Approx(2.0 * std::numbers::ln2));
  CHECK(gan.generator_loss(fake) == doctest::Approx(0.5));
}

TEST_CASE("losses follow the generated=1 / real=0 convention") {
  const FactorGan gan(small_config());
  const auto real = positive_set({4, 6, 6}, 3, 4);
  const auto fake = positive_set({4, 6, 6}, 2, 5);
  std::vector<double> pr, pf;
  for (const auto& x : real) pr.push_back(gan.discriminator_forward(x));
  for (const auto& x : fake) pf.push_back(gan.discriminator_forward(x));
  const double want = nn::bce_loss(pr, std::vector<double>(pr.size(), 0.0)) +
                      nn::bce_loss(pf, std::vector<double>(pf.size(), 1.0));
  CHECK(gan.discriminator_loss(real, fake) == doctest::Approx(want).epsilon(1e-12));
  CHECK(gan.generator_loss(fake) == doctest::Approx((pf[0] + pf[1]) / 2).epsilon(1e-12));
}

TEST_CASE("discriminator gradient check") {
  FactorGan gan(small_config());
  const Discriminator& disc = gan.discriminator();
  const auto xs = positive_set({4, 6, 6}, 3, 9);
  const std::vector<double> w{0.7, -1.3, 0.4};
  auto loss = [&](nn::ParamStore& p, bool backward) {
    Discriminator::Cache cache;
    const auto prob = disc.forward(p, xs, cache);
    if (backward) disc.backward(p, cache, w);
    return w[0] * prob[0] + w[1] * prob[1] + w[2] * prob[2];
  };
  const auto report = nn::grad_check(loss, gan.discriminator_params(), {1e-5, 1e-3, 40, 1});
  CHECK_MESSAGE(report.passed(), "max rel " << report.max_rel_error << " in "
                                            << report.worst_segment);
  CHECK(report.checked > 100);
}

TEST_CASE("generator gradient check through reconstruct") {
  for (RankSpec rank : {RankSpec::of(2), RankSpec::full()}) {
    FactorGan gan(small_config(rank));
    const Generator& gen = gan.generator();
    Rng rng(4);
    nn::Array z({2, 5});
    rng.fill_normal(z.data);
    std::vector<DenseTensor3> w{random_tensor({4, 6, 6}, rng), random_tensor({4, 6, 6}, rng)};
    auto loss = [&](nn::ParamStore& p, bool backward) {
      Generator::Cache cache;
      const auto& out = gen.forward(p, z, cache);
      double s = 0.0;
      for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t e = 0; e < w[n].size(); ++e)
          s += w[n].values()[e] * out.tensors[n].values()[e];
      if (backward) gen.backward(p, cache, w);
      return s;
    };
    const auto report = nn::grad_check(loss, gan.generator_params(), {1e-5, 1e-3, 30, 2});
    CHECK_MESSAGE(report.passed(), rank.to_string() << ": max rel " << report.max_rel_error
                                                    << " in " << report.worst_segment);
  }
}

TEST_CASE("one epoch over 8 samples in batches of 4 takes two steps each") {
  const auto data = positive_set({4, 6, 6}, 8, 1);
  const GanTrainResult res = train_gan(data, small_config());
  CHECK(res.d_steps == 2);
  CHECK(res.g_steps == 2);
  CHECK(res.metrics.size() == 1);
  CHECK(res.model.generator_params().step_count == 2);
  CHECK(res.model.discriminator_params().step_count == 2);
  CHECK(res.g_opt.beta1 == 0.5);
}

TEST_CASE("training is deterministic in the seed") {
  const auto data = positive_set({4, 6, 6}, 6, 1);
  GanConfig cfg = small_config();
  cfg.epochs = 3;
  const auto a = train_gan(data, cfg);
  const auto b = train_gan(data, cfg);
  REQUIRE(a.metrics.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(a.metrics[e].d_loss == b.metrics[e].d_loss);
    CHECK(a.metrics[e].g_loss == b.metrics[e].g_loss);
  }
  const auto sa = a.model.sample(3, 11), sb = b.model.sample(3, 11);
  for (std::size_t q = 0; q < 3; ++q) CHECK(frobenius_distance(sa[q], sb[q]) == 0.0);
  cfg.seed = 4;
  const auto c = train_gan(data, cfg);
  CHECK(c.metrics[2].d_loss != a.metrics[2].d_loss);
}

TEST_CASE("a discriminator step separates real from generated") {
  // With the generator frozen at zero output, D learns fake -> 1, real -> 0.
  const auto data = positive_set({4, 6, 6}, 8, 2);
  GanConfig cfg = small_config();
  cfg.epochs = 30;
  cfg.lr_g = 1e-12;  // effectively frozen
  const auto res = train_gan(data, cfg);
  const auto& last = res.metrics.back();
  CHECK(last.d_out_fake_mean > last.d_out_real_mean);
  CHECK(last.d_loss < res.metrics.front().d_loss);
}

TEST_CASE("gan config validation") {
  GanConfig cfg = small_config();
  cfg.latent_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.lr_d = -1.0;
  CHECK_THROWS_AS(FactorGan{cfg}, Error);
  const auto wrong = positive_set({4, 6, 5}, 2, 1);
  CHECK_THROWS_AS(train_gan(wrong, small_config()), Error);
}
