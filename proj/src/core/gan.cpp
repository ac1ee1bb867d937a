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

#include "gtgen/gan.hpp"

#include <algorithm>
#include <numeric>

#include "gtgen/error.hpp"

namespace gtgen {

using nn::Array;

void GanConfig::validate() const {
  if (!dims.positive()) fail_usage("gan: dims must be positive");
  if (latent_dim < 1) fail_usage("gan: latent_dim must be >= 1");
  if (batch_size < 1) fail_usage("gan: batch_size must be >= 1");
  if (!(lr_g > 0.0) || !(lr_d > 0.0)) fail_usage("gan: learning rates must be positive");
}

// ---------------------------------------------------------------------------

Generator Generator::create(nn::ParamStore& params, const GanConfig& cfg, Rng& rng) {
  Generator g;
  g.fc1_ = nn::Dense::create(params, "gen.fc1", cfg.latent_dim, kGeneratorHidden1, rng);
  g.fc2_ = nn::Dense::create(params, "gen.fc2", kGeneratorHidden1, kGeneratorHidden2, rng);
  g.head_ = OutputHead::create(params, "gen.head", kGeneratorHidden2, cfg.dims, cfg.rank, rng);
  if (g.head_.output_count() != output_param_count(cfg.dims, cfg.rank)) {
    fail_usage("generator head width does not match output_param_count");
  }
  return g;
}

const OutputHead::Output& Generator::forward(const nn::ParamStore& params, const Array& z,
                                             Cache& c) const {
  c.z = z;
  c.z1 = fc1_.forward(params, z);
  c.a1 = nn::leaky_relu(c.z1, kLeakySlope);
  c.z2 = fc2_.forward(params, c.a1);
  c.a2 = nn::leaky_relu(c.z2, kLeakySlope);
  c.out = head_.forward(params, c.a2);
  return c.out;
}

void Generator::backward(nn::ParamStore& params, const Cache& c,
                         std::span<const DenseTensor3> grad) const {
  const Array ga2 = head_.backward(params, c.a2, c.out, grad);
  const Array gz2 = nn::leaky_relu_backward(c.z2, ga2, kLeakySlope);
  const Array ga1 = fc2_.backward(params, c.a1, gz2);
  const Array gz1 = nn::leaky_relu_backward(c.z1, ga1, kLeakySlope);
  fc1_.backward(params, c.z, gz1);
}

// ---------------------------------------------------------------------------

Discriminator Discriminator::create(nn::ParamStore& params, const Dims3& dims, Rng& rng) {
  Discriminator d;
  d.dims_ = dims;
  d.enc_ = SliceConvEncoder::create(params, "disc", dims, 16, 32, 1, Activation::leaky_relu, rng);
  d.out_ = nn::Dense::create(params, "disc.out", d.enc_.out_channels(), 1, rng);
  return d;
}

std::vector<double> Discriminator::forward(const nn::ParamStore& params,
                                           std::span<const DenseTensor3> xs, Cache& c) const {
  for (const auto& x : xs) {
    if (!(x.dims() == dims_)) {
      fail_usage("discriminator input dims " + to_string(x.dims()) + " do not match " +
                 to_string(dims_));
    }
  }
  const Array feat = enc_.forward(params, stack_tensors(xs), &c.enc);
  c.pooled = nn::pool_mean(feat);
  c.logit = out_.forward(params, c.pooled);
  c.prob = nn::sigmoid(c.logit);
  return c.prob.data;
}

Array Discriminator::backward(nn::ParamStore& params, const Cache& c,
                              std::span<const double> grad_prob) const {
  Array gp({grad_prob.size(), 1}, std::vector<double>(grad_prob.begin(), grad_prob.end()));
  const Array glogit = nn::sigmoid_backward(c.prob, gp);
  const Array gpooled = out_.backward(params, c.pooled, glogit);
  const Array gfeat = nn::pool_mean_backward(c.enc.a2, gpooled);
  return enc_.backward(params, c.enc, gfeat);
}

// ---------------------------------------------------------------------------

FactorGan::FactorGan(const GanConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(cfg.seed, stream::init));
  gen_ = Generator::create(g_params_, cfg_, rng);
  disc_ = Discriminator::create(d_params_, cfg_.dims, rng);
}

CPFactors FactorGan::generator_forward(std::span<const double> z) const {
  if (cfg_.rank.is_full()) fail_usage("generator_forward: Full-rank generator emits no factors");
  if (z.size() != cfg_.latent_dim) fail_usage("latent vector has wrong length");
  Generator::Cache c;
  return gen_.forward(g_params_, Array({1, z.size()}, {z.begin(), z.end()}), c).factors.front();
}

DenseTensor3 FactorGan::generate_sample(std::span<const double> z) const {
  if (z.size() != cfg_.latent_dim) fail_usage("latent vector has wrong length");
  Generator::Cache c;
  return gen_.forward(g_params_, Array({1, z.size()}, {z.begin(), z.end()}), c).tensors.front();
}

double FactorGan::discriminator_forward(const DenseTensor3& x) const {
  Discriminator::Cache c;
  return disc_.forward(d_params_, std::span(&x, 1), c).front();
}

double FactorGan::discriminator_loss(std::span<const DenseTensor3> real,
                                     std::span<const DenseTensor3> fake) const {
  if (real.empty() || fake.empty()) fail_usage("discriminator_loss needs nonempty batches");
  Discriminator::Cache c;
  const auto pr = disc_.forward(d_params_, real, c);
  const auto pf = disc_.forward(d_params_, fake, c);
  return nn::bce_loss(pr, std::vector<double>(pr.size(), 0.0)) +
         nn::bce_loss(pf, std::vector<double>(pf.size(), 1.0));
}

double FactorGan::generator_loss(std::span<const DenseTensor3> fake) const {
  if (fake.empty()) fail_usage("generator_loss needs a nonempty batch");
  Discriminator::Cache c;
  const auto pf = disc_.forward(d_params_, fake, c);
  return std::accumulate(pf.begin(), pf.end(), 0.0) / static_cast<double>(pf.size());
}

std::vector<DenseTensor3> FactorGan::sample(std::size_t n, std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<DenseTensor3> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> z(cfg_.latent_dim);
    rng.fill_normal(z);
    out.push_back(generate_sample(z));
  }
  return out;
}

// ---------------------------------------------------------------------------

GanTrainResult train_gan(std::span<const DenseTensor3> dataset, const GanConfig& cfg) {
  if (dataset.empty()) fail_usage("train_gan: empty dataset");
  for (const auto& x : dataset) {
    if (!(x.dims() == cfg.dims)) {
      fail_usage("train_gan: dataset tensor dims " + to_string(x.dims()) +
                 " do not match config dims " + to_string(cfg.dims));
    }
  }
  GanTrainResult res{FactorGan(cfg), {}, 0, 0, {}, {}};
  FactorGan& m = res.model;
  nn::ParamStore& gp = m.generator_params();
  nn::ParamStore& dp = m.discriminator_params();
  res.g_opt = nn::AdamState::for_store(gp, cfg.lr_g, cfg.beta1, cfg.beta2);
  res.d_opt = nn::AdamState::for_store(dp, cfg.lr_d, cfg.beta1, cfg.beta2);
  nn::AdamState& g_opt = res.g_opt;
  nn::AdamState& d_opt = res.d_opt;

  Rng latent_rng(derive_seed(cfg.seed, stream::latent));
  Rng shuffle_rng(derive_seed(cfg.seed, stream::shuffle));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto draw_latents = [&](std::size_t n) {
    Array z({n, cfg.latent_dim});
    latent_rng.fill_normal(z.data);
    return z;
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    GanEpochMetrics acc;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t nb = std::min(cfg.batch_size, order.size() - start);
      std::vector<DenseTensor3> real;
      real.reserve(nb);
      for (std::size_t q = 0; q < nb; ++q) real.push_back(dataset[order[start + q]]);

      // Discriminator step (generator frozen).
      {
        Generator::Cache gc;
        const auto fake = m.generator().forward(gp, draw_latents(nb), gc).tensors;
        Discriminator::Cache rc, fc;
        const auto pr = m.discriminator().forward(dp, real, rc);
        const auto pf = m.discriminator().forward(dp, fake, fc);
        const std::vector<double> t0(nb, 0.0), t1(nb, 1.0);
        acc.d_loss += nn::bce_loss(pr, t0) + nn::bce_loss(pf, t1);
        acc.d_out_real_mean += std::accumulate(pr.begin(), pr.end(), 0.0) / static_cast<double>(nb);
        acc.d_out_fake_mean += std::accumulate(pf.begin(), pf.end(), 0.0) / static_cast<double>(nb);
        dp.zero_grads();
        m.discriminator().backward(dp, rc, nn::bce_grad(pr, t0));
        m.discriminator().backward(dp, fc, nn::bce_grad(pf, t1));
        nn::adam_step(dp, d_opt);
        ++res.d_steps;
      }

      // Generator step (discriminator frozen): minimize mean D(G(z)).
      {
        Generator::Cache gc;
        const auto fake = m.generator().forward(gp, draw_latents(nb), gc).tensors;
        Discriminator::Cache fc;
        const auto pf = m.discriminator().forward(dp, fake, fc);
        acc.g_loss += std::accumulate(pf.begin(), pf.end(), 0.0) / static_cast<double>(nb);
        const std::vector<double> gmean(nb, 1.0 / static_cast<double>(nb));
        const Array gx = m.discriminator().backward(dp, fc, gmean);
        dp.zero_grads();
        const auto gx_t = unstack_tensors(gx, cfg.dims);
        gp.zero_grads();
        m.generator().backward(gp, gc, gx_t);
        nn::adam_step(gp, g_opt);
        ++res.g_steps;
      }
      ++batches;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    res.metrics.push_back({acc.d_loss * inv, acc.g_loss * inv, acc.d_out_real_mean * inv,
                           acc.d_out_fake_mean * inv});
    require_finite(std::span<const double>(&res.metrics.back().d_loss, 1), "GAN d_loss");
    require_finite(std::span<const double>(&res.metrics.back().g_loss, 1), "GAN g_loss");
  }
  return res;
}

}  // namespace gtgen
