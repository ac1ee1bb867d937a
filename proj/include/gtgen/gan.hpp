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

// GAN whose generator emits CP factor matrices.
//
// Label convention: the discriminator outputs values near 1 for inputs it
// believes are GENERATED and near 0 for REAL inputs. Its BCE targets are 0
// for real and 1 for generated, and the generator minimizes the plain mean
// of D(G(z)) (not a log), driving it toward the "real" label 0.

#include <cstdint>
#include <span>
#include <vector>

#include "gtgen/networks.hpp"

namespace gtgen {

struct GanConfig {
  Dims3 dims{8, 12, 12};
  RankSpec rank = RankSpec::of(4);
  std::size_t latent_dim = 32;
  std::size_t batch_size = 16;
  double lr_g = 1e-4;
  double lr_d = 4e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr std::size_t kGeneratorHidden1 = 256;
inline constexpr std::size_t kGeneratorHidden2 = 512;

struct GanEpochMetrics {
  double d_loss = 0.0;
  double g_loss = 0.0;
  double d_out_real_mean = 0.0;
  double d_out_fake_mean = 0.0;
};
using GanMetrics = std::vector<GanEpochMetrics>;

/// latent -> 256 -> 512 (leaky_relu 0.2) -> factor heads.
class Generator {
 public:
  struct Cache {
    nn::Array z, z1, a1, z2, a2;
    OutputHead::Output out;
  };

  static Generator create(nn::ParamStore& params, const GanConfig& cfg, Rng& rng);

  /// z: [N x latent_dim].
  const OutputHead::Output& forward(const nn::ParamStore& params, const nn::Array& z,
                                    Cache& cache) const;
  void backward(nn::ParamStore& params, const Cache& cache,
                std::span<const DenseTensor3> grad_tensors) const;

  const OutputHead& head() const { return head_; }
  const nn::Dense& trunk1() const { return fc1_; }
  const nn::Dense& trunk2() const { return fc2_; }

 private:
  nn::Dense fc1_, fc2_;
  OutputHead head_;
};

/// Slice convolutions (I slices as channels) -> global mean pool -> dense ->
/// sigmoid.
class Discriminator {
 public:
  struct Cache {
    SliceConvEncoder::Cache enc;
    nn::Array pooled, logit, prob;
  };

  static Discriminator create(nn::ParamStore& params, const Dims3& dims, Rng& rng);

  std::vector<double> forward(const nn::ParamStore& params,
                              std::span<const DenseTensor3> xs, Cache& cache) const;
  /// Accumulates parameter grads; returns dL/dx as [N x I x J x K].
  nn::Array backward(nn::ParamStore& params, const Cache& cache,
                     std::span<const double> grad_prob) const;

  const Dims3& dims() const { return dims_; }
  const SliceConvEncoder& encoder() const { return enc_; }
  const nn::Dense& output_layer() const { return out_; }

 private:
  Dims3 dims_;
  SliceConvEncoder enc_;
  nn::Dense out_;
};

/// Generator + discriminator with their parameter stores.
class FactorGan {
 public:
  explicit FactorGan(const GanConfig& cfg);

  const GanConfig& config() const { return cfg_; }
  nn::ParamStore& generator_params() { return g_params_; }
  const nn::ParamStore& generator_params() const { return g_params_; }
  nn::ParamStore& discriminator_params() { return d_params_; }
  const nn::ParamStore& discriminator_params() const { return d_params_; }
  const Generator& generator() const { return gen_; }
  const Discriminator& discriminator() const { return disc_; }

  /// Factors emitted for one latent vector (rank mode only).
  CPFactors generator_forward(std::span<const double> z) const;
  /// reconstruct(generator_forward(z)), or the reshaped Full head.
  DenseTensor3 generate_sample(std::span<const double> z) const;
  double discriminator_forward(const DenseTensor3& x) const;

  double discriminator_loss(std::span<const DenseTensor3> real,
                            std::span<const DenseTensor3> fake) const;
  double generator_loss(std::span<const DenseTensor3> fake) const;

  /// n samples from latents drawn N(0, 1) with `seed`.
  std::vector<DenseTensor3> sample(std::size_t n, std::uint64_t seed) const;

 private:
  GanConfig cfg_;
  nn::ParamStore g_params_, d_params_;
  Generator gen_;
  Discriminator disc_;
};

struct GanTrainResult {
  FactorGan model;
  GanMetrics metrics;
  std::size_t d_steps = 0;
  std::size_t g_steps = 0;
  nn::AdamState g_opt, d_opt;
};

/// Per minibatch: one Adam step on the discriminator loss (generator frozen),
/// then one Adam step on the generator loss (discriminator frozen).
GanTrainResult train_gan(std::span<const DenseTensor3> dataset, const GanConfig& cfg);

}  // namespace gtgen
