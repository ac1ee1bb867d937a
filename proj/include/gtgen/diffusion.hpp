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

// DDIM diffusion with clean-sample (x0) prediction.
//
// Three variants share the schedule and sampler:
//   factor_to_factor  three MLP denoisers, one per CP factor matrix, trained
//                     on pre-decomposed factors with a shared timestep
//   tensor_to_factor  one slice-conv denoiser reading the noisy tensor and
//                     emitting factors; loss on the reconstructed tensor
//   full_tensor       same denoiser with a head emitting the whole tensor
//
// The sampler is deterministic (eta = 0): given the initial noise, the output
// is a pure function of the parameters.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gtgen/networks.hpp"

namespace gtgen {

struct NoiseSchedule {
  std::size_t steps = 0;
  std::vector<double> betas;       // betas[t-1] for t = 1..T
  std::vector<double> alphas;      // 1 - beta
  std::vector<double> alpha_bars;  // alpha_bars[t], t = 0..T; alpha_bars[0] = 1

  double alpha_bar(std::size_t t) const;
};

/// Linear betas from beta_start to beta_end over T steps.
NoiseSchedule make_schedule(std::size_t T, double beta_start, double beta_end);

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps; t = 0 returns x0.
std::vector<double> forward_noise(std::span<const double> x0, std::size_t t,
                                  std::span<const double> eps, const NoiseSchedule& s);

/// One deterministic DDIM update from t to t_prev < t given the predicted x0.
std::vector<double> ddim_step(std::span<const double> x_t, std::span<const double> x0_pred,
                              std::size_t t, std::size_t t_prev, const NoiseSchedule& s);

/// Uniformly spaced timesteps floor(i*T/S), i = S..1, descending. The step
/// after the last one is t = 0.
std::vector<std::size_t> ddim_timesteps(std::size_t T, std::size_t ddim_steps);

enum class DiffusionVariant { factor_to_factor, tensor_to_factor, full_tensor };

const char* to_string(DiffusionVariant v);
DiffusionVariant parse_variant(const std::string& s);

struct DiffusionConfig {
  Dims3 dims{8, 12, 12};
  RankSpec rank = RankSpec::of(4);
  std::size_t T = 200;
  std::size_t ddim_steps = 50;
  double beta_start = 5e-4;
  double beta_end = 0.1;
  DiffusionVariant variant = DiffusionVariant::tensor_to_factor;
  std::uint64_t seed = 0;
  double lr = 2e-3;  // peak; cosine-decayed to 0 over the run
  std::size_t epochs = 125;
  std::size_t batch_size = 16;

  void validate() const;
  NoiseSchedule schedule() const { return make_schedule(T, beta_start, beta_end); }
};

inline constexpr std::size_t kTimeEmbedding = 64;
inline constexpr std::size_t kDenoiserHidden = 256;

/// Per-factor MLP: [flat | t-embedding] -> 256 -> 256 -> flat.
class FactorDenoiser {
 public:
  struct Cache {
    nn::Array in, z1, a1, z2, a2;
  };

  static FactorDenoiser create(nn::ParamStore& params, const std::string& prefix,
                               std::size_t flat, Rng& rng);

  /// x: [N x flat]; returns the predicted clean factor, [N x flat].
  nn::Array forward(const nn::ParamStore& params, const nn::Array& x,
                    std::span<const std::size_t> steps, Cache& cache) const;
  void backward(nn::ParamStore& params, const Cache& cache, const nn::Array& grad) const;

  void zero_output(nn::ParamStore& params) const;
  std::size_t flat() const { return flat_; }

 private:
  std::size_t flat_ = 0;
  nn::Dense fc1_, fc2_, out_;
};

/// One mean / standard deviation per factor slot (A, B, C), pooled over all
/// entries of that slot across a set. Default-constructed: identity.
struct FactorStandardizer {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> stdev{1.0, 1.0, 1.0};

  static FactorStandardizer fit(std::span<const CPFactors> factors);
  CPFactors standardize(const CPFactors& f) const;
  CPFactors destandardize(const CPFactors& f) const;
};

/// Resolves CP scale/sign/permutation ambiguity: every component gets equal
/// column norms lambda^(1/3) in A, B and C, B and C columns get nonnegative
/// sums, and components are sorted by lambda descending.
CPFactors canonicalize_factors(const CPFactors& f);

class F2FModel {
 public:
  explicit F2FModel(const DiffusionConfig& cfg);

  const DiffusionConfig& config() const { return cfg_; }
  std::array<nn::ParamStore, 3>& params() { return params_; }
  const std::array<nn::ParamStore, 3>& params() const { return params_; }
  const std::array<FactorDenoiser, 3>& denoisers() const { return nets_; }
  FactorStandardizer& standardizer() { return stats_; }
  const FactorStandardizer& standardizer() const { return stats_; }

 private:
  DiffusionConfig cfg_;
  std::array<nn::ParamStore, 3> params_;
  std::array<FactorDenoiser, 3> nets_;
  FactorStandardizer stats_;
};

/// Noisy tensor -> slice-conv encoder -> flatten | t-embedding -> 256 ->
/// factor heads (tensor_to_factor) or a full-tensor head (full_tensor).
class TensorDenoiserModel {
 public:
  struct Cache {
    SliceConvEncoder::Cache enc;
    nn::Array joined, z, a;
    OutputHead::Output out;
  };

  explicit TensorDenoiserModel(const DiffusionConfig& cfg);

  const DiffusionConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const OutputHead& head() const { return head_; }

  /// x: [N x I x J x K] noisy tensors.
  const OutputHead::Output& forward(const nn::Array& x, std::span<const std::size_t> steps,
                                    Cache& cache) const;
  void backward(const Cache& cache, std::span<const DenseTensor3> grad_tensors);

 private:
  DiffusionConfig cfg_;
  nn::ParamStore params_;
  SliceConvEncoder enc_;
  nn::Dense hidden_;
  OutputHead head_;
};

/// Factor loss: mean over the batch of the three squared Frobenius
/// residuals, one shared t per sample, then one Adam step per denoiser.
double f2f_train_step(std::span<const CPFactors> batch, F2FModel& model,
                      std::array<nn::AdamState, 3>& opts, const NoiseSchedule& s, Rng& rng);

/// Mean over the batch of ||reconstruct(pred) - X0||_F^2, then one Adam step.
double t2f_train_step(std::span<const DenseTensor3> batch, TensorDenoiserModel& model,
                      nn::AdamState& opt, const NoiseSchedule& s, Rng& rng);

/// Per-step callback during sampling: (step index, t, current x0 prediction
/// as a tensor, predicted factors or nullptr in Full mode).
using SnapshotFn = std::function<void(std::size_t, std::size_t, const DenseTensor3&,
                                      const CPFactors*)>;

DenseTensor3 f2f_sample(const F2FModel& model, const NoiseSchedule& s, std::size_t ddim_steps,
                        Rng& rng, const SnapshotFn& snapshot = {});
DenseTensor3 t2f_sample(const TensorDenoiserModel& model, const NoiseSchedule& s,
                        std::size_t ddim_steps, Rng& rng, const SnapshotFn& snapshot = {});

/// n samples; sample q starts from noise seeded by derive_seed(seed, q), so
/// the set is independent of the worker count.
std::vector<DenseTensor3> f2f_sample_many(const F2FModel& model, std::size_t n,
                                          std::uint64_t seed);
std::vector<DenseTensor3> t2f_sample_many(const TensorDenoiserModel& model, std::size_t n,
                                          std::uint64_t seed);

struct F2FTrainResult {
  F2FModel model;
  std::vector<double> losses;  // one per optimizer step
  std::array<nn::AdamState, 3> opts;
};

struct T2FTrainResult {
  TensorDenoiserModel model;
  std::vector<double> losses;
  nn::AdamState opt;
};

/// Learning rate after `progress` in [0, 1] of the run: base * (1 + cos(pi p)) / 2.
double cosine_lr(double base, double progress);

/// Trains on CP factors of the training tensors (from cp_als): factors are
/// canonicalized, standardized per slot, then denoised.
F2FTrainResult train_f2f(std::span<const CPFactors> factors, const DiffusionConfig& cfg);
/// Trains the tensor_to_factor or full_tensor variant directly on tensors.
T2FTrainResult train_tensor_denoiser(std::span<const DenseTensor3> dataset,
                                     const DiffusionConfig& cfg);

}  // namespace gtgen
