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

// Random-feature FID and the rank sweep.
//
// Features come from a fixed, seeded, never-trained slice-conv network rather
// than Inception, so absolute values are only comparable between runs that
// share the extractor seed and tensor shape.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gtgen/cp_als.hpp"
#include "gtgen/diffusion.hpp"
#include "gtgen/gan.hpp"

namespace gtgen {

inline constexpr std::size_t kFeatureDim = 64;

struct FeatureStats {
  std::vector<double> mean;
  Matrix cov;

  std::size_t dim() const { return mean.size(); }
};

/// conv(I->8, 3x3, s2, pad 1) -> tanh -> conv(8->16, 3x3, s2, pad 1) -> tanh -> mean pool
/// -> dense(16->64). Glorot weights from the seed, zero biases.
class FeatureExtractor {
 public:
  FeatureExtractor(const Dims3& dims, std::uint64_t seed);

  const Dims3& dims() const { return dims_; }
  std::vector<double> extract(const DenseTensor3& x) const;
  /// Parallel over samples; result order follows `xs`.
  std::vector<std::vector<double>> extract_all(std::span<const DenseTensor3> xs) const;

 private:
  Dims3 dims_;
  nn::ParamStore params_;
  SliceConvEncoder enc_;
  nn::Dense out_;
};

std::vector<double> feature_extract(const DenseTensor3& x, std::uint64_t extractor_seed);

/// Sample mean and 1/(n-1) covariance, symmetrized.
FeatureStats fit_gaussian(std::span<const std::vector<double>> features);

/// ||mu1 - mu2||^2 + tr(S1) + tr(S2) - 2 sum_i sqrt(max(lambda_i, 0)), with
/// lambda_i the eigenvalues of S1 S2. Clamped at 0.
double frechet_distance(const FeatureStats& s1, const FeatureStats& s2);

double fid(std::span<const DenseTensor3> real, std::span<const DenseTensor3> gen,
           std::uint64_t extractor_seed);

// ---------------------------------------------------------------------------

enum class ModelKind { gan, diff_f2f, diff_t2f };

const char* to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& s);

/// 80/20 style split by seeded shuffle; returns {train, eval}. Both parts
/// are nonempty.
std::pair<std::vector<DenseTensor3>, std::vector<DenseTensor3>> split_dataset(
    std::span<const DenseTensor3> dataset, double eval_fraction, std::uint64_t seed);

struct SweepConfig {
  GanConfig gan;
  DiffusionConfig diffusion;
  CpAlsOptions als;        // rank and seed are set per run
  double eval_fraction = 0.2;
  std::size_t n_gen = 0;   // 0: as many as the eval split
  std::uint64_t extractor_seed = 7;
  std::uint64_t seed = 0;
};

struct SweepRow {
  ModelKind kind = ModelKind::gan;
  RankSpec rank = RankSpec::full();
  std::size_t output_params = 0;
  double param_fraction = 0.0;
  double fid = 0.0;
  double wall_seconds = 0.0;
  bool baseline = false;
};

/// Trains one model of `kind` at `rank` on `train` and draws n samples. The
/// Full rank uses the full-tensor head (GAN) or the full_tensor variant
/// (diffusion). `seed` overrides the seeds inside cfg.
std::vector<DenseTensor3> train_and_sample(ModelKind kind, const RankSpec& rank,
                                           std::span<const DenseTensor3> train,
                                           const SweepConfig& cfg, std::uint64_t seed,
                                           std::size_t n);

/// One row per rank plus the Full baseline, sorted by param_fraction. Run r
/// uses seed cfg.seed + r (baseline: cfg.seed).
std::vector<SweepRow> run_sweep(std::span<const DenseTensor3> dataset, ModelKind kind,
                                std::span<const std::size_t> ranks, const SweepConfig& cfg);

std::string sweep_csv(std::span<const SweepRow> rows);
/// Line chart of fid against param_fraction with a dashed baseline.
std::string sweep_svg(std::span<const SweepRow> rows);

}  // namespace gtgen
