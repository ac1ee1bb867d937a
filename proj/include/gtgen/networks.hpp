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

// Building blocks shared by the generator, discriminator, denoisers and the
// FID feature network.

#include <span>
#include <string>
#include <vector>

#include "gtgen/nn.hpp"
#include "gtgen/tensor.hpp"

namespace gtgen {

inline constexpr double kLeakySlope = 0.2;

/// Stacks tensors into a [N x I x J x K] batch (I slices as channels).
nn::Array stack_tensors(std::span<const DenseTensor3> xs);
std::vector<DenseTensor3> unstack_tensors(const nn::Array& batch, const Dims3& dims);

enum class Activation { leaky_relu, tanh };

/// Two stride-2 3x3 convolutions over the J x K slices, I slices as input
/// channels, each followed by an activation.
class SliceConvEncoder {
 public:
  struct Cache {
    nn::Array x, z1, a1, z2, a2;
  };

  static SliceConvEncoder create(nn::ParamStore& params, const std::string& prefix,
                                 const Dims3& dims, std::size_t c1, std::size_t c2,
                                 std::size_t pad, Activation act, Rng& rng);

  /// x: [N x I x J x K] -> [N x c2 x H2 x W2].
  nn::Array forward(const nn::ParamStore& params, const nn::Array& x, Cache* cache) const;
  /// Returns the input gradient.
  nn::Array backward(nn::ParamStore& params, const Cache& cache, const nn::Array& grad) const;

  std::size_t out_channels() const { return conv2_.c_out(); }
  std::size_t out_height() const { return h2_; }
  std::size_t out_width() const { return w2_; }
  std::size_t flat_width() const { return conv2_.c_out() * h2_ * w2_; }
  const nn::Conv2d& conv1() const { return conv1_; }
  const nn::Conv2d& conv2() const { return conv2_; }

 private:
  nn::Array activate(const nn::Array& z) const;
  nn::Array activate_backward(const nn::Array& z, const nn::Array& a, const nn::Array& g) const;

  Dims3 dims_;
  nn::Conv2d conv1_, conv2_;
  Activation act_ = Activation::leaky_relu;
  std::size_t h2_ = 0, w2_ = 0;
};

/// Linear output head that emits either CP factors (three heads sized I*r,
/// J*r, K*r) or a full tensor (one head sized I*J*K).
class OutputHead {
 public:
  struct Output {
    std::vector<CPFactors> factors;  // empty in Full mode
    std::vector<DenseTensor3> tensors;
  };

  static OutputHead create(nn::ParamStore& params, const std::string& prefix,
                           std::size_t in_width, const Dims3& dims, const RankSpec& rank,
                           Rng& rng);

  const Dims3& dims() const { return dims_; }
  const RankSpec& rank() const { return rank_; }
  /// Number of values emitted per sample (= output_param_count).
  std::size_t output_count() const;
  /// Weight + bias entries across the head segments.
  std::size_t parameter_count(const nn::ParamStore& params) const;
  const std::vector<nn::Dense>& heads() const { return heads_; }

  /// h: [N x in_width].
  Output forward(const nn::ParamStore& params, const nn::Array& h) const;
  /// Backprop from per-sample tensor gradients; returns dL/dh.
  nn::Array backward(nn::ParamStore& params, const nn::Array& h, const Output& out,
                     std::span<const DenseTensor3> grad_tensors) const;
  /// Backprop from per-sample factor gradients (rank mode only).
  nn::Array backward_factors(nn::ParamStore& params, const nn::Array& h,
                             std::span<const CPFactors> grad_factors) const;

  void zero_init(nn::ParamStore& params) const;

 private:
  Dims3 dims_;
  RankSpec rank_ = RankSpec::full();
  std::vector<nn::Dense> heads_;
};

}  // namespace gtgen
