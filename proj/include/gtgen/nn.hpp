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

// Layer set with hand-written reverse-mode passes.
//
// Layers are stateless descriptors holding segment indices into a ParamStore.
// forward() returns the output; backward() takes the forward input plus the
// output gradient, accumulates parameter gradients into the store's grads and
// returns the input gradient. All math is f64.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gtgen/rng.hpp"

namespace gtgen::nn {

/// Row-major n-d array of doubles.
struct Array {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Array() = default;
  explicit Array(std::vector<std::size_t> shape_, double fill = 0.0);
  Array(std::vector<std::size_t> shape_, std::vector<double> data_);

  std::size_t size() const { return data.size(); }
  std::size_t dim(std::size_t axis) const { return shape.at(axis); }
  std::size_t rank() const { return shape.size(); }
};

std::size_t shape_volume(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

struct Segment {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grads;

  std::size_t size() const { return values.size(); }
};

/// Named flat parameter segments with paired gradient storage.
class ParamStore {
 public:
  /// Adds a zero-valued segment; names must be unique.
  std::size_t add(std::string name, std::vector<std::size_t> shape);

  Segment& operator[](std::size_t idx) { return segments_.at(idx); }
  const Segment& operator[](std::size_t idx) const { return segments_.at(idx); }
  Segment& find(std::string_view name);
  const Segment& find(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t segment_count() const { return segments_.size(); }
  std::size_t total_size() const;
  std::vector<Segment>& segments() { return segments_; }
  const std::vector<Segment>& segments() const { return segments_; }

  void zero_grads();

  std::uint64_t step_count = 0;

 private:
  std::vector<Segment> segments_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-3;

  static AdamState for_store(const ParamStore& params, double lr,
                             double beta1 = 0.9, double beta2 = 0.999,
                             double eps = 1e-8);
};

/// Bias-corrected Adam update using step_count + 1, then zeroes grads and
/// increments step_count.
void adam_step(ParamStore& params, AdamState& state);

// Initialization.
void glorot_uniform(Segment& seg, std::size_t fan_in, std::size_t fan_out, Rng& rng);

class Dense {
 public:
  Dense() = default;
  /// Adds "<prefix>.w" [in x out] (Glorot) and "<prefix>.b" [out] (zeros).
  static Dense create(ParamStore& params, const std::string& prefix,
                      std::size_t in, std::size_t out, Rng& rng);

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  std::size_t weight_index() const { return w_; }
  std::size_t bias_index() const { return b_; }

  /// x: [batch x in] -> [batch x out].
  Array forward(const ParamStore& params, const Array& x) const;
  Array backward(ParamStore& params, const Array& x, const Array& grad_out) const;

 private:
  std::size_t w_ = 0, b_ = 0, in_ = 0, out_ = 0;
};

/// 2-D cross-correlation (no kernel flip), zero padding, no bias.
/// Output extent is floor((H + 2*pad - kh) / stride) + 1.
class Conv2d {
 public:
  Conv2d() = default;
  /// Adds "<prefix>.k" [c_out x c_in x kh x kw] (Glorot).
  static Conv2d create(ParamStore& params, const std::string& prefix,
                       std::size_t c_in, std::size_t c_out, std::size_t kernel,
                       std::size_t stride, std::size_t pad, Rng& rng);
  static Conv2d attach(std::size_t kernel_segment, std::size_t c_in,
                       std::size_t c_out, std::size_t kh, std::size_t kw,
                       std::size_t stride, std::size_t pad);

  std::size_t out_extent(std::size_t in, std::size_t k) const;
  std::size_t c_out() const { return c_out_; }
  std::size_t kernel_index() const { return k_; }

  /// x: [batch x c_in x H x W] -> [batch x c_out x H' x W'].
  Array forward(const ParamStore& params, const Array& x) const;
  Array backward(ParamStore& params, const Array& x, const Array& grad_out) const;

 private:
  std::size_t k_ = 0, c_in_ = 0, c_out_ = 0, kh_ = 0, kw_ = 0, stride_ = 1, pad_ = 0;
};

/// Conv forward with an explicit kernel array (same semantics as Conv2d).
Array conv2d_forward(const Array& x, const Array& kernels, std::size_t stride,
                     std::size_t pad);

/// Global mean over H x W: [batch x C x H x W] -> [batch x C].
Array pool_mean(const Array& x);
Array pool_mean_backward(const Array& x, const Array& grad_out);

Array sigmoid(const Array& x);
Array sigmoid_backward(const Array& y, const Array& grad_out);  // takes the output
Array leaky_relu(const Array& x, double alpha);
Array leaky_relu_backward(const Array& x, const Array& grad_out, double alpha);
Array tanh(const Array& x);
Array tanh_backward(const Array& y, const Array& grad_out);  // takes the output

inline constexpr double kBceEps = 1e-7;

/// Mean binary cross-entropy with predictions clamped to [eps, 1 - eps].
double bce_loss(std::span<const double> pred, std::span<const double> target);
/// d(bce_loss)/d(pred); zero where the clamp is active.
std::vector<double> bce_grad(std::span<const double> pred, std::span<const double> target);

/// Concatenates [batch x a] and [batch x b] along the feature axis.
Array concat_features(const Array& x, const Array& y);
/// Splits the gradient of a concat back into its two parts.
std::pair<Array, Array> split_features(const Array& grad, std::size_t first_width);

/// Sinusoidal embedding of timesteps: [batch] -> [batch x width]; first half
/// sin(t * f_m), second half cos(t * f_m), f_m = 10000^(-m / (width/2)).
Array timestep_embedding(std::span<const std::size_t> steps, std::size_t width);

struct GradCheckOptions {
  double h = 1e-4;
  double tol = 1e-4;
  /// Check at most this many entries per segment (0 = all), chosen by seed.
  std::size_t max_per_segment = 0;
  std::uint64_t seed = 0;
  /// Relative error uses max(|analytic|, |numeric|, abs_floor) as denominator.
  double abs_floor = 1e-6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_segment;
  std::vector<std::string> failing_segments;
  std::size_t checked = 0;

  bool passed() const { return failing_segments.empty(); }
};

/// Compares analytic gradients with central differences. `loss` must return
/// the scalar loss, and when its second argument is true also accumulate the
/// analytic gradient into params' grads.
GradCheckReport grad_check(const std::function<double(ParamStore&, bool)>& loss,
                           ParamStore& params, const GradCheckOptions& opts = {});

}  // namespace gtgen::nn
