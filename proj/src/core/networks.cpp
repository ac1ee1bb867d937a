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

#include "gtgen/networks.hpp"

#include <algorithm>

#include "gtgen/error.hpp"

namespace gtgen {

using nn::Array;

Array stack_tensors(std::span<const DenseTensor3> xs) {
  if (xs.empty()) fail_usage("cannot stack an empty tensor batch");
  const Dims3 d = xs.front().dims();
  Array out({xs.size(), d.i, d.j, d.k});
  for (std::size_t n = 0; n < xs.size(); ++n) {
    if (!(xs[n].dims() == d)) {
      fail_usage("batch tensor dims " + to_string(xs[n].dims()) + " differ from " +
                 to_string(d));
    }
    std::copy(xs[n].values().begin(), xs[n].values().end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(n * d.volume()));
  }
  return out;
}

std::vector<DenseTensor3> unstack_tensors(const Array& batch, const Dims3& dims) {
  const std::size_t vol = dims.volume();
  if (batch.size() % vol != 0) fail_usage("batch size is not a multiple of the tensor volume");
  std::vector<DenseTensor3> out;
  for (std::size_t n = 0; n < batch.size() / vol; ++n) {
    auto first = batch.data.begin() + static_cast<std::ptrdiff_t>(n * vol);
    out.emplace_back(dims, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(vol)));
  }
  return out;
}

// ---------------------------------------------------------------------------

SliceConvEncoder SliceConvEncoder::create(nn::ParamStore& params, const std::string& prefix,
                                          const Dims3& dims, std::size_t c1, std::size_t c2,
                                          std::size_t pad, Activation act, Rng& rng) {
  SliceConvEncoder e;
  e.dims_ = dims;
  e.act_ = act;
  e.conv1_ = nn::Conv2d::create(params, prefix + ".conv1", dims.i, c1, 3, 2, pad, rng);
  e.conv2_ = nn::Conv2d::create(params, prefix + ".conv2", c1, c2, 3, 2, pad, rng);
  const std::size_t h1 = e.conv1_.out_extent(dims.j, 3);
  const std::size_t w1 = e.conv1_.out_extent(dims.k, 3);
  e.h2_ = e.conv2_.out_extent(h1, 3);
  e.w2_ = e.conv2_.out_extent(w1, 3);
  return e;
}

Array SliceConvEncoder::activate(const Array& z) const {
  return act_ == Activation::tanh ? nn::tanh(z) : nn::leaky_relu(z, kLeakySlope);
}

Array SliceConvEncoder::activate_backward(const Array& z, const Array& a, const Array& g) const {
  return act_ == Activation::tanh ? nn::tanh_backward(a, g)
                                  : nn::leaky_relu_backward(z, g, kLeakySlope);
}

Array SliceConvEncoder::forward(const nn::ParamStore& params, const Array& x, Cache* cache) const {
  if (x.rank() != 4 || x.dim(1) != dims_.i || x.dim(2) != dims_.j || x.dim(3) != dims_.k) {
    fail_usage("encoder input " + nn::shape_string(x.shape) + " does not match dims " +
               to_string(dims_));
  }
  Cache local;
  Cache& c = cache ? *cache : local;
  c.x = x;
  c.z1 = conv1_.forward(params, x);
  c.a1 = activate(c.z1);
  c.z2 = conv2_.forward(params, c.a1);
  c.a2 = activate(c.z2);
  return c.a2;
}

Array SliceConvEncoder::backward(nn::ParamStore& params, const Cache& c, const Array& grad) const {
  const Array gz2 = activate_backward(c.z2, c.a2, grad);
  const Array ga1 = conv2_.backward(params, c.a1, gz2);
  const Array gz1 = activate_backward(c.z1, c.a1, ga1);
  return conv1_.backward(params, c.x, gz1);
}

// ---------------------------------------------------------------------------

OutputHead OutputHead::create(nn::ParamStore& params, const std::string& prefix,
                              std::size_t in_width, const Dims3& dims, const RankSpec& rank,
                              Rng& rng) {
  OutputHead h;
  h.dims_ = dims;
  h.rank_ = rank;
  if (rank.is_full()) {
    h.heads_.push_back(nn::Dense::create(params, prefix + ".full", in_width, dims.volume(), rng));
  } else {
    const std::size_t r = rank.value();
    h.heads_.push_back(nn::Dense::create(params, prefix + ".a", in_width, dims.i * r, rng));
    h.heads_.push_back(nn::Dense::create(params, prefix + ".b", in_width, dims.j * r, rng));
    h.heads_.push_back(nn::Dense::create(params, prefix + ".c", in_width, dims.k * r, rng));
  }
  return h;
}

std::size_t OutputHead::output_count() const {
  std::size_t n = 0;
  for (const auto& d : heads_) n += d.out();
  return n;
}

std::size_t OutputHead::parameter_count(const nn::ParamStore& params) const {
  std::size_t n = 0;
  for (const auto& d : heads_) n += params[d.weight_index()].size() + params[d.bias_index()].size();
  return n;
}

OutputHead::Output OutputHead::forward(const nn::ParamStore& params, const Array& h) const {
  Output out;
  const std::size_t batch = h.dim(0);
  if (rank_.is_full()) {
    const Array y = heads_[0].forward(params, h);
    out.tensors = unstack_tensors(y, dims_);
    return out;
  }
  const std::size_t r = rank_.value();
  const Array ya = heads_[0].forward(params, h);
  const Array yb = heads_[1].forward(params, h);
  const Array yc = heads_[2].forward(params, h);
  auto rows = [](const Array& y, std::size_t n, std::size_t nrows, std::size_t cols) {
    const std::size_t w = nrows * cols;
    auto first = y.data.begin() + static_cast<std::ptrdiff_t>(n * w);
    return Matrix(nrows, cols, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(w)));
  };
  for (std::size_t n = 0; n < batch; ++n) {
    out.factors.emplace_back(rows(ya, n, dims_.i, r), rows(yb, n, dims_.j, r),
                             rows(yc, n, dims_.k, r));
    out.tensors.push_back(reconstruct(out.factors.back()));
  }
  return out;
}

Array OutputHead::backward(nn::ParamStore& params, const Array& h, const Output& out,
                           std::span<const DenseTensor3> grad_tensors) const {
  const std::size_t batch = h.dim(0);
  if (grad_tensors.size() != batch) fail_usage("head backward: batch size mismatch");
  if (rank_.is_full()) {
    Array g = stack_tensors(grad_tensors);
    g.shape = {batch, dims_.volume()};
    return heads_[0].backward(params, h, g);
  }
  std::vector<CPFactors> gf;
  gf.reserve(batch);
  for (std::size_t n = 0; n < batch; ++n)
    gf.push_back(reconstruct_backward(out.factors[n], grad_tensors[n]));
  return backward_factors(params, h, gf);
}

Array OutputHead::backward_factors(nn::ParamStore& params, const Array& h,
                                   std::span<const CPFactors> gf) const {
  if (rank_.is_full()) fail_usage("factor gradients given to a Full head");
  const std::size_t batch = h.dim(0);
  const std::size_t r = rank_.value();
  Array ga({batch, dims_.i * r}), gb({batch, dims_.j * r}), gc({batch, dims_.k * r});
  for (std::size_t n = 0; n < batch; ++n) {
    std::copy(gf[n].a.data().begin(), gf[n].a.data().end(), ga.data.begin() + static_cast<std::ptrdiff_t>(n * dims_.i * r));
    std::copy(gf[n].b.data().begin(), gf[n].b.data().end(), gb.data.begin() + static_cast<std::ptrdiff_t>(n * dims_.j * r));
    std::copy(gf[n].c.data().begin(), gf[n].c.data().end(), gc.data.begin() + static_cast<std::ptrdiff_t>(n * dims_.k * r));
  }
  Array gh = heads_[0].backward(params, h, ga);
  const Array gh_b = heads_[1].backward(params, h, gb);
  const Array gh_c = heads_[2].backward(params, h, gc);
  for (std::size_t n = 0; n < gh.size(); ++n) gh.data[n] += gh_b.data[n] + gh_c.data[n];
  return gh;
}

void OutputHead::zero_init(nn::ParamStore& params) const {
  for (const auto& d : heads_) {
    std::fill(params[d.weight_index()].values.begin(), params[d.weight_index()].values.end(), 0.0);
    std::fill(params[d.bias_index()].values.begin(), params[d.bias_index()].values.end(), 0.0);
  }
}

}  // namespace gtgen
