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

#include "gtgen/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gtgen/error.hpp"

namespace gtgen::nn {

std::size_t shape_volume(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t n = 0; n < shape.size(); ++n) {
    if (n) s += "x";
    s += std::to_string(shape[n]);
  }
  return s + "]";
}

Array::Array(std::vector<std::size_t> shape_, double fill)
    : shape(std::move(shape_)), data(shape_volume(shape), fill) {}

Array::Array(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  if (data.size() != shape_volume(shape)) {
    fail_usage("array data length " + std::to_string(data.size()) +
               " does not match shape " + shape_string(shape));
  }
}

// ---------------------------------------------------------------------------
// ParamStore / Adam

std::size_t ParamStore::add(std::string name, std::vector<std::size_t> shape) {
  if (index_.contains(name)) fail_usage("duplicate parameter segment '" + name + "'");
  const std::size_t n = shape_volume(shape);
  Segment seg{name, std::move(shape), std::vector<double>(n, 0.0),
              std::vector<double>(n, 0.0)};
  index_.emplace(std::move(name), segments_.size());
  segments_.push_back(std::move(seg));
  return segments_.size() - 1;
}

Segment& ParamStore::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) fail_usage("no parameter segment '" + std::string(name) + "'");
  return segments_[it->second];
}

const Segment& ParamStore::find(std::string_view name) const {
  return const_cast<ParamStore*>(this)->find(name);
}

bool ParamStore::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& s : segments_) n += s.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& s : segments_) std::fill(s.grads.begin(), s.grads.end(), 0.0);
}

AdamState AdamState::for_store(const ParamStore& params, double lr, double beta1,
                               double beta2, double eps) {
  if (!(lr > 0.0) || !(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) ||
      !(eps > 0.0)) {
    fail_usage("invalid Adam hyperparameters");
  }
  AdamState st;
  st.beta1 = beta1;
  st.beta2 = beta2;
  st.eps = eps;
  st.lr = lr;
  for (const auto& s : params.segments()) {
    st.m.emplace_back(s.size(), 0.0);
    st.v.emplace_back(s.size(), 0.0);
  }
  return st;
}

void adam_step(ParamStore& params, AdamState& state) {
  if (state.m.size() != params.segment_count()) {
    fail_usage("Adam state does not mirror the parameter store");
  }
  for (std::size_t s = 0; s < params.segment_count(); ++s) {
    if (state.m[s].size() != params[s].size() || state.v[s].size() != params[s].size()) {
      fail_usage("Adam state size mismatch for segment " + params[s].name);
    }
  }
  const double t = static_cast<double>(params.step_count + 1);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t s = 0; s < params.segment_count(); ++s) {
    Segment& seg = params[s];
    auto& m = state.m[s];
    auto& v = state.v[s];
    for (std::size_t n = 0; n < seg.size(); ++n) {
      const double g = seg.grads[n];
      m[n] = state.beta1 * m[n] + (1.0 - state.beta1) * g;
      v[n] = state.beta2 * v[n] + (1.0 - state.beta2) * g * g;
      const double mhat = m[n] / c1;
      const double vhat = v[n] / c2;
      seg.values[n] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
  params.zero_grads();
  ++params.step_count;
}

void glorot_uniform(Segment& seg, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  rng.fill_uniform(seg.values, -limit, limit);
}

// ---------------------------------------------------------------------------
// Dense

Dense Dense::create(ParamStore& params, const std::string& prefix, std::size_t in,
                    std::size_t out, Rng& rng) {
  Dense d;
  d.in_ = in;
  d.out_ = out;
  d.w_ = params.add(prefix + ".w", {in, out});
  d.b_ = params.add(prefix + ".b", {out});
  glorot_uniform(params[d.w_], in, out, rng);
  return d;
}

Array Dense::forward(const ParamStore& params, const Array& x) const {
  if (x.rank() != 2 || x.dim(1) != in_) {
    fail_usage("dense input " + shape_string(x.shape) + " does not match in=" +
               std::to_string(in_));
  }
  const auto& w = params[w_].values;
  const auto& b = params[b_].values;
  const std::size_t batch = x.dim(0);
  Array y({batch, out_});
  for (std::size_t n = 0; n < batch; ++n) {
    double* yr = &y.data[n * out_];
    std::copy(b.begin(), b.end(), yr);
    const double* xr = &x.data[n * in_];
    for (std::size_t i = 0; i < in_; ++i) {
      const double xv = xr[i];
      if (xv == 0.0) continue;
      const double* wr = &w[i * out_];
      for (std::size_t o = 0; o < out_; ++o) yr[o] += xv * wr[o];
    }
  }
  return y;
}

Array Dense::backward(ParamStore& params, const Array& x, const Array& gy) const {
  const std::size_t batch = x.dim(0);
  if (gy.rank() != 2 || gy.dim(0) != batch || gy.dim(1) != out_) {
    fail_usage("dense grad " + shape_string(gy.shape) + " does not match output");
  }
  const auto& w = params[w_].values;
  auto& gw = params[w_].grads;
  auto& gb = params[b_].grads;
  Array gx({batch, in_});
  for (std::size_t n = 0; n < batch; ++n) {
    const double* gr = &gy.data[n * out_];
    const double* xr = &x.data[n * in_];
    double* gxr = &gx.data[n * in_];
    for (std::size_t o = 0; o < out_; ++o) gb[o] += gr[o];
    for (std::size_t i = 0; i < in_; ++i) {
      const double* wr = &w[i * out_];
      double* gwr = &gw[i * out_];
      const double xv = xr[i];
      double acc = 0.0;
      for (std::size_t o = 0; o < out_; ++o) {
        gwr[o] += xv * gr[o];
        acc += wr[o] * gr[o];
      }
      gxr[i] = acc;
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Conv2d

namespace {

std::size_t conv_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  if (stride == 0) fail_usage("conv stride must be >= 1");
  if (in + 2 * pad < k) {
    fail_usage("conv kernel " + std::to_string(k) + " larger than padded input " +
               std::to_string(in + 2 * pad));
  }
  return (in + 2 * pad - k) / stride + 1;
}

struct ConvGeom {
  std::size_t batch, c_in, h, w, c_out, kh, kw, stride, pad, oh, ow;
};

ConvGeom conv_geom(const Array& x, std::size_t c_in, std::size_t c_out, std::size_t kh,
                   std::size_t kw, std::size_t stride, std::size_t pad) {
  if (x.rank() != 4 || x.dim(1) != c_in) {
    fail_usage("conv input " + shape_string(x.shape) + " does not match c_in=" +
               std::to_string(c_in));
  }
  ConvGeom g{x.dim(0), c_in, x.dim(2), x.dim(3), c_out, kh, kw, stride, pad, 0, 0};
  g.oh = conv_extent(g.h, kh, stride, pad);
  g.ow = conv_extent(g.w, kw, stride, pad);
  return g;
}

Array conv_forward_impl(const ConvGeom& g, const Array& x, const std::vector<double>& k) {
  Array y({g.batch, g.c_out, g.oh, g.ow});
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t co = 0; co < g.c_out; ++co) {
      double* yc = &y.data[((n * g.c_out) + co) * g.oh * g.ow];
      for (std::size_t ci = 0; ci < g.c_in; ++ci) {
        const double* xc = &x.data[((n * g.c_in) + ci) * g.h * g.w];
        const double* kc = &k[((co * g.c_in) + ci) * g.kh * g.kw];
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            double s = 0.0;
            for (std::size_t u = 0; u < g.kh; ++u) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + u) -
                                        static_cast<std::ptrdiff_t>(g.pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
              for (std::size_t v = 0; v < g.kw; ++v) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + v) -
                                          static_cast<std::ptrdiff_t>(g.pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
                s += xc[iy * static_cast<std::ptrdiff_t>(g.w) + ix] * kc[u * g.kw + v];
              }
            }
            yc[oy * g.ow + ox] += s;
          }
        }
      }
    }
  }
  return y;
}

}  // namespace

Conv2d Conv2d::create(ParamStore& params, const std::string& prefix, std::size_t c_in,
                      std::size_t c_out, std::size_t kernel, std::size_t stride,
                      std::size_t pad, Rng& rng) {
  const std::size_t idx = params.add(prefix + ".k", {c_out, c_in, kernel, kernel});
  glorot_uniform(params[idx], c_in * kernel * kernel, c_out * kernel * kernel, rng);
  return attach(idx, c_in, c_out, kernel, kernel, stride, pad);
}

Conv2d Conv2d::attach(std::size_t kernel_segment, std::size_t c_in, std::size_t c_out,
                      std::size_t kh, std::size_t kw, std::size_t stride, std::size_t pad) {
  if (stride == 0) fail_usage("conv stride must be >= 1");
  Conv2d c;
  c.k_ = kernel_segment;
  c.c_in_ = c_in;
  c.c_out_ = c_out;
  c.kh_ = kh;
  c.kw_ = kw;
  c.stride_ = stride;
  c.pad_ = pad;
  return c;
}

std::size_t Conv2d::out_extent(std::size_t in, std::size_t k) const {
  return conv_extent(in, k, stride_, pad_);
}

Array Conv2d::forward(const ParamStore& params, const Array& x) const {
  const ConvGeom g = conv_geom(x, c_in_, c_out_, kh_, kw_, stride_, pad_);
  return conv_forward_impl(g, x, params[k_].values);
}

Array Conv2d::backward(ParamStore& params, const Array& x, const Array& gy) const {
  const ConvGeom g = conv_geom(x, c_in_, c_out_, kh_, kw_, stride_, pad_);
  if (gy.shape != std::vector<std::size_t>{g.batch, g.c_out, g.oh, g.ow}) {
    fail_usage("conv grad " + shape_string(gy.shape) + " does not match output");
  }
  const auto& k = params[k_].values;
  auto& gk = params[k_].grads;
  Array gx(x.shape);
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t co = 0; co < g.c_out; ++co) {
      const double* gc = &gy.data[((n * g.c_out) + co) * g.oh * g.ow];
      for (std::size_t ci = 0; ci < g.c_in; ++ci) {
        const std::size_t xoff = ((n * g.c_in) + ci) * g.h * g.w;
        const std::size_t koff = ((co * g.c_in) + ci) * g.kh * g.kw;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const double go = gc[oy * g.ow + ox];
            if (go == 0.0) continue;
            for (std::size_t u = 0; u < g.kh; ++u) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + u) -
                                        static_cast<std::ptrdiff_t>(g.pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
              for (std::size_t v = 0; v < g.kw; ++v) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + v) -
                                          static_cast<std::ptrdiff_t>(g.pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
                const std::size_t xi = xoff + static_cast<std::size_t>(iy) * g.w +
                                       static_cast<std::size_t>(ix);
                gk[koff + u * g.kw + v] += go * x.data[xi];
                gx.data[xi] += go * k[koff + u * g.kw + v];
              }
            }
          }
        }
      }
    }
  }
  return gx;
}

Array conv2d_forward(const Array& x, const Array& kernels, std::size_t stride,
                     std::size_t pad) {
  if (kernels.rank() != 4) fail_usage("conv kernels must be 4-d");
  const ConvGeom g = conv_geom(x, kernels.dim(1), kernels.dim(0), kernels.dim(2),
                               kernels.dim(3), stride, pad);
  return conv_forward_impl(g, x, kernels.data);
}

// ---------------------------------------------------------------------------
// Pooling / activations / losses

Array pool_mean(const Array& x) {
  if (x.rank() != 4 || x.dim(2) == 0 || x.dim(3) == 0) {
    fail_usage("pool_mean expects [batch x C x H x W] with H, W >= 1");
  }
  const std::size_t nc = x.dim(0) * x.dim(1);
  const std::size_t hw = x.dim(2) * x.dim(3);
  Array y({x.dim(0), x.dim(1)});
  for (std::size_t p = 0; p < nc; ++p) {
    double s = 0.0;
    for (std::size_t q = 0; q < hw; ++q) s += x.data[p * hw + q];
    y.data[p] = s / static_cast<double>(hw);
  }
  return y;
}

Array pool_mean_backward(const Array& x, const Array& gy) {
  const std::size_t nc = x.dim(0) * x.dim(1);
  const std::size_t hw = x.dim(2) * x.dim(3);
  Array gx(x.shape);
  for (std::size_t p = 0; p < nc; ++p) {
    const double g = gy.data[p] / static_cast<double>(hw);
    std::fill_n(gx.data.begin() + static_cast<std::ptrdiff_t>(p * hw), hw, g);
  }
  return gx;
}

Array sigmoid(const Array& x) {
  Array y(x.shape);
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double v = x.data[n];
    // Branches keep exp() from overflowing for large |v|.
    y.data[n] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return y;
}

Array sigmoid_backward(const Array& y, const Array& gy) {
  Array gx(y.shape);
  for (std::size_t n = 0; n < y.size(); ++n)
    gx.data[n] = gy.data[n] * y.data[n] * (1.0 - y.data[n]);
  return gx;
}

Array leaky_relu(const Array& x, double alpha) {
  Array y(x.shape);
  for (std::size_t n = 0; n < x.size(); ++n)
    y.data[n] = x.data[n] >= 0.0 ? x.data[n] : alpha * x.data[n];
  return y;
}

Array leaky_relu_backward(const Array& x, const Array& gy, double alpha) {
  Array gx(x.shape);
  for (std::size_t n = 0; n < x.size(); ++n)
    gx.data[n] = x.data[n] >= 0.0 ? gy.data[n] : alpha * gy.data[n];
  return gx;
}

Array tanh(const Array& x) {
  Array y(x.shape);
  for (std::size_t n = 0; n < x.size(); ++n) y.data[n] = std::tanh(x.data[n]);
  return y;
}

Array tanh_backward(const Array& y, const Array& gy) {
  Array gx(y.shape);
  for (std::size_t n = 0; n < y.size(); ++n)
    gx.data[n] = gy.data[n] * (1.0 - y.data[n] * y.data[n]);
  return gx;
}

double bce_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) {
    fail_usage("bce_loss needs equal-length nonempty inputs");
  }
  double s = 0.0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    const double p = std::clamp(pred[n], kBceEps, 1.0 - kBceEps);
    const double t = target[n];
    s -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return s / static_cast<double>(pred.size());
}

std::vector<double> bce_grad(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) {
    fail_usage("bce_grad needs equal-length nonempty inputs");
  }
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  std::vector<double> g(pred.size(), 0.0);
  for (std::size_t n = 0; n < pred.size(); ++n) {
    const double p = pred[n];
    if (p < kBceEps || p > 1.0 - kBceEps) continue;
    const double t = target[n];
    g[n] = -(t / p - (1.0 - t) / (1.0 - p)) * inv_n;
  }
  return g;
}

Array concat_features(const Array& x, const Array& y) {
  if (x.rank() != 2 || y.rank() != 2 || x.dim(0) != y.dim(0)) {
    fail_usage("concat_features needs two [batch x f] arrays with equal batch");
  }
  const std::size_t batch = x.dim(0), a = x.dim(1), b = y.dim(1);
  Array out({batch, a + b});
  for (std::size_t n = 0; n < batch; ++n) {
    std::copy_n(&x.data[n * a], a, &out.data[n * (a + b)]);
    std::copy_n(&y.data[n * b], b, &out.data[n * (a + b) + a]);
  }
  return out;
}

std::pair<Array, Array> split_features(const Array& grad, std::size_t first) {
  const std::size_t batch = grad.dim(0), total = grad.dim(1);
  if (first > total) fail_usage("split_features width exceeds feature count");
  Array ga({batch, first}), gb({batch, total - first});
  for (std::size_t n = 0; n < batch; ++n) {
    std::copy_n(&grad.data[n * total], first, &ga.data[n * first]);
    std::copy_n(&grad.data[n * total + first], total - first,
                &gb.data[n * (total - first)]);
  }
  return {std::move(ga), std::move(gb)};
}

Array timestep_embedding(std::span<const std::size_t> steps, std::size_t width) {
  if (width == 0 || width % 2 != 0) fail_usage("timestep embedding width must be even");
  const std::size_t half = width / 2;
  Array e({steps.size(), width});
  for (std::size_t n = 0; n < steps.size(); ++n) {
    const double t = static_cast<double>(steps[n]);
    for (std::size_t m = 0; m < half; ++m) {
      const double f = std::exp(-std::log(10000.0) * static_cast<double>(m) /
                                static_cast<double>(half));
      e.data[n * width + m] = std::sin(t * f);
      e.data[n * width + half + m] = std::cos(t * f);
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckReport grad_check(const std::function<double(ParamStore&, bool)>& loss,
                           ParamStore& params, const GradCheckOptions& opts) {
  params.zero_grads();
  loss(params, true);
  std::vector<std::vector<double>> analytic;
  for (const auto& s : params.segments()) analytic.push_back(s.grads);
  params.zero_grads();

  GradCheckReport report;
  Rng rng(opts.seed);
  for (std::size_t si = 0; si < params.segment_count(); ++si) {
    Segment& seg = params[si];
    std::vector<std::size_t> idx(seg.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (opts.max_per_segment > 0 && idx.size() > opts.max_per_segment) {
      std::shuffle(idx.begin(), idx.end(), rng.engine());
      idx.resize(opts.max_per_segment);
      std::sort(idx.begin(), idx.end());
    }
    bool failed = false;
    for (std::size_t n : idx) {
      const double orig = seg.values[n];
      seg.values[n] = orig + opts.h;
      const double up = loss(params, false);
      seg.values[n] = orig - opts.h;
      const double down = loss(params, false);
      seg.values[n] = orig;
      const double numeric = (up - down) / (2.0 * opts.h);
      const double a = analytic[si][n];
      const double denom = std::max({std::abs(a), std::abs(numeric), opts.abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_segment = seg.name;
      }
      if (rel > opts.tol) failed = true;
    }
    if (failed) report.failing_segments.push_back(seg.name);
  }
  params.zero_grads();
  return report;
}

}  // namespace gtgen::nn
