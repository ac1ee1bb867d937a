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

#include "gtgen/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "gtgen/error.hpp"
#include "gtgen/parallel.hpp"

namespace gtgen {

using nn::Array;

// ---------------------------------------------------------------------------
// Schedule and sampler primitives

double NoiseSchedule::alpha_bar(std::size_t t) const {
  if (t > steps) {
    fail_usage("timestep " + std::to_string(t) + " out of range [0, " +
               std::to_string(steps) + "]");
  }
  return alpha_bars[t];
}

NoiseSchedule make_schedule(std::size_t T, double beta_start, double beta_end) {
  if (T < 1) fail_usage("schedule needs T >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    fail_usage("schedule needs 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.steps = T;
  s.alpha_bars.push_back(1.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(t) / static_cast<double>(T - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    s.betas.push_back(beta);
    s.alphas.push_back(1.0 - beta);
    s.alpha_bars.push_back(s.alpha_bars.back() * (1.0 - beta));
  }
  return s;
}

std::vector<double> forward_noise(std::span<const double> x0, std::size_t t,
                                  std::span<const double> eps, const NoiseSchedule& s) {
  if (x0.size() != eps.size()) fail_usage("forward_noise: eps length differs from x0");
  const double ab = s.alpha_bar(t);
  const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
  std::vector<double> out(x0.size());
  for (std::size_t n = 0; n < x0.size(); ++n) out[n] = a * x0[n] + b * eps[n];
  return out;
}

std::vector<double> ddim_step(std::span<const double> x_t, std::span<const double> x0_pred,
                              std::size_t t, std::size_t t_prev, const NoiseSchedule& s) {
  if (t_prev >= t) fail_usage("ddim_step needs t_prev < t");
  if (x_t.size() != x0_pred.size()) fail_usage("ddim_step: array lengths differ");
  const double ab_t = s.alpha_bar(t);
  const double ab_prev = s.alpha_bar(t_prev);
  const double sa = std::sqrt(ab_t), sb = std::sqrt(1.0 - ab_t);
  const double pa = std::sqrt(ab_prev), pb = std::sqrt(1.0 - ab_prev);
  std::vector<double> out(x_t.size());
  for (std::size_t n = 0; n < x_t.size(); ++n) {
    const double eps_hat = (x_t[n] - sa * x0_pred[n]) / sb;
    out[n] = pa * x0_pred[n] + pb * eps_hat;
  }
  return out;
}

std::vector<std::size_t> ddim_timesteps(std::size_t T, std::size_t ddim_steps) {
  if (ddim_steps < 1 || ddim_steps > T) fail_usage("ddim_steps must lie in [1, T]");
  std::vector<std::size_t> ts;
  for (std::size_t i = ddim_steps; i >= 1; --i) ts.push_back(i * T / ddim_steps);
  return ts;
}

const char* to_string(DiffusionVariant v) {
  switch (v) {
    case DiffusionVariant::factor_to_factor: return "f2f";
    case DiffusionVariant::tensor_to_factor: return "t2f";
    case DiffusionVariant::full_tensor: return "full";
  }
  return "?";
}

DiffusionVariant parse_variant(const std::string& s) {
  if (s == "f2f" || s == "factor_to_factor") return DiffusionVariant::factor_to_factor;
  if (s == "t2f" || s == "tensor_to_factor") return DiffusionVariant::tensor_to_factor;
  if (s == "full" || s == "full_tensor") return DiffusionVariant::full_tensor;
  fail_usage("unknown diffusion variant '" + s + "'");
}

void DiffusionConfig::validate() const {
  if (!dims.positive()) fail_usage("diffusion: dims must be positive");
  if (ddim_steps < 1 || ddim_steps > T) fail_usage("diffusion: need 1 <= ddim_steps <= T");
  if (variant == DiffusionVariant::factor_to_factor && rank.is_full()) {
    fail_usage("diffusion: factor_to_factor needs a finite rank");
  }
  if (variant == DiffusionVariant::full_tensor && !rank.is_full()) {
    fail_usage("diffusion: full_tensor variant needs rank 'full'");
  }
  if (variant == DiffusionVariant::tensor_to_factor && rank.is_full()) {
    fail_usage("diffusion: tensor_to_factor needs a finite rank");
  }
  if (!(lr > 0.0)) fail_usage("diffusion: lr must be positive");
  if (batch_size < 1) fail_usage("diffusion: batch_size must be >= 1");
  make_schedule(T, beta_start, beta_end);
}

// ---------------------------------------------------------------------------
// Factor denoiser

FactorDenoiser FactorDenoiser::create(nn::ParamStore& params, const std::string& prefix,
                                      std::size_t flat, Rng& rng) {
  FactorDenoiser d;
  d.flat_ = flat;
  d.fc1_ = nn::Dense::create(params, prefix + ".fc1", flat + kTimeEmbedding, kDenoiserHidden, rng);
  d.fc2_ = nn::Dense::create(params, prefix + ".fc2", kDenoiserHidden, kDenoiserHidden, rng);
  d.out_ = nn::Dense::create(params, prefix + ".out", kDenoiserHidden, flat, rng);
  return d;
}

Array FactorDenoiser::forward(const nn::ParamStore& params, const Array& x,
                              std::span<const std::size_t> steps, Cache& c) const {
  c.in = nn::concat_features(x, nn::timestep_embedding(steps, kTimeEmbedding));
  c.z1 = fc1_.forward(params, c.in);
  c.a1 = nn::leaky_relu(c.z1, kLeakySlope);
  c.z2 = fc2_.forward(params, c.a1);
  c.a2 = nn::leaky_relu(c.z2, kLeakySlope);
  return out_.forward(params, c.a2);
}

void FactorDenoiser::backward(nn::ParamStore& params, const Cache& c, const Array& grad) const {
  const Array ga2 = out_.backward(params, c.a2, grad);
  const Array gz2 = nn::leaky_relu_backward(c.z2, ga2, kLeakySlope);
  const Array ga1 = fc2_.backward(params, c.a1, gz2);
  const Array gz1 = nn::leaky_relu_backward(c.z1, ga1, kLeakySlope);
  fc1_.backward(params, c.in, gz1);
}

void FactorDenoiser::zero_output(nn::ParamStore& params) const {
  auto& w = params[out_.weight_index()].values;
  auto& b = params[out_.bias_index()].values;
  std::fill(w.begin(), w.end(), 0.0);
  std::fill(b.begin(), b.end(), 0.0);
}

// ---------------------------------------------------------------------------
// Factor canonicalization / standardization

namespace {

const Matrix& slot(const CPFactors& f, std::size_t m) {
  return m == 0 ? f.a : (m == 1 ? f.b : f.c);
}
Matrix& slot(CPFactors& f, std::size_t m) {
  return m == 0 ? f.a : (m == 1 ? f.b : f.c);
}

double column_norm(const Matrix& m, std::size_t q) {
  double s = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) s += m(r, q) * m(r, q);
  return std::sqrt(s);
}

double column_sum(const Matrix& m, std::size_t q) {
  double s = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) s += m(r, q);
  return s;
}

}  // namespace

CPFactors canonicalize_factors(const CPFactors& f) {
  const std::size_t R = f.rank();
  CPFactors g = f;
  std::vector<double> lambda(R);
  for (std::size_t q = 0; q < R; ++q) {
    const double na = column_norm(f.a, q), nb = column_norm(f.b, q), nc = column_norm(f.c, q);
    lambda[q] = na * nb * nc;
    const double sb = column_sum(f.b, q) < 0.0 ? -1.0 : 1.0;
    const double sc = column_sum(f.c, q) < 0.0 ? -1.0 : 1.0;
    if (lambda[q] == 0.0) {
      for (std::size_t m = 0; m < 3; ++m)
        for (std::size_t r = 0; r < slot(g, m).rows(); ++r) slot(g, m)(r, q) = 0.0;
      continue;
    }
    const double s = std::cbrt(lambda[q]);
    const double scale[3] = {s / na * sb * sc, s / nb * sb, s / nc * sc};
    for (std::size_t m = 0; m < 3; ++m)
      for (std::size_t r = 0; r < slot(g, m).rows(); ++r) slot(g, m)(r, q) *= scale[m];
  }
  std::vector<std::size_t> order(R);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return lambda[x] > lambda[y]; });
  CPFactors out(f.dims(), R);
  for (std::size_t m = 0; m < 3; ++m)
    for (std::size_t r = 0; r < slot(g, m).rows(); ++r)
      for (std::size_t q = 0; q < R; ++q) slot(out, m)(r, q) = slot(g, m)(r, order[q]);
  return out;
}

FactorStandardizer FactorStandardizer::fit(std::span<const CPFactors> factors) {
  if (factors.empty()) fail_usage("standardizer needs at least one factor set");
  FactorStandardizer st;
  for (std::size_t m = 0; m < 3; ++m) {
    const std::size_t len = slot(factors.front(), m).data().size();
    double sum = 0.0;
    for (const auto& f : factors) {
      const auto v = slot(f, m).data();
      if (v.size() != len) fail_usage("standardizer: factor shapes differ across the set");
      for (double x : v) sum += x;
    }
    const double n = static_cast<double>(len * factors.size());
    const double mu = sum / n;
    double var = 0.0;
    for (const auto& f : factors)
      for (double x : slot(f, m).data()) var += (x - mu) * (x - mu);
    var /= n;
    st.mean[m] = mu;
    st.stdev[m] = var > 1e-32 ? std::sqrt(var) : 1.0;
  }
  return st;
}

CPFactors FactorStandardizer::standardize(const CPFactors& f) const {
  CPFactors out = f;
  for (std::size_t m = 0; m < 3; ++m)
    for (double& v : slot(out, m).data()) v = (v - mean[m]) / stdev[m];
  return out;
}

CPFactors FactorStandardizer::destandardize(const CPFactors& f) const {
  CPFactors out = f;
  for (std::size_t m = 0; m < 3; ++m)
    for (double& v : slot(out, m).data()) v = v * stdev[m] + mean[m];
  return out;
}

// ---------------------------------------------------------------------------
// Models

F2FModel::F2FModel(const DiffusionConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.variant != DiffusionVariant::factor_to_factor) {
    fail_usage("F2FModel needs the factor_to_factor variant");
  }
  const std::size_t r = cfg_.rank.value();
  Rng rng(derive_seed(cfg_.seed, stream::init));
  const std::size_t rows[3] = {cfg_.dims.i, cfg_.dims.j, cfg_.dims.k};
  const char* names[3] = {"f2f.A", "f2f.B", "f2f.C"};
  for (std::size_t m = 0; m < 3; ++m)
    nets_[m] = FactorDenoiser::create(params_[m], names[m], rows[m] * r, rng);
}

TensorDenoiserModel::TensorDenoiserModel(const DiffusionConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.variant == DiffusionVariant::factor_to_factor) {
    fail_usage("TensorDenoiserModel does not implement factor_to_factor");
  }
  Rng rng(derive_seed(cfg_.seed, stream::init));
  enc_ = SliceConvEncoder::create(params_, "den", cfg_.dims, 16, 32, 1,
                                  Activation::leaky_relu, rng);
  hidden_ = nn::Dense::create(params_, "den.fc", enc_.flat_width() + kTimeEmbedding,
                              kDenoiserHidden, rng);
  head_ = OutputHead::create(params_, "den.head", kDenoiserHidden, cfg_.dims, cfg_.rank, rng);
}

const OutputHead::Output& TensorDenoiserModel::forward(const Array& x,
                                                       std::span<const std::size_t> steps,
                                                       Cache& c) const {
  Array feat = enc_.forward(params_, x, &c.enc);
  feat.shape = {x.dim(0), enc_.flat_width()};
  c.joined = nn::concat_features(feat, nn::timestep_embedding(steps, kTimeEmbedding));
  c.z = hidden_.forward(params_, c.joined);
  c.a = nn::leaky_relu(c.z, kLeakySlope);
  c.out = head_.forward(params_, c.a);
  return c.out;
}

void TensorDenoiserModel::backward(const Cache& c, std::span<const DenseTensor3> grad) {
  const Array ga = head_.backward(params_, c.a, c.out, grad);
  const Array gz = nn::leaky_relu_backward(c.z, ga, kLeakySlope);
  const Array gj = hidden_.backward(params_, c.joined, gz);
  auto [gfeat, gemb] = nn::split_features(gj, enc_.flat_width());
  gfeat.shape = c.enc.a2.shape;
  enc_.backward(params_, c.enc, gfeat);
}

// ---------------------------------------------------------------------------
// Training steps

double f2f_train_step(std::span<const CPFactors> batch, F2FModel& model,
                      std::array<nn::AdamState, 3>& opts, const NoiseSchedule& s, Rng& rng) {
  if (batch.empty()) fail_usage("f2f_train_step: empty batch");
  const std::size_t n = batch.size();
  const std::size_t r = model.config().rank.value();
  for (const auto& f : batch) {
    if (!(f.dims() == model.config().dims) || f.rank() != r) {
      fail_usage("f2f_train_step: factor shapes do not match the model configuration");
    }
  }
  std::vector<std::size_t> steps(n);
  for (auto& t : steps) t = 1 + static_cast<std::size_t>(rng.below(s.steps));

  double loss = 0.0;
  for (std::size_t m = 0; m < 3; ++m) {
    const FactorDenoiser& net = model.denoisers()[m];
    const std::size_t flat = net.flat();
    Array x0({n, flat}), xt({n, flat});
    for (std::size_t q = 0; q < n; ++q) {
      const auto clean = slot(batch[q], m).data();
      std::vector<double> eps(flat);
      rng.fill_normal(eps);
      const auto noisy = forward_noise(clean, steps[q], eps, s);
      std::copy(clean.begin(), clean.end(), x0.data.begin() + static_cast<std::ptrdiff_t>(q * flat));
      std::copy(noisy.begin(), noisy.end(), xt.data.begin() + static_cast<std::ptrdiff_t>(q * flat));
    }
    FactorDenoiser::Cache cache;
    nn::ParamStore& params = model.params()[m];
    const Array pred = net.forward(params, xt, steps, cache);
    Array grad(pred.shape);
    for (std::size_t e = 0; e < pred.size(); ++e) {
      const double d = pred.data[e] - x0.data[e];
      loss += d * d / static_cast<double>(n);
      grad.data[e] = 2.0 * d / static_cast<double>(n);
    }
    params.zero_grads();
    net.backward(params, cache, grad);
    nn::adam_step(params, opts[m]);
  }
  if (!std::isfinite(loss)) fail_numerical("f2f training loss is not finite");
  return loss;
}

double t2f_train_step(std::span<const DenseTensor3> batch, TensorDenoiserModel& model,
                      nn::AdamState& opt, const NoiseSchedule& s, Rng& rng) {
  if (batch.empty()) fail_usage("t2f_train_step: empty batch");
  const Dims3 dims = model.config().dims;
  const std::size_t n = batch.size();
  std::vector<std::size_t> steps(n);
  for (auto& t : steps) t = 1 + static_cast<std::size_t>(rng.below(s.steps));
  std::vector<DenseTensor3> noisy;
  noisy.reserve(n);
  for (std::size_t q = 0; q < n; ++q) {
    if (!(batch[q].dims() == dims)) {
      fail_usage("t2f_train_step: tensor dims " + to_string(batch[q].dims()) +
                 " do not match " + to_string(dims));
    }
    std::vector<double> eps(dims.volume());
    rng.fill_normal(eps);
    noisy.emplace_back(dims, forward_noise(batch[q].values(), steps[q], eps, s));
  }
  TensorDenoiserModel::Cache cache;
  const auto& out = model.forward(stack_tensors(noisy), steps, cache);
  double loss = 0.0;
  std::vector<DenseTensor3> grads;
  grads.reserve(n);
  for (std::size_t q = 0; q < n; ++q) {
    DenseTensor3 g(dims);
    const auto pv = out.tensors[q].values();
    const auto cv = batch[q].values();
    for (std::size_t e = 0; e < pv.size(); ++e) {
      const double d = pv[e] - cv[e];
      loss += d * d / static_cast<double>(n);
      g.values()[e] = 2.0 * d / static_cast<double>(n);
    }
    grads.push_back(std::move(g));
  }
  model.params().zero_grads();
  model.backward(cache, grads);
  nn::adam_step(model.params(), opt);
  if (!std::isfinite(loss)) fail_numerical("t2f training loss is not finite");
  return loss;
}

// ---------------------------------------------------------------------------
// Sampling

DenseTensor3 f2f_sample(const F2FModel& model, const NoiseSchedule& s, std::size_t ddim_steps,
                        Rng& rng, const SnapshotFn& snapshot) {
  const auto ts = ddim_timesteps(s.steps, ddim_steps);
  const Dims3 dims = model.config().dims;
  const std::size_t r = model.config().rank.value();
  std::array<std::vector<double>, 3> x;
  for (std::size_t m = 0; m < 3; ++m) {
    x[m].resize(model.denoisers()[m].flat());
    rng.fill_normal(x[m]);
  }
  CPFactors pred(dims, r);
  for (std::size_t idx = 0; idx < ts.size(); ++idx) {
    const std::size_t t = ts[idx];
    const std::size_t t_prev = idx + 1 < ts.size() ? ts[idx + 1] : 0;
    const std::size_t step[1] = {t};
    for (std::size_t m = 0; m < 3; ++m) {
      FactorDenoiser::Cache cache;
      const Array p = model.denoisers()[m].forward(model.params()[m],
                                                   Array({1, x[m].size()}, x[m]), step, cache);
      std::copy(p.data.begin(), p.data.end(), slot(pred, m).data().begin());
      x[m] = ddim_step(x[m], p.data, t, t_prev, s);
    }
    if (snapshot) {
      const CPFactors f = model.standardizer().destandardize(pred);
      snapshot(idx, t, reconstruct(f), &f);
    }
  }
  return reconstruct(model.standardizer().destandardize(pred));
}

DenseTensor3 t2f_sample(const TensorDenoiserModel& model, const NoiseSchedule& s,
                        std::size_t ddim_steps, Rng& rng, const SnapshotFn& snapshot) {
  const auto ts = ddim_timesteps(s.steps, ddim_steps);
  const Dims3 dims = model.config().dims;
  std::vector<double> x(dims.volume());
  rng.fill_normal(x);
  DenseTensor3 last;
  for (std::size_t idx = 0; idx < ts.size(); ++idx) {
    const std::size_t t = ts[idx];
    const std::size_t t_prev = idx + 1 < ts.size() ? ts[idx + 1] : 0;
    const std::size_t step[1] = {t};
    TensorDenoiserModel::Cache cache;
    const auto& out = model.forward(Array({1, dims.i, dims.j, dims.k}, x), step, cache);
    last = out.tensors.front();
    x = ddim_step(x, last.values(), t, t_prev, s);
    if (snapshot) snapshot(idx, t, last, out.factors.empty() ? nullptr : &out.factors.front());
  }
  return last;
}

std::vector<DenseTensor3> f2f_sample_many(const F2FModel& model, std::size_t n,
                                          std::uint64_t seed) {
  const NoiseSchedule s = model.config().schedule();
  std::vector<DenseTensor3> out(n);
  parallel_for(n, [&](std::size_t q) {
    Rng rng(derive_seed(seed, q));
    out[q] = f2f_sample(model, s, model.config().ddim_steps, rng);
  });
  return out;
}

std::vector<DenseTensor3> t2f_sample_many(const TensorDenoiserModel& model, std::size_t n,
                                          std::uint64_t seed) {
  const NoiseSchedule s = model.config().schedule();
  std::vector<DenseTensor3> out(n);
  parallel_for(n, [&](std::size_t q) {
    Rng rng(derive_seed(seed, q));
    out[q] = t2f_sample(model, s, model.config().ddim_steps, rng);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Training loops

double cosine_lr(double base, double progress) {
  const double p = std::clamp(progress, 0.0, 1.0);
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * p));
}

namespace {

template <typename Item, typename StepFn>
std::vector<double> run_epochs(std::span<const Item> data, const DiffusionConfig& cfg,
                               StepFn&& step) {
  Rng shuffle_rng(derive_seed(cfg.seed, stream::shuffle));
  Rng noise_rng(derive_seed(cfg.seed, stream::noise));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t per_epoch = (data.size() + cfg.batch_size - 1) / cfg.batch_size;
  const double total = static_cast<double>(per_epoch * cfg.epochs);
  std::vector<double> losses;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t nb = std::min(cfg.batch_size, order.size() - start);
      std::vector<Item> batch;
      batch.reserve(nb);
      for (std::size_t q = 0; q < nb; ++q) batch.push_back(data[order[start + q]]);
      const double lr = cosine_lr(cfg.lr, static_cast<double>(losses.size()) / total);
      losses.push_back(step(std::span<const Item>(batch), noise_rng, lr));
    }
  }
  return losses;
}

}  // namespace

F2FTrainResult train_f2f(std::span<const CPFactors> factors, const DiffusionConfig& cfg) {
  if (factors.empty()) fail_usage("train_f2f: missing decomposition (no factors)");
  F2FTrainResult res{F2FModel(cfg), {}, {}};
  std::vector<CPFactors> canon;
  canon.reserve(factors.size());
  for (const auto& f : factors) {
    if (!(f.dims() == cfg.dims) || f.rank() != cfg.rank.value()) {
      fail_usage("train_f2f: factors (" + to_string(f.dims()) + ", rank " +
                 std::to_string(f.rank()) + ") do not match the configuration");
    }
    canon.push_back(canonicalize_factors(f));
  }
  res.model.standardizer() = FactorStandardizer::fit(canon);
  std::vector<CPFactors> standardized;
  standardized.reserve(canon.size());
  for (const auto& f : canon) standardized.push_back(res.model.standardizer().standardize(f));

  const NoiseSchedule s = cfg.schedule();
  for (std::size_t m = 0; m < 3; ++m)
    res.opts[m] = nn::AdamState::for_store(res.model.params()[m], cfg.lr);
  res.losses = run_epochs<CPFactors>(standardized, cfg, [&](std::span<const CPFactors> b, Rng& rng,
                                                           double lr) {
    for (auto& o : res.opts) o.lr = lr;
    return f2f_train_step(b, res.model, res.opts, s, rng);
  });
  return res;
}

T2FTrainResult train_tensor_denoiser(std::span<const DenseTensor3> dataset,
                                     const DiffusionConfig& cfg) {
  if (dataset.empty()) fail_usage("train_tensor_denoiser: empty dataset");
  T2FTrainResult res{TensorDenoiserModel(cfg), {}, {}};
  const NoiseSchedule s = cfg.schedule();
  res.opt = nn::AdamState::for_store(res.model.params(), cfg.lr);
  res.losses = run_epochs<DenseTensor3>(dataset, cfg, [&](std::span<const DenseTensor3> b, Rng& rng,
                                                           double lr) {
    res.opt.lr = lr;
    return t2f_train_step(b, res.model, res.opt, s, rng);
  });
  return res;
}

}  // namespace gtgen
