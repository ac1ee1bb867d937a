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

#include "gtgen/evaluation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "gtgen/error.hpp"
#include "gtgen/parallel.hpp"

namespace gtgen {

using nn::Array;
using EigenMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// Features

FeatureExtractor::FeatureExtractor(const Dims3& dims, std::uint64_t seed) : dims_(dims) {
  if (!dims.positive()) fail_usage("feature extractor dims must be positive");
  Rng rng(derive_seed(seed, stream::extractor));
  enc_ = SliceConvEncoder::create(params_, "feat", dims, 8, 16, 1, Activation::tanh, rng);
  out_ = nn::Dense::create(params_, "feat.out", enc_.out_channels(), kFeatureDim, rng);
}

std::vector<double> FeatureExtractor::extract(const DenseTensor3& x) const {
  if (!(x.dims() == dims_)) {
    fail_usage("feature_extract: tensor dims " + to_string(x.dims()) + " do not match " +
               to_string(dims_));
  }
  const Array feat = enc_.forward(params_, stack_tensors(std::span(&x, 1)), nullptr);
  return out_.forward(params_, nn::pool_mean(feat)).data;
}

std::vector<std::vector<double>> FeatureExtractor::extract_all(
    std::span<const DenseTensor3> xs) const {
  std::vector<std::vector<double>> out(xs.size());
  parallel_for(xs.size(), [&](std::size_t n) { out[n] = extract(xs[n]); });
  return out;
}

std::vector<double> feature_extract(const DenseTensor3& x, std::uint64_t extractor_seed) {
  return FeatureExtractor(x.dims(), extractor_seed).extract(x);
}

FeatureStats fit_gaussian(std::span<const std::vector<double>> features) {
  if (features.size() < 2) fail_usage("fit_gaussian needs at least 2 samples");
  const std::size_t d = features.front().size();
  for (const auto& f : features) {
    if (f.size() != d) fail_usage("fit_gaussian: feature vectors differ in length");
  }
  const double n = static_cast<double>(features.size());
  FeatureStats s{std::vector<double>(d, 0.0), Matrix(d, d)};
  for (const auto& f : features)
    for (std::size_t a = 0; a < d; ++a) s.mean[a] += f[a];
  for (double& m : s.mean) m /= n;
  std::vector<double> c(d);
  for (const auto& f : features) {
    for (std::size_t a = 0; a < d; ++a) c[a] = f[a] - s.mean[a];
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) s.cov(a, b) += c[a] * c[b];
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      const double v = 0.5 * (s.cov(a, b) + s.cov(b, a)) / (n - 1.0);
      s.cov(a, b) = v;
      s.cov(b, a) = v;
    }
  }
  return s;
}

double frechet_distance(const FeatureStats& s1, const FeatureStats& s2) {
  const std::size_t d = s1.dim();
  if (s2.dim() != d || s1.cov.rows() != d || s2.cov.rows() != d) {
    fail_usage("frechet_distance: dimension mismatch (" + std::to_string(s1.dim()) + " vs " +
               std::to_string(s2.dim()) + ")");
  }
  const auto n = static_cast<Eigen::Index>(d);
  const Eigen::Map<const EigenMat> c1(s1.cov.data().data(), n, n);
  const Eigen::Map<const EigenMat> c2(s2.cov.data().data(), n, n);

  double mean_term = 0.0;
  for (std::size_t a = 0; a < d; ++a) mean_term += (s1.mean[a] - s2.mean[a]) * (s1.mean[a] - s2.mean[a]);

  // S1 S2 and R S2 R with R = S1^(1/2) are similar, and the latter is
  // symmetric, so its eigenvalues are computed with a self-adjoint solver.
  Eigen::SelfAdjointEigenSolver<EigenMat> e1(c1);
  if (e1.info() != Eigen::Success) fail_numerical("frechet_distance: eigensolver failed");
  const Eigen::VectorXd root = e1.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const EigenMat r = e1.eigenvectors() * root.asDiagonal() * e1.eigenvectors().transpose();
  EigenMat m = r * c2 * r;
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<EigenMat> e2(m, Eigen::EigenvaluesOnly);
  if (e2.info() != Eigen::Success) fail_numerical("frechet_distance: eigensolver failed");
  double sqrt_trace = 0.0;
  for (Eigen::Index q = 0; q < n; ++q) sqrt_trace += std::sqrt(std::max(e2.eigenvalues()(q), 0.0));

  const double value = mean_term + c1.trace() + c2.trace() - 2.0 * sqrt_trace;
  if (!std::isfinite(value)) fail_numerical("frechet_distance is not finite");
  return std::max(value, 0.0);
}

double fid(std::span<const DenseTensor3> real, std::span<const DenseTensor3> gen,
           std::uint64_t extractor_seed) {
  if (real.size() < 2 || gen.size() < 2) fail_usage("fid needs at least 2 samples per set");
  const Dims3 dims = real.front().dims();
  for (const auto* set : {&real, &gen}) {
    for (const auto& x : *set) {
      if (!(x.dims() == dims)) {
        fail_usage("fid: tensor dims " + to_string(x.dims()) + " do not match " + to_string(dims));
      }
    }
  }
  const FeatureExtractor fx(dims, extractor_seed);
  const auto fr = fx.extract_all(real);
  const auto fg = fx.extract_all(gen);
  return frechet_distance(fit_gaussian(fr), fit_gaussian(fg));
}

// ---------------------------------------------------------------------------
// Sweep

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::gan: return "gan";
    case ModelKind::diff_f2f: return "f2f";
    case ModelKind::diff_t2f: return "t2f";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "gan") return ModelKind::gan;
  if (s == "f2f") return ModelKind::diff_f2f;
  if (s == "t2f") return ModelKind::diff_t2f;
  fail_usage("unknown model kind '" + s + "' (expected gan, f2f or t2f)");
}

std::pair<std::vector<DenseTensor3>, std::vector<DenseTensor3>> split_dataset(
    std::span<const DenseTensor3> dataset, double eval_fraction, std::uint64_t seed) {
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) fail_usage("eval_fraction must be in (0, 1)");
  const std::size_t n = dataset.size();
  auto n_eval = static_cast<std::size_t>(std::llround(eval_fraction * static_cast<double>(n)));
  n_eval = std::clamp<std::size_t>(n_eval, 2, n > 2 ? n - 1 : 2);
  if (n < 3) fail_usage("split_dataset needs at least 3 samples");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, stream::split));
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::vector<DenseTensor3> train, eval;
  for (std::size_t q = 0; q < n; ++q) (q < n_eval ? eval : train).push_back(dataset[order[q]]);
  return {std::move(train), std::move(eval)};
}

std::vector<DenseTensor3> train_and_sample(ModelKind kind, const RankSpec& rank,
                                           std::span<const DenseTensor3> train,
                                           const SweepConfig& cfg, std::uint64_t seed,
                                           std::size_t n) {
  if (train.empty()) fail_usage("train_and_sample: empty training set");
  const Dims3 dims = train.front().dims();
  const std::uint64_t sample_seed = derive_seed(seed, stream::sample);
  if (kind == ModelKind::gan) {
    GanConfig g = cfg.gan;
    g.dims = dims;
    g.rank = rank;
    g.seed = seed;
    return train_gan(train, g).model.sample(n, sample_seed);
  }
  DiffusionConfig d = cfg.diffusion;
  d.dims = dims;
  d.rank = rank;
  d.seed = seed;
  if (rank.is_full()) {
    d.variant = DiffusionVariant::full_tensor;
  } else if (kind == ModelKind::diff_t2f) {
    d.variant = DiffusionVariant::tensor_to_factor;
  } else {
    d.variant = DiffusionVariant::factor_to_factor;
    std::vector<CPFactors> factors(train.size());
    const std::uint64_t als_root = derive_seed(seed, stream::als);
    parallel_for(train.size(), [&](std::size_t q) {
      CpAlsOptions o = cfg.als;
      o.rank = rank.value();
      o.seed = derive_seed(als_root, q);
      factors[q] = cp_als(train[q], o).factors;
    });
    return f2f_sample_many(train_f2f(factors, d).model, n, sample_seed);
  }
  return t2f_sample_many(train_tensor_denoiser(train, d).model, n, sample_seed);
}

std::vector<SweepRow> run_sweep(std::span<const DenseTensor3> dataset, ModelKind kind,
                                std::span<const std::size_t> ranks, const SweepConfig& cfg) {
  if (ranks.empty()) fail_usage("run_sweep: ranks must be nonempty");
  if (dataset.empty()) fail_usage("run_sweep: empty dataset");
  const Dims3 dims = dataset.front().dims();
  const auto [train, eval] = split_dataset(dataset, cfg.eval_fraction, cfg.seed);
  const std::size_t n_gen = cfg.n_gen > 0 ? cfg.n_gen : eval.size();
  const double full = static_cast<double>(output_param_count(dims, RankSpec::full()));

  std::vector<RankSpec> specs;
  for (std::size_t r : ranks) specs.push_back(RankSpec::of(r));
  specs.push_back(RankSpec::full());

  std::vector<SweepRow> rows;
  for (const RankSpec& rank : specs) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = cfg.seed + (rank.is_full() ? 0 : rank.value());
    const auto gen = train_and_sample(kind, rank, train, cfg, seed, n_gen);
    SweepRow row;
    row.kind = kind;
    row.rank = rank;
    row.output_params = output_param_count(dims, rank);
    row.param_fraction = static_cast<double>(row.output_params) / full;
    row.fid = fid(eval, gen, cfg.extractor_seed);
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.baseline = rank.is_full();
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.param_fraction < b.param_fraction;
  });
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "model_kind,rank,output_params,param_fraction,fid,wall_seconds\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.6f,%.9g,%.3f\n", to_string(r.kind),
                  r.rank.to_string().c_str(), r.output_params, r.param_fraction, r.fid,
                  r.wall_seconds);
    out += buf;
  }
  return out;
}

std::string sweep_svg(std::span<const SweepRow> rows) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 30, B = 60;
  double fmax = 0.0, baseline = -1.0;
  for (const auto& r : rows) {
    fmax = std::max(fmax, r.fid);
    if (r.baseline) baseline = r.fid;
  }
  if (!(fmax > 0.0)) fmax = 1.0;
  fmax *= 1.1;
  auto px = [&](double f) { return L + f * (W - L - R); };
  auto py = [&](double v) { return H - B - v / fmax * (H - T - B); };

  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  for (int q = 0; q <= 4; ++q) {
    const double f = q / 4.0;
    s << "<text x=\"" << px(f) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
      << static_cast<int>(f * 100) << "%</text>\n";
    const double v = fmax * q / 4.0;
    s << "<text x=\"" << L - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << v
      << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15
    << "\" text-anchor=\"middle\">output parameters (fraction of full tensor)</text>\n";
  s << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 18 "
    << (T + H - B) / 2 << ")\" text-anchor=\"middle\">FID</text>\n";
  if (baseline >= 0.0) {
    s << "<line x1=\"" << L << "\" y1=\"" << py(baseline) << "\" x2=\"" << W - R << "\" y2=\""
      << py(baseline) << "\" stroke=\"red\" stroke-dasharray=\"6,4\"/>\n";
  }
  s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& r : rows)
    if (!r.baseline) s << px(r.param_fraction) << "," << py(r.fid) << " ";
  s << "\"/>\n";
  for (const auto& r : rows) {
    if (r.baseline) continue;
    s << "<circle cx=\"" << px(r.param_fraction) << "\" cy=\"" << py(r.fid)
      << "\" r=\"3\" fill=\"steelblue\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace gtgen
