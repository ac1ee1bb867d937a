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

#include "gtgen/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gtgen/error.hpp"
#include "gtgen/rng.hpp"
#include "gtgen/tensor_io.hpp"

namespace gtgen {

namespace {

constexpr double kProfileShape = 2.0;   // gamma-like exponent of the depth profile
constexpr double kSpreadGrowth = 0.6;   // lateral width growth over the full depth
constexpr double kCenterJitter = 0.5;   // cells
constexpr double kMaxDrift = 0.1;       // cells per slice

double draw(Rng& rng, const Range& r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); }

}  // namespace

void ShowerParams::validate() const {
  if (!dims.positive()) fail_usage("shower dims must be positive");
  if (n_samples < 1) fail_usage("n_samples must be >= 1");
  for (const Range* r : {&depth_peak, &lateral_sigma, &amplitude}) {
    if (!(r->lo <= r->hi)) fail_usage("shower parameter ranges must satisfy lo <= hi");
  }
  if (!(depth_peak.lo > 0.0)) fail_usage("depth_peak must be positive");
  if (!(lateral_sigma.lo > 0.0)) fail_usage("lateral_sigma must be positive");
  if (amplitude.lo < 0.0) fail_usage("amplitude must be nonnegative");
  if (!(noise_floor >= 0.0)) fail_usage("noise_floor must be >= 0");
}

DenseTensor3 synth_shower(const ShowerParams& p, std::size_t index) {
  p.validate();
  if (index >= p.n_samples) {
    fail_usage("shower index " + std::to_string(index) + " out of range (n_samples = " +
               std::to_string(p.n_samples) + ")");
  }
  Rng rng(derive_seed(derive_seed(p.seed, stream::data), index));
  const double peak = draw(rng, p.depth_peak);
  const double sigma0 = draw(rng, p.lateral_sigma);
  const double amp = draw(rng, p.amplitude);
  const double cj = 0.5 * static_cast<double>(p.dims.j - 1) + rng.uniform(-kCenterJitter, kCenterJitter);
  const double ck = 0.5 * static_cast<double>(p.dims.k - 1) + rng.uniform(-kCenterJitter, kCenterJitter);
  const double dj = rng.uniform(-kMaxDrift, kMaxDrift);
  const double dk = rng.uniform(-kMaxDrift, kMaxDrift);

  DenseTensor3 x(p.dims);
  const double depth = static_cast<double>(p.dims.i);
  for (std::size_t i = 0; i < p.dims.i; ++i) {
    const double z = static_cast<double>(i) + 0.5;
    const double s = z / peak;
    const double longitudinal = std::pow(s, kProfileShape) * std::exp(kProfileShape * (1.0 - s));
    const double sigma = sigma0 * (1.0 + kSpreadGrowth * z / depth);
    const double mj = cj + dj * (z - peak);
    const double mk = ck + dk * (z - peak);
    for (std::size_t j = 0; j < p.dims.j; ++j) {
      for (std::size_t k = 0; k < p.dims.k; ++k) {
        const double rj = static_cast<double>(j) - mj;
        const double rk = static_cast<double>(k) - mk;
        const double lateral = std::exp(-(rj * rj + rk * rk) / (2.0 * sigma * sigma));
        x(i, j, k) = amp * longitudinal * lateral;
      }
    }
  }
  if (p.noise_floor > 0.0) {
    for (double& v : x.values()) v += rng.uniform(0.0, p.noise_floor);
  }
  return x;
}

std::vector<DenseTensor3> synth_dataset(const ShowerParams& p) {
  p.validate();
  std::vector<DenseTensor3> out;
  out.reserve(p.n_samples);
  for (std::size_t n = 0; n < p.n_samples; ++n) out.push_back(synth_shower(p, n));
  return out;
}

std::pair<std::vector<DenseTensor3>, double> normalize_dataset(std::span<const DenseTensor3> xs) {
  if (xs.empty()) fail_usage("normalize_dataset: empty dataset");
  double mx = 0.0;
  for (const auto& x : xs)
    for (double v : x.values()) mx = std::max(mx, v);
  if (!(mx > 0.0)) fail_data("normalize_dataset: all-zero dataset");
  std::vector<DenseTensor3> out(xs.begin(), xs.end());
  for (auto& x : out)
    for (double& v : x.values()) v /= mx;
  return {std::move(out), mx};
}

std::string dataset_digest(std::span<const DenseTensor3> xs) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& x : xs) {
    for (char c : encode_tensor(x)) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_dataset(const std::filesystem::path& dir, std::span<const DenseTensor3> xs) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail_data("cannot create directory " + dir.string() + ": " + ec.message());
  for (std::size_t n = 0; n < xs.size(); ++n) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.gt3", n);
    write_tensor(dir / name, xs[n]);
  }
}

std::vector<DenseTensor3> read_dataset(const std::filesystem::path& dir) {
  const auto files = list_files(dir, ".gt3");
  if (files.empty()) fail_data("no .gt3 tensors in " + dir.string());
  std::vector<DenseTensor3> out;
  out.reserve(files.size());
  for (const auto& f : files) {
    out.push_back(read_tensor(f));
    if (!(out.back().dims() == out.front().dims())) {
      fail_data(f.string() + ": dims " + to_string(out.back().dims()) +
                " differ from the rest of the dataset (" + to_string(out.front().dims()) + ")");
    }
  }
  return out;
}

}  // namespace gtgen
