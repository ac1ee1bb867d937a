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

#include <cstdint>
#include <random>
#include <span>

namespace gtgen {

// Seed splitting.
//
// Every random draw in the project comes from one root seed. A consumer asks
// for an independent stream with derive_seed(root, stream), where `stream` is
// one of the ids below (optionally offset by a per-item index). The derived
// seed is splitmix64(root ^ splitmix64(stream)), so streams never share state
// and adding a new consumer does not perturb existing ones.
namespace stream {
inline constexpr std::uint64_t init = 1;       // network weight init
inline constexpr std::uint64_t data = 2;       // synthetic showers
inline constexpr std::uint64_t latent = 3;     // GAN latent vectors
inline constexpr std::uint64_t noise = 4;      // diffusion t / eps draws
inline constexpr std::uint64_t shuffle = 5;    // minibatch order
inline constexpr std::uint64_t sample = 6;     // sampling noise
inline constexpr std::uint64_t als = 7;        // CP-ALS initial factors
inline constexpr std::uint64_t split = 8;      // train/eval split
inline constexpr std::uint64_t extractor = 9;  // FID feature network
}  // namespace stream

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root,
                                    std::uint64_t stream_id) noexcept {
  return splitmix64(root ^ splitmix64(stream_id));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return normal_(engine_); }
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal();
  }
  void fill_uniform(std::span<double> out, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    for (double& v : out) v = d(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace gtgen
