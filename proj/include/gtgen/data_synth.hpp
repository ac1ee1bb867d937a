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

// Synthetic calorimeter-like showers.
//
// Each sample is a nonnegative I x J x K energy map: a gamma-like
// longitudinal profile along I peaking at a drawn depth, times a lateral
// Gaussian over (J, K) whose width grows with depth and whose center drifts
// slightly from slice to slice, plus uniform noise up to noise_floor.
// Generation is a pure function of (seed, index).

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gtgen/tensor.hpp"

namespace gtgen {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct ShowerParams {
  Dims3 dims{8, 12, 12};
  std::size_t n_samples = 64;
  Range depth_peak{2.0, 4.5};     // slice units
  Range lateral_sigma{1.0, 2.0};  // cell units
  Range amplitude{0.5, 1.0};
  double noise_floor = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

DenseTensor3 synth_shower(const ShowerParams& p, std::size_t index);
std::vector<DenseTensor3> synth_dataset(const ShowerParams& p);

/// Scales every tensor by 1 / (global max). Throws on an all-zero dataset.
std::pair<std::vector<DenseTensor3>, double> normalize_dataset(std::span<const DenseTensor3> xs);

/// FNV-1a 64 over the serialized tensor files, as 16 hex digits.
std::string dataset_digest(std::span<const DenseTensor3> xs);

/// Writes 000000.gt3, 000001.gt3, ... into `dir` (created if needed).
void write_dataset(const std::filesystem::path& dir, std::span<const DenseTensor3> xs);
/// Reads every .gt3 file in `dir` in name order; all must share dims.
std::vector<DenseTensor3> read_dataset(const std::filesystem::path& dir);

}  // namespace gtgen
