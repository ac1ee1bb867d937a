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

// Checkpoint formats (little-endian):
//
//   parameters: "GTCK" u32 segment_count, then per segment
//               u16 name_len, name bytes, u8 ndims, u32 dims[ndims],
//               f32 values[prod(dims)]
//   optimizer:  "GTAD" u64 step_count, f64 beta1 beta2 eps lr,
//               u32 segment_count, then per segment u32 len, f32 m[len],
//               f32 v[len]

#include <filesystem>

#include "gtgen/nn.hpp"

namespace gtgen {

void write_checkpoint(const std::filesystem::path& path, const nn::ParamStore& params);
nn::ParamStore read_checkpoint(const std::filesystem::path& path);

/// Copies values from `source` into same-named, same-shaped segments of
/// `target`. Every target segment must be present in the source.
void assign_params(nn::ParamStore& target, const nn::ParamStore& source);

void write_adam_state(const std::filesystem::path& path, const nn::AdamState& state,
                      std::uint64_t step_count);
nn::AdamState read_adam_state(const std::filesystem::path& path,
                              std::uint64_t* step_count = nullptr);

}  // namespace gtgen
