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

// Binary formats, all little-endian:
//
//   tensor  (.gt3): "GT3\0" u32 I u32 J u32 K, then I*J*K f32 row-major
//   factors (.gtf): "GTF\0" u32 r u32 I u32 J u32 K, then A, B, C as f32
//                   row-major (I*r, J*r, K*r values)
//
// Values are held as f64 in memory and rounded to f32 on write.

#include <filesystem>
#include <vector>

#include "gtgen/tensor.hpp"

namespace gtgen {

void write_tensor(const std::filesystem::path& path, const DenseTensor3& x);
DenseTensor3 read_tensor(const std::filesystem::path& path);

void write_factors(const std::filesystem::path& path, const CPFactors& f);
CPFactors read_factors(const std::filesystem::path& path);

/// Serialized bytes of a tensor file (used for digests and tests).
std::vector<char> encode_tensor(const DenseTensor3& x);
DenseTensor3 decode_tensor(std::vector<char> bytes, const std::string& source);

/// Sorted list of files with `extension` (e.g. ".gt3") in `dir`.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              const std::string& extension);

}  // namespace gtgen
