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

#include "gtgen/tensor_io.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "binary_io.hpp"

namespace gtgen {

namespace detail {

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_data("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail_data("write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span<const char>(text.data(), text.size()));
}

}  // namespace detail

namespace {

constexpr std::string_view kTensorMagic{"GT3\0", 4};
constexpr std::string_view kFactorMagic{"GTF\0", 4};

// Largest element count we accept from a header (16 GiB of f32).
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

std::uint64_t checked_volume(std::uint64_t i, std::uint64_t j, std::uint64_t k,
                             const std::string& source) {
  if (i == 0 || j == 0 || k == 0) fail_data(source + ": zero extent in header");
  const std::uint64_t v = i * j * k;  // each factor < 2^32, so check via division
  if (v / i / j != k || v > kMaxElements) fail_data(source + ": header dims overflow");
  return v;
}

void expect_exact_payload(const detail::ByteReader& r, std::uint64_t values) {
  if (r.remaining() != 4 * values) {
    fail_data(r.source() + ": truncated file (header declares " +
              std::to_string(values) + " values, payload holds " +
              std::to_string(r.remaining()) + " bytes)");
  }
}

std::uint32_t as_u32(std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) fail_usage("extent exceeds u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<char> encode_tensor(const DenseTensor3& x) {
  detail::ByteWriter w;
  w.bytes(kTensorMagic);
  w.u32(as_u32(x.dims().i));
  w.u32(as_u32(x.dims().j));
  w.u32(as_u32(x.dims().k));
  w.f32s(x.values());
  return w.buffer();
}

DenseTensor3 decode_tensor(std::vector<char> bytes, const std::string& source) {
  detail::ByteReader r(std::move(bytes), source);
  r.expect_magic(kTensorMagic);
  const std::uint64_t i = r.u32(), j = r.u32(), k = r.u32();
  const std::uint64_t n = checked_volume(i, j, k, source);
  expect_exact_payload(r, n);
  std::vector<double> values(n);
  r.f32s(values);
  return DenseTensor3({i, j, k}, std::move(values));
}

void write_tensor(const std::filesystem::path& path, const DenseTensor3& x) {
  detail::write_file(path, encode_tensor(x));
}

DenseTensor3 read_tensor(const std::filesystem::path& path) {
  return decode_tensor(detail::read_file(path), path.string());
}

void write_factors(const std::filesystem::path& path, const CPFactors& f) {
  detail::ByteWriter w;
  w.bytes(kFactorMagic);
  w.u32(as_u32(f.rank()));
  w.u32(as_u32(f.a.rows()));
  w.u32(as_u32(f.b.rows()));
  w.u32(as_u32(f.c.rows()));
  w.f32s(f.a.data());
  w.f32s(f.b.data());
  w.f32s(f.c.data());
  detail::write_file(path, w.buffer());
}

CPFactors read_factors(const std::filesystem::path& path) {
  detail::ByteReader r(detail::read_file(path), path.string());
  r.expect_magic(kFactorMagic);
  const std::uint64_t rank = r.u32();
  const std::uint64_t i = r.u32(), j = r.u32(), k = r.u32();
  if (rank == 0) fail_data(path.string() + ": zero rank in header");
  checked_volume(i, j, k, path.string());
  const std::uint64_t n = (i + j + k) * rank;
  if (n > kMaxElements) fail_data(path.string() + ": header dims overflow");
  expect_exact_payload(r, n);
  CPFactors f({i, j, k}, rank);
  r.f32s(f.a.data());
  r.f32s(f.b.data());
  r.f32s(f.c.data());
  return f;
}

std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              const std::string& extension) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail_data("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension)
      out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace gtgen
