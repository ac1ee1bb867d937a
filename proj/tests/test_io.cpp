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


#include <doctest.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "gtgen/checkpoint.hpp"
#include "gtgen/error.hpp"
#include "gtgen/tensor_io.hpp"
#include "test_util.hpp"

using namespace gtgen;
using gtgen::testing::TempDir;

namespace {

// Independent little-endian encoder for the expected file bytes.
struct Bytes {
  std::vector<char> b;
  void raw(const char* s, std::size_t n) { b.insert(b.end(), s, s + n); }
  void u32(std::uint32_t v) {
    for (int q = 0; q < 4; ++q) b.push_back(static_cast<char>((v >> (8 * q)) & 0xff));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
};

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& p, const std::vector<char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::usage;
}

}  // namespace

TEST_CASE("tensor encoding matches the documented layout") {
  const DenseTensor3 x({1, 2, 3}, {0.5, -1.0, 2.0, 3.25, 0.0, 1e-3});
  Bytes want;
  want.raw("GT3\0", 4);
  want.u32(1);
  want.u32(2);
  want.u32(3);
  for (double v : x.values()) want.f32(v);
  CHECK(encode_tensor(x) == want.b);
}

TEST_CASE("tensor round trip rounds to f32") {
  TempDir dir("io");
  Rng rng(3);
  const DenseTensor3 x = gtgen::testing::random_tensor({3, 4, 5}, rng);
  write_tensor(dir.path() / "x.gt3", x);
  const DenseTensor3 y = read_tensor(dir.path() / "x.gt3");
  REQUIRE(y.dims() == x.dims());
  for (std::size_t q = 0; q < x.size(); ++q) {
    CHECK(y.values()[q] == static_cast<double>(static_cast<float>(x.values()[q])));
  }
  // A second write of the read-back tensor is byte-identical.
  write_tensor(dir.path() / "y.gt3", y);
  CHECK(slurp(dir.path() / "x.gt3") == slurp(dir.path() / "y.gt3"));
}

TEST_CASE("factor file layout and round trip") {
  TempDir dir("io");
  const CPFactors f(Matrix(2, 1, {1.0, 2.0}), Matrix(1, 1, {3.0}), Matrix(3, 1, {4.0, 5.0, 6.0}));
  write_factors(dir.path() / "f.gtf", f);
  Bytes want;
  want.raw("GTF\0", 4);
  for (std::uint32_t v : {1u, 2u, 1u, 3u}) want.u32(v);
  for (double v : {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}) want.f32(v);
  CHECK(slurp(dir.path() / "f.gtf") == want.b);
  const CPFactors g = read_factors(dir.path() / "f.gtf");
  CHECK(g.rank() == 1);
  CHECK(g.dims() == Dims3{2, 1, 3});
  CHECK(g.c(2, 0) == 6.0);
}

TEST_CASE("malformed tensor files are data errors") {
  TempDir dir("io");
  const auto good = encode_tensor(DenseTensor3({2, 2, 2}, 1.0));
  const auto p = dir.path() / "bad.gt3";

  auto bad_magic = good;
  bad_magic[0] = 'X';
  dump(p, bad_magic);
  CHECK(kind_of([&] { read_tensor(p); }) == ErrorKind::data);

  auto truncated = good;
  truncated.resize(truncated.size() - 2);
  dump(p, truncated);
  CHECK(kind_of([&] { read_tensor(p); }) == ErrorKind::data);

  auto trailing = good;
  trailing.push_back(0);
  dump(p, trailing);
  CHECK(kind_of([&] { read_tensor(p); }) == ErrorKind::data);

  dump(p, std::vector<char>(good.begin(), good.begin() + 6));
  CHECK(kind_of([&] { read_tensor(p); }) == ErrorKind::data);

  auto zero_dim = good;
  std::memset(zero_dim.data() + 4, 0, 4);
  dump(p, zero_dim);
  CHECK(kind_of([&] { read_tensor(p); }) == ErrorKind::data);

  CHECK(kind_of([&] { read_tensor(dir.path() / "missing.gt3"); }) == ErrorKind::data);
}

TEST_CASE("malformed factor files are data errors") {
  TempDir dir("io");
  write_factors(dir.path() / "f.gtf", CPFactors({2, 2, 2}, 2));
  auto bytes = slurp(dir.path() / "f.gtf");
  const auto p = dir.path() / "bad.gtf";
  auto trailing = bytes;
  trailing.push_back(1);
  dump(p, trailing);
  CHECK(kind_of([&] { read_factors(p); }) == ErrorKind::data);
  auto zero_rank = bytes;
  std::memset(zero_rank.data() + 4, 0, 4);
  dump(p, zero_rank);
  CHECK(kind_of([&] { read_factors(p); }) == ErrorKind::data);
  dump(p, encode_tensor(DenseTensor3({1, 1, 1})));
  CHECK(kind_of([&] { read_factors(p); }) == ErrorKind::data);
}

TEST_CASE("checkpoint round trip preserves names, shapes and f32 values") {
  TempDir dir("io");
  nn::ParamStore ps;
  ps.add("dense.w", {3, 2});
  ps.add("dense.b", {2});
  ps.add("conv.k", {2, 1, 3, 3});
  Rng rng(1);
  for (auto& seg : ps.segments()) rng.fill_normal(seg.values);
  write_checkpoint(dir.path() / "m.gtck", ps);
  const nn::ParamStore back = read_checkpoint(dir.path() / "m.gtck");
  REQUIRE(back.segment_count() == 3);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(back[s].name == ps[s].name);
    CHECK(back[s].shape == ps[s].shape);
    for (std::size_t e = 0; e < ps[s].size(); ++e) {
      CHECK(back[s].values[e] == static_cast<double>(static_cast<float>(ps[s].values[e])));
    }
  }
  const auto bytes = slurp(dir.path() / "m.gtck");
  CHECK(std::string(bytes.data(), 4) == "GTCK");

  nn::ParamStore target;
  target.add("conv.k", {2, 1, 3, 3});
  assign_params(target, back);
  CHECK(target[0].values == back.find("conv.k").values);
  nn::ParamStore wrong;
  wrong.add("conv.k", {3, 3});
  CHECK(kind_of([&] { assign_params(wrong, back); }) == ErrorKind::data);
  nn::ParamStore absent;
  absent.add("other", {1});
  CHECK(kind_of([&] { assign_params(absent, back); }) == ErrorKind::data);

  auto trailing = bytes;
  trailing.push_back(0);
  dump(dir.path() / "t.gtck", trailing);
  CHECK(kind_of([&] { read_checkpoint(dir.path() / "t.gtck"); }) == ErrorKind::data);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  dump(dir.path() / "t.gtck", truncated);
  CHECK(kind_of([&] { read_checkpoint(dir.path() / "t.gtck"); }) == ErrorKind::data);
}

TEST_CASE("optimizer state round trip") {
  TempDir dir("io");
  nn::ParamStore ps;
  ps.add("a", {4});
  ps.add("b", {2, 2});
  nn::AdamState st = nn::AdamState::for_store(ps, 3e-4, 0.5, 0.99, 1e-7);
  st.m[0] = {0.25, -0.5, 1.0, 2.0};
  st.v[1] = {1.0, 2.0, 3.0, 4.0};
  write_adam_state(dir.path() / "o.gtad", st, 42);
  std::uint64_t steps = 0;
  const nn::AdamState back = read_adam_state(dir.path() / "o.gtad", &steps);
  CHECK(steps == 42);
  CHECK(back.lr == 3e-4);
  CHECK(back.beta1 == 0.5);
  CHECK(back.beta2 == 0.99);
  CHECK(back.eps == 1e-7);
  CHECK(back.m == st.m);
  CHECK(back.v == st.v);

  auto bytes = slurp(dir.path() / "o.gtad");
  CHECK(std::string(bytes.data(), 4) == "GTAD");
  bytes.push_back(0);
  dump(dir.path() / "t.gtad", bytes);
  CHECK(kind_of([&] { read_adam_state(dir.path() / "t.gtad"); }) == ErrorKind::data);
  bytes.resize(bytes.size() - 9);
  dump(dir.path() / "t.gtad", bytes);
  CHECK(kind_of([&] { read_adam_state(dir.path() / "t.gtad"); }) == ErrorKind::data);
}

TEST_CASE("list_files is sorted and filtered") {
  TempDir dir("io");
  for (const char* name : {"b.gt3", "a.gt3", "c.txt", "d.gtf"}) dump(dir.path() / name, {'x'});
  const auto files = list_files(dir.path(), ".gt3");
  REQUIRE(files.size() == 2);
  CHECK(files[0].filename() == "a.gt3");
  CHECK(files[1].filename() == "b.gt3");
}
