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

#include "gtgen/checkpoint.hpp"

#include <bit>
#include <limits>

#include "binary_io.hpp"

namespace gtgen {

namespace {
constexpr std::string_view kParamMagic{"GTCK", 4};
constexpr std::string_view kAdamMagic{"GTAD", 4};
}  // namespace

void write_checkpoint(const std::filesystem::path& path, const nn::ParamStore& params) {
  detail::ByteWriter w;
  w.bytes(kParamMagic);
  w.u32(static_cast<std::uint32_t>(params.segment_count()));
  for (const auto& s : params.segments()) {
    if (s.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      fail_usage("segment name too long: " + s.name);
    }
    w.u16(static_cast<std::uint16_t>(s.name.size()));
    w.bytes(s.name);
    w.u8(static_cast<std::uint8_t>(s.shape.size()));
    for (std::size_t d : s.shape) w.u32(static_cast<std::uint32_t>(d));
    w.f32s(s.values);
  }
  detail::write_file(path, w.buffer());
}

nn::ParamStore read_checkpoint(const std::filesystem::path& path) {
  detail::ByteReader r(detail::read_file(path), path.string());
  r.expect_magic(kParamMagic);
  const std::uint32_t count = r.u32();
  nn::ParamStore store;
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::string name = r.bytes(r.u16());
    const std::uint8_t ndims = r.u8();
    std::vector<std::size_t> shape(ndims);
    std::uint64_t volume = 1;
    for (auto& d : shape) {
      d = r.u32();
      volume *= d;
      if (volume > (std::uint64_t{1} << 32)) fail_data(path.string() + ": segment too large");
    }
    if (4 * volume > r.remaining()) fail_data(path.string() + ": truncated file (segment " + name + ")");
    const std::size_t idx = store.add(name, shape);
    r.f32s(store[idx].values);
  }
  if (r.remaining() != 0) fail_data(path.string() + ": trailing bytes after checkpoint");
  return store;
}

void assign_params(nn::ParamStore& target, const nn::ParamStore& source) {
  for (auto& seg : target.segments()) {
    if (!source.contains(seg.name)) fail_data("checkpoint lacks segment '" + seg.name + "'");
    const auto& src = source.find(seg.name);
    if (src.shape != seg.shape) {
      fail_data("checkpoint segment '" + seg.name + "' has shape " +
                nn::shape_string(src.shape) + ", expected " + nn::shape_string(seg.shape));
    }
    seg.values = src.values;
  }
}

void write_adam_state(const std::filesystem::path& path, const nn::AdamState& st,
                      std::uint64_t step_count) {
  detail::ByteWriter w;
  w.bytes(kAdamMagic);
  w.u64(step_count);
  for (double v : {st.beta1, st.beta2, st.eps, st.lr}) w.u64(std::bit_cast<std::uint64_t>(v));
  w.u32(static_cast<std::uint32_t>(st.m.size()));
  for (std::size_t s = 0; s < st.m.size(); ++s) {
    w.u32(static_cast<std::uint32_t>(st.m[s].size()));
    w.f32s(st.m[s]);
    w.f32s(st.v[s]);
  }
  detail::write_file(path, w.buffer());
}

nn::AdamState read_adam_state(const std::filesystem::path& path, std::uint64_t* step_count) {
  detail::ByteReader r(detail::read_file(path), path.string());
  r.expect_magic(kAdamMagic);
  const std::uint64_t steps = r.u64();
  if (step_count) *step_count = steps;
  nn::AdamState st;
  st.beta1 = std::bit_cast<double>(r.u64());
  st.beta2 = std::bit_cast<double>(r.u64());
  st.eps = std::bit_cast<double>(r.u64());
  st.lr = std::bit_cast<double>(r.u64());
  const std::uint32_t count = r.u32();
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::uint32_t len = r.u32();
    if (8ull * len > r.remaining()) fail_data(path.string() + ": truncated file (moments)");
    st.m.emplace_back(len);
    st.v.emplace_back(len);
    r.f32s(st.m.back());
    r.f32s(st.v.back());
  }
  if (r.remaining() != 0) fail_data(path.string() + ": trailing bytes after optimizer state");
  return st;
}

}  // namespace gtgen
