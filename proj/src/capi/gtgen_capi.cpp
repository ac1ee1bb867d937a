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

#include "gtgen/gtgen.h"

#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "gtgen/cp_als.hpp"
#include "gtgen/error.hpp"
#include "gtgen/pipeline.hpp"
#include "gtgen/tensor_io.hpp"

struct gtgen_tensor {
  gtgen::DenseTensor3 value;
};

struct gtgen_factors {
  gtgen::CPFactors value;
};

namespace {

thread_local std::string g_last_error;

gtgen_status fail(gtgen_status code, std::string msg) {
  g_last_error = std::move(msg);
  return code;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
gtgen_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return GTGEN_OK;
  } catch (const gtgen::Error& e) {
    return fail(static_cast<gtgen_status>(static_cast<int>(e.kind())), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(GTGEN_ERR_DATA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(GTGEN_ERR_DATA, "out of memory");
  } catch (const std::exception& e) {
    return fail(GTGEN_ERR_DATA, std::string("internal error: ") + e.what());
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) gtgen::fail_usage(std::string(name) + " must not be NULL");
}

std::string text_or_empty(const char* s) { return s ? std::string(s) : std::string(); }

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* gtgen_version(void) { return "0.1.0"; }

const char* gtgen_last_error(void) { return g_last_error.c_str(); }

void gtgen_string_free(char* s) { delete[] s; }

gtgen_status gtgen_tensor_create(size_t i, size_t j, size_t k, const double* values,
                                 gtgen_tensor** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    const gtgen::Dims3 d{i, j, k};
    auto t = values ? gtgen::DenseTensor3(d, std::vector<double>(values, values + d.volume()))
                    : gtgen::DenseTensor3(d);
    *out = new gtgen_tensor{std::move(t)};
  });
}

gtgen_status gtgen_tensor_read(const char* path, gtgen_tensor** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new gtgen_tensor{gtgen::read_tensor(path)};
  });
}

gtgen_status gtgen_tensor_write(const gtgen_tensor* t, const char* path) {
  return guarded([&] {
    require(t, "tensor");
    require(path, "path");
    gtgen::write_tensor(path, t->value);
  });
}

void gtgen_tensor_free(gtgen_tensor* t) { delete t; }

gtgen_status gtgen_tensor_dims(const gtgen_tensor* t, size_t dims[3]) {
  return guarded([&] {
    require(t, "tensor");
    require(dims, "dims");
    dims[0] = t->value.dims().i;
    dims[1] = t->value.dims().j;
    dims[2] = t->value.dims().k;
  });
}

const double* gtgen_tensor_data(const gtgen_tensor* t) {
  return t ? t->value.values().data() : nullptr;
}

gtgen_status gtgen_factors_read(const char* path, gtgen_factors** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new gtgen_factors{gtgen::read_factors(path)};
  });
}

gtgen_status gtgen_factors_write(const gtgen_factors* f, const char* path) {
  return guarded([&] {
    require(f, "factors");
    require(path, "path");
    gtgen::write_factors(path, f->value);
  });
}

void gtgen_factors_free(gtgen_factors* f) { delete f; }

gtgen_status gtgen_factors_rank(const gtgen_factors* f, size_t* rank) {
  return guarded([&] {
    require(f, "factors");
    require(rank, "rank");
    *rank = f->value.rank();
  });
}

gtgen_status gtgen_factors_matrix(const gtgen_factors* f, int mode, const double** data,
                                  size_t* rows) {
  return guarded([&] {
    require(f, "factors");
    require(data, "data");
    const gtgen::Matrix* m = mode == 1 ? &f->value.a
                             : mode == 2 ? &f->value.b
                             : mode == 3 ? &f->value.c
                                         : nullptr;
    if (!m) gtgen::fail_usage("mode must be 1, 2 or 3");
    *data = m->data().data();
    if (rows) *rows = m->rows();
  });
}

gtgen_status gtgen_cp_als(const gtgen_tensor* x, size_t rank, size_t max_iters, double tol,
                          uint64_t seed, gtgen_factors** out, double* final_error,
                          size_t* sweeps) {
  return guarded([&] {
    require(x, "tensor");
    require(out, "out");
    *out = nullptr;
    auto res = gtgen::cp_als(x->value, {rank, max_iters, tol, seed});
    if (final_error) *final_error = res.final_error();
    if (sweeps) *sweeps = res.fit_history.size();
    *out = new gtgen_factors{std::move(res.factors)};
  });
}

gtgen_status gtgen_reconstruct(const gtgen_factors* f, gtgen_tensor** out) {
  return guarded([&] {
    require(f, "factors");
    require(out, "out");
    *out = nullptr;
    *out = new gtgen_tensor{gtgen::reconstruct(f->value)};
  });
}

gtgen_status gtgen_frobenius_distance(const gtgen_tensor* x, const gtgen_tensor* y, double* out) {
  return guarded([&] {
    require(x, "x");
    require(y, "y");
    require(out, "out");
    *out = gtgen::frobenius_distance(x->value, y->value);
  });
}

gtgen_status gtgen_output_param_count(size_t i, size_t j, size_t k, size_t rank, uint64_t* out) {
  return guarded([&] {
    require(out, "out");
    const gtgen::Dims3 d{i, j, k};
    if (!d.positive()) gtgen::fail_usage("dims must be positive");
    *out = gtgen::output_param_count(d, rank == 0 ? gtgen::RankSpec::full()
                                                  : gtgen::RankSpec::of(rank));
  });
}

gtgen_status gtgen_default_config(char** json_out) {
  return guarded([&] {
    require(json_out, "json_out");
    *json_out = dup_string(gtgen::default_config_text());
  });
}

gtgen_status gtgen_resolve_config(const char* config_json, char** json_out) {
  return guarded([&] {
    require(json_out, "json_out");
    *json_out = dup_string(
        gtgen::config_to_text(gtgen::resolve_config_text(text_or_empty(config_json))));
  });
}

gtgen_status gtgen_gen_data(const char* config_json, const char* out_dir, size_t* count_out,
                            char* digest_out) {
  return guarded([&] {
    require(out_dir, "out_dir");
    const auto cfg = gtgen::resolve_config_text(text_or_empty(config_json));
    const auto s = gtgen::gen_data(cfg, out_dir);
    if (count_out) *count_out = s.count;
    if (digest_out) std::memcpy(digest_out, s.digest.c_str(), s.digest.size() + 1);
  });
}

gtgen_status gtgen_decompose(const char* config_json, const char* data_dir, const char* out_dir,
                             double* mean_error) {
  return guarded([&] {
    require(data_dir, "data_dir");
    const auto cfg = gtgen::resolve_config_text(text_or_empty(config_json));
    const std::filesystem::path data(data_dir);
    const std::filesystem::path out =
        out_dir && *out_dir ? std::filesystem::path(out_dir) : data / "factors";
    const double e = gtgen::decompose(cfg, data, out);
    if (mean_error) *mean_error = e;
  });
}

gtgen_status gtgen_train(gtgen_model model, const char* config_json, const char* data_dir,
                         const char* factors_dir, const char* out_dir) {
  return guarded([&] {
    require(data_dir, "data_dir");
    require(out_dir, "out_dir");
    gtgen::TrainKind kind;
    switch (model) {
      case GTGEN_MODEL_GAN: kind = gtgen::TrainKind::gan; break;
      case GTGEN_MODEL_F2F: kind = gtgen::TrainKind::f2f; break;
      case GTGEN_MODEL_T2F: kind = gtgen::TrainKind::t2f; break;
      case GTGEN_MODEL_FULL: kind = gtgen::TrainKind::full; break;
      default: gtgen::fail_usage("unknown model kind " + std::to_string(static_cast<int>(model)));
    }
    const auto cfg = gtgen::resolve_config_text(text_or_empty(config_json));
    const std::filesystem::path data(data_dir);
    const std::filesystem::path factors =
        factors_dir && *factors_dir ? std::filesystem::path(factors_dir) : data / "factors";
    gtgen::train(kind, cfg, data, factors, out_dir);
  });
}

gtgen_status gtgen_sample(const char* checkpoint_dir, size_t n, const uint64_t* seed,
                          const char* out_dir, int snapshots) {
  return guarded([&] {
    require(checkpoint_dir, "checkpoint_dir");
    require(out_dir, "out_dir");
    std::optional<std::uint64_t> s;
    if (seed) s = *seed;
    gtgen::sample(checkpoint_dir, n, s, out_dir, snapshots != 0);
  });
}

gtgen_status gtgen_fid(const char* real_dir, const char* gen_dir, uint64_t extractor_seed,
                       const char* csv_path, double* out) {
  return guarded([&] {
    require(real_dir, "real_dir");
    require(gen_dir, "gen_dir");
    const double v = gtgen::fid_dirs(real_dir, gen_dir, extractor_seed,
                                     csv_path ? std::filesystem::path(csv_path)
                                              : std::filesystem::path());
    if (out) *out = v;
  });
}

gtgen_status gtgen_sweep(const char* config_json, const char* data_dir, const char* out_dir,
                         char** csv_out) {
  return guarded([&] {
    require(out_dir, "out_dir");
    if (csv_out) *csv_out = nullptr;
    const auto cfg = gtgen::resolve_config_text(text_or_empty(config_json));
    const auto rows = gtgen::sweep(cfg, data_dir ? std::filesystem::path(data_dir)
                                                 : std::filesystem::path(),
                                   out_dir);
    if (csv_out) *csv_out = dup_string(gtgen::sweep_csv(rows));
  });
}

}  // extern "C"
