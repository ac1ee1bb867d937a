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

#ifndef GTGEN_H_
#define GTGEN_H_

/*
 * C interface to libgtgen.
 *
 * Every fallible call returns a gtgen_status. On failure the message is
 * available from gtgen_last_error() on the same thread until the next call.
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function (NULL is accepted). Strings returned through char** must be
 * released with gtgen_string_free.
 *
 * Configuration arguments are JSON text merged over the defaults returned by
 * gtgen_default_config; NULL or "" means all defaults.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GTGEN_API __declspec(dllexport)
#else
#define GTGEN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gtgen_status {
  GTGEN_OK = 0,
  GTGEN_ERR_USAGE = 1,   /* bad argument, shape mismatch, invalid config */
  GTGEN_ERR_DATA = 2,    /* unreadable or malformed files, missing inputs */
  GTGEN_ERR_NUMERIC = 3  /* undefined or non-finite numerical result */
} gtgen_status;

typedef enum gtgen_model {
  GTGEN_MODEL_GAN = 0,
  GTGEN_MODEL_F2F = 1,
  GTGEN_MODEL_T2F = 2,
  GTGEN_MODEL_FULL = 3
} gtgen_model;

typedef struct gtgen_tensor gtgen_tensor;
typedef struct gtgen_factors gtgen_factors;

GTGEN_API const char* gtgen_version(void);
GTGEN_API const char* gtgen_last_error(void);
GTGEN_API void gtgen_string_free(char* s);

/* ---- tensors ---------------------------------------------------------- */

/* values may be NULL (zeros); otherwise i*j*k doubles, row-major. */
GTGEN_API gtgen_status gtgen_tensor_create(size_t i, size_t j, size_t k, const double* values,
                                           gtgen_tensor** out);
GTGEN_API gtgen_status gtgen_tensor_read(const char* path, gtgen_tensor** out);
GTGEN_API gtgen_status gtgen_tensor_write(const gtgen_tensor* t, const char* path);
GTGEN_API void gtgen_tensor_free(gtgen_tensor* t);
GTGEN_API gtgen_status gtgen_tensor_dims(const gtgen_tensor* t, size_t dims[3]);
/* Borrowed pointer to i*j*k doubles, valid until the handle is freed. */
GTGEN_API const double* gtgen_tensor_data(const gtgen_tensor* t);

/* ---- CP factors -------------------------------------------------------- */

GTGEN_API gtgen_status gtgen_factors_read(const char* path, gtgen_factors** out);
GTGEN_API gtgen_status gtgen_factors_write(const gtgen_factors* f, const char* path);
GTGEN_API void gtgen_factors_free(gtgen_factors* f);
GTGEN_API gtgen_status gtgen_factors_rank(const gtgen_factors* f, size_t* rank);
/* mode 1, 2 or 3 selects A, B or C; rows x rank doubles, row-major. */
GTGEN_API gtgen_status gtgen_factors_matrix(const gtgen_factors* f, int mode,
                                            const double** data, size_t* rows);

GTGEN_API gtgen_status gtgen_cp_als(const gtgen_tensor* x, size_t rank, size_t max_iters,
                                    double tol, uint64_t seed, gtgen_factors** out,
                                    double* final_error, size_t* sweeps);
GTGEN_API gtgen_status gtgen_reconstruct(const gtgen_factors* f, gtgen_tensor** out);
GTGEN_API gtgen_status gtgen_frobenius_distance(const gtgen_tensor* x, const gtgen_tensor* y,
                                                double* out);
/* rank 0 means the full tensor. */
GTGEN_API gtgen_status gtgen_output_param_count(size_t i, size_t j, size_t k, size_t rank,
                                                uint64_t* out);

/* ---- workflows ---------------------------------------------------------- */

GTGEN_API gtgen_status gtgen_default_config(char** json_out);
GTGEN_API gtgen_status gtgen_resolve_config(const char* config_json, char** json_out);

/* digest_out receives 16 hex digits plus a terminator (17 bytes); count_out
 * and digest_out may be NULL. */
GTGEN_API gtgen_status gtgen_gen_data(const char* config_json, const char* out_dir,
                                      size_t* count_out, char* digest_out);
/* out_dir NULL or "": <data_dir>/factors. mean_error may be NULL. */
GTGEN_API gtgen_status gtgen_decompose(const char* config_json, const char* data_dir,
                                       const char* out_dir, double* mean_error);
/* factors_dir is used by GTGEN_MODEL_F2F only; NULL or "": <data_dir>/factors. */
GTGEN_API gtgen_status gtgen_train(gtgen_model model, const char* config_json,
                                   const char* data_dir, const char* factors_dir,
                                   const char* out_dir);
/* seed NULL: derived from the training seed. */
GTGEN_API gtgen_status gtgen_sample(const char* checkpoint_dir, size_t n, const uint64_t* seed,
                                    const char* out_dir, int snapshots);
/* csv_path may be NULL. */
GTGEN_API gtgen_status gtgen_fid(const char* real_dir, const char* gen_dir,
                                 uint64_t extractor_seed, const char* csv_path, double* out);
/* data_dir NULL or "": synthesize from the config's data section. The CSV
 * text is returned through csv_out when non-NULL. */
GTGEN_API gtgen_status gtgen_sweep(const char* config_json, const char* data_dir,
                                   const char* out_dir, char** csv_out);

#ifdef __cplusplus
}
#endif

#endif /* GTGEN_H_ */
