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

// File-level workflows behind the C API and CLI: run configuration,
// dataset generation, decomposition, training, sampling, FID and sweeps.
//
// Every output directory gets a run.json holding the fully resolved
// configuration. No timestamps or host data are written anywhere, so reruns
// with the same inputs produce identical files (sweep wall_seconds aside).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gtgen/data_synth.hpp"
#include "gtgen/evaluation.hpp"

namespace gtgen {

struct RunConfig {
  std::uint64_t seed = 0;
  ShowerParams data;
  GanConfig gan;
  DiffusionConfig diffusion;
  CpAlsOptions als{4, 500, 1e-10, 0};
  std::uint64_t extractor_seed = 7;
  double eval_fraction = 0.2;
  std::size_t n_gen = 0;
  ModelKind sweep_model = ModelKind::diff_t2f;
  std::vector<std::size_t> sweep_ranks{1, 4, 9};
  bool sweep_svg = true;

  SweepConfig sweep_config() const;
};

/// Defaults as pretty-printed JSON (the documented schema).
std::string default_config_text();
/// Parses `text` (empty: defaults) and applies it as a JSON merge patch over
/// the defaults. Unknown keys and ill-typed values are usage errors.
RunConfig resolve_config_text(const std::string& text);
std::string config_to_text(const RunConfig& cfg);

enum class TrainKind { gan, f2f, t2f, full };
const char* to_string(TrainKind k);
TrainKind parse_train_kind(const std::string& s);

struct GenDataSummary {
  std::size_t count = 0;
  std::string digest;
  double scale = 0.0;
};

/// Synthesizes, max-normalizes and writes the dataset plus meta.json.
GenDataSummary gen_data(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// cp_als at cfg.als.rank for every tensor; writes <stem>.gtf and errors.csv.
/// Returns the mean relative error.
double decompose(const RunConfig& cfg, const std::filesystem::path& data_dir,
                 const std::filesystem::path& out_dir);

/// Trains one model and writes checkpoints, optimizer state, metrics.csv and
/// run.json into out_dir. `factors_dir` is read by f2f only.
void train(TrainKind kind, const RunConfig& cfg, const std::filesystem::path& data_dir,
           const std::filesystem::path& factors_dir, const std::filesystem::path& out_dir);

/// Draws n samples from a training output directory. Writes NNNNNN.gt3,
/// samples.csv and, with `snapshots` (diffusion only), snapshots/step_NNN.pgm
/// for sample 0, one per DDIM step.
void sample(const std::filesystem::path& checkpoint_dir, std::size_t n,
            std::optional<std::uint64_t> seed, const std::filesystem::path& out_dir,
            bool snapshots);

/// FID between two tensor directories; writes a one-row CSV when csv_path
/// is nonempty.
double fid_dirs(const std::filesystem::path& real_dir, const std::filesystem::path& gen_dir,
                std::uint64_t extractor_seed, const std::filesystem::path& csv_path);

/// Runs the sweep on data_dir (or, if empty, on a freshly synthesized and
/// normalized dataset from cfg.data). Writes sweep.csv, optional sweep.svg
/// and run.json.
std::vector<SweepRow> sweep(const RunConfig& cfg, const std::filesystem::path& data_dir,
                            const std::filesystem::path& out_dir);

/// Tiled PGM (P5) of all I slices side by side, values clamped to [0, 1].
std::string slices_pgm(const DenseTensor3& x);

}  // namespace gtgen
