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

// gtgen command-line driver. Talks to the library only through gtgen.h.
//
// Config precedence: built-in defaults < --config file < command-line flags.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "gtgen/gtgen.h"

namespace {

using nlohmann::json;

struct Failure {
  int code;
  std::string message;
};

void check(gtgen_status s) {
  if (s != GTGEN_OK) throw Failure{static_cast<int>(s), gtgen_last_error()};
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{GTGEN_ERR_DATA, "cannot read config file " + path};
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    throw Failure{GTGEN_ERR_USAGE, path + ": invalid JSON (" + e.what() + ")"};
  }
}

json parse_rank(const std::string& s) {
  if (s == "full") return "full";
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Failure{GTGEN_ERR_USAGE, "rank must be a positive integer or 'full', got '" + s + "'"};
}

// Shared flags: --config and --seed, applied as a merge patch.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file (merged over defaults)");
    app->add_option("--seed", seed, "root seed");
  }

  json resolve(const json& flag_patch) const {
    json cfg = load_config(config_path);
    if (!cfg.is_object()) throw Failure{GTGEN_ERR_USAGE, "config must be a JSON object"};
    cfg.merge_patch(flag_patch);
    if (seed) cfg["seed"] = *seed;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gtgen: tensor-factorized generative models for 3-D tensors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gtgen_version()));

  // gen-data
  ConfigFlags gd_cfg;
  std::string gd_out;
  std::optional<std::size_t> gd_n;
  auto* gd = app.add_subcommand("gen-data", "synthesize a normalized shower dataset");
  gd_cfg.add(gd);
  gd->add_option("--out", gd_out, "output dataset directory")->required();
  gd->add_option("--n", gd_n, "number of samples");

  // decompose
  ConfigFlags dc_cfg;
  std::string dc_data, dc_out, dc_rank;
  auto* dc = app.add_subcommand("decompose", "CP-ALS decomposition of every dataset tensor");
  dc_cfg.add(dc);
  dc->add_option("--data", dc_data, "dataset directory")->required();
  dc->add_option("--rank", dc_rank, "CP rank");
  dc->add_option("--out", dc_out, "output directory (default <data>/factors)");

  // train-*
  struct TrainFlags {
    ConfigFlags cfg;
    std::string data, out, factors, rank;
    std::optional<std::size_t> epochs;
  };
  const struct {
    const char* name;
    const char* help;
    gtgen_model model;
  } train_kinds[] = {
      {"train-gan", "train the factorized GAN", GTGEN_MODEL_GAN},
      {"train-diff-f2f", "train factor-to-factor diffusion (needs decompose output)",
       GTGEN_MODEL_F2F},
      {"train-diff-t2f", "train tensor-to-factor diffusion", GTGEN_MODEL_T2F},
      {"train-diff-full", "train the full-tensor diffusion baseline", GTGEN_MODEL_FULL},
  };
  TrainFlags tf[4];
  CLI::App* train_cmds[4];
  for (int q = 0; q < 4; ++q) {
    auto* c = app.add_subcommand(train_kinds[q].name, train_kinds[q].help);
    tf[q].cfg.add(c);
    c->add_option("--data", tf[q].data, "dataset directory")->required();
    c->add_option("--out", tf[q].out, "output directory")->required();
    c->add_option("--epochs", tf[q].epochs, "training epochs");
    if (train_kinds[q].model != GTGEN_MODEL_FULL) {
      c->add_option("--rank", tf[q].rank, "CP rank (or 'full' for the GAN)");
    }
    if (train_kinds[q].model == GTGEN_MODEL_F2F) {
      c->add_option("--factors", tf[q].factors, "factor directory (default <data>/factors)");
    }
    train_cmds[q] = c;
  }

  // sample
  std::string sp_ckpt, sp_out;
  std::size_t sp_n = 16;
  std::optional<std::uint64_t> sp_seed;
  bool sp_snap = false;
  auto* sp = app.add_subcommand("sample", "draw samples from a trained model");
  sp->add_option("--checkpoint", sp_ckpt, "training output directory")->required();
  sp->add_option("--n", sp_n, "number of samples")->capture_default_str();
  sp->add_option("--out", sp_out, "output directory")->required();
  sp->add_option("--seed", sp_seed, "sampling seed (default: derived from the training seed)");
  sp->add_flag("--snapshots", sp_snap, "write per-step PGM snapshots of sample 0 (diffusion)");

  // fid
  std::string fd_real, fd_gen, fd_out = "fid.csv";
  std::uint64_t fd_seed = 7;
  auto* fd = app.add_subcommand("fid", "random-feature FID between two tensor directories");
  fd->add_option("--real", fd_real, "real tensor directory")->required();
  fd->add_option("--gen", fd_gen, "generated tensor directory")->required();
  fd->add_option("--seed", fd_seed, "feature extractor seed")->capture_default_str();
  fd->add_option("--out", fd_out, "one-row CSV output")->capture_default_str();

  // sweep
  ConfigFlags sw_cfg;
  std::string sw_model, sw_ranks, sw_out, sw_data;
  bool sw_no_svg = false;
  auto* sw = app.add_subcommand("sweep", "FID versus output-parameter fraction over ranks");
  sw_cfg.add(sw);
  sw->add_option("--model", sw_model, "gan, f2f or t2f");
  sw->add_option("--ranks", sw_ranks, "comma-separated ranks, e.g. 1,4,9");
  sw->add_option("--out", sw_out, "output directory")->required();
  sw->add_option("--data", sw_data, "dataset directory (default: synthesize from config)");
  sw->add_flag("--no-svg", sw_no_svg, "skip the SVG chart");

  // print-config
  ConfigFlags pc_cfg;
  auto* pc = app.add_subcommand("print-config", "print the resolved configuration");
  pc_cfg.add(pc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "gtgen: error: " << e.what() << "\n";
    return GTGEN_ERR_USAGE;
  }

  try {
    if (gd->parsed()) {
      json patch = json::object();
      if (gd_n) patch["data"]["n_samples"] = *gd_n;
      const std::string cfg = gd_cfg.resolve(patch).dump();
      std::size_t count = 0;
      char digest[17] = {0};
      check(gtgen_gen_data(cfg.c_str(), gd_out.c_str(), &count, digest));
      std::printf("samples %zu\ndigest %s\n", count, digest);
    } else if (dc->parsed()) {
      json patch = json::object();
      if (!dc_rank.empty()) {
        const json r = parse_rank(dc_rank);
        if (r.is_string()) throw Failure{GTGEN_ERR_USAGE, "decompose needs a numeric rank"};
        patch["als"]["rank"] = r;
      }
      const std::string cfg = dc_cfg.resolve(patch).dump();
      double err = 0.0;
      check(gtgen_decompose(cfg.c_str(), dc_data.c_str(), dc_out.c_str(), &err));
      std::printf("factors %s\nmean_relative_error %.6g\n",
                  dc_out.empty() ? (dc_data + "/factors").c_str() : dc_out.c_str(), err);
    } else if (sp->parsed()) {
      const std::uint64_t* seed = sp_seed ? &*sp_seed : nullptr;
      check(gtgen_sample(sp_ckpt.c_str(), sp_n, seed, sp_out.c_str(), sp_snap ? 1 : 0));
      std::printf("samples %zu\nout %s\n", sp_n, sp_out.c_str());
    } else if (fd->parsed()) {
      double value = 0.0;
      check(gtgen_fid(fd_real.c_str(), fd_gen.c_str(), fd_seed,
                      fd_out.empty() ? nullptr : fd_out.c_str(), &value));
      std::printf("fid %.9g\n", value);
    } else if (sw->parsed()) {
      json patch = json::object();
      if (!sw_model.empty()) patch["sweep"]["model"] = sw_model;
      if (sw_no_svg) patch["sweep"]["svg"] = false;
      if (!sw_ranks.empty()) {
        json ranks = json::array();
        std::stringstream ss(sw_ranks);
        for (std::string tok; std::getline(ss, tok, ',');) {
          const json r = parse_rank(tok);
          if (r.is_string()) continue;  // the Full baseline is always included
          ranks.push_back(r);
        }
        patch["sweep"]["ranks"] = ranks;
      }
      const std::string cfg = sw_cfg.resolve(patch).dump();
      char* csv = nullptr;
      check(gtgen_sweep(cfg.c_str(), sw_data.empty() ? nullptr : sw_data.c_str(),
                        sw_out.c_str(), &csv));
      std::fputs(csv, stdout);
      gtgen_string_free(csv);
    } else if (pc->parsed()) {
      char* text = nullptr;
      check(gtgen_resolve_config(pc_cfg.resolve(json::object()).dump().c_str(), &text));
      std::fputs(text, stdout);
      gtgen_string_free(text);
    } else {
      for (int q = 0; q < 4; ++q) {
        if (!train_cmds[q]->parsed()) continue;
        const gtgen_model model = train_kinds[q].model;
        const char* section = model == GTGEN_MODEL_GAN ? "gan" : "diffusion";
        json patch = json::object();
        if (tf[q].epochs) patch[section]["epochs"] = *tf[q].epochs;
        if (!tf[q].rank.empty()) patch[section]["rank"] = parse_rank(tf[q].rank);
        const std::string cfg = tf[q].cfg.resolve(patch).dump();
        check(gtgen_train(model, cfg.c_str(), tf[q].data.c_str(),
                          tf[q].factors.empty() ? nullptr : tf[q].factors.c_str(),
                          tf[q].out.c_str()));
        std::printf("trained %s\nout %s\n", train_kinds[q].name + 6, tf[q].out.c_str());
      }
    }
  } catch (const Failure& f) {
    std::string line = f.message;
    for (char& c : line)
      if (c == '\n' || c == '\r') c = ' ';
    std::cerr << "gtgen: error: " << line << "\n";
    return f.code;
  }
  return 0;
}
