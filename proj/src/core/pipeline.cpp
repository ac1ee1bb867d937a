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

#include "gtgen/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "binary_io.hpp"
#include "gtgen/checkpoint.hpp"
#include "gtgen/error.hpp"
#include "gtgen/parallel.hpp"
#include "gtgen/tensor_io.hpp"

namespace gtgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config schema

json rank_json(const RankSpec& r) {
  return r.is_full() ? json("full") : json(r.value());
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

json defaults_json() {
  const RunConfig d;
  return json{
      {"seed", d.seed},
      {"data",
       {{"dims", {d.data.dims.i, d.data.dims.j, d.data.dims.k}},
        {"n_samples", d.data.n_samples},
        {"depth_peak_range", range_json(d.data.depth_peak)},
        {"lateral_sigma_range", range_json(d.data.lateral_sigma)},
        {"amplitude_range", range_json(d.data.amplitude)},
        {"noise_floor", d.data.noise_floor}}},
      {"gan",
       {{"rank", rank_json(d.gan.rank)},
        {"latent_dim", d.gan.latent_dim},
        {"batch_size", d.gan.batch_size},
        {"lr_g", d.gan.lr_g},
        {"lr_d", d.gan.lr_d},
        {"beta1", d.gan.beta1},
        {"beta2", d.gan.beta2},
        {"epochs", d.gan.epochs}}},
      {"diffusion",
       {{"rank", rank_json(d.diffusion.rank)},
        {"T", d.diffusion.T},
        {"ddim_steps", d.diffusion.ddim_steps},
        {"beta_start", d.diffusion.beta_start},
        {"beta_end", d.diffusion.beta_end},
        {"lr", d.diffusion.lr},
        {"epochs", d.diffusion.epochs},
        {"batch_size", d.diffusion.batch_size}}},
      {"als", {{"rank", d.als.rank}, {"max_iters", d.als.max_iters}, {"tol", d.als.tol}}},
      {"eval",
       {{"extractor_seed", d.extractor_seed},
        {"eval_fraction", d.eval_fraction},
        {"n_gen", d.n_gen}}},
      {"sweep",
       {{"model", to_string(d.sweep_model)},
        {"ranks", d.sweep_ranks},
        {"svg", d.sweep_svg}}},
  };
}

// Rejects keys absent from the schema and values whose JSON kind differs
// from the default's. Ranks may be a number or "full".
void check_against_schema(const json& user, const json& schema, const std::string& where) {
  if (!user.is_object()) fail_usage("config" + where + " must be a JSON object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = where + "." + key;
    if (!schema.contains(key)) fail_usage("unknown config key '" + path.substr(1) + "'");
    const json& def = schema.at(key);
    if (def.is_object()) {
      check_against_schema(value, def, path);
      continue;
    }
    const bool rank_key = key == "rank" && where != ".als";
    const bool ok = (def.is_number() && value.is_number()) ||
                    (def.is_string() && value.is_string()) ||
                    (def.is_boolean() && value.is_boolean()) ||
                    (def.is_array() && value.is_array()) ||
                    (rank_key && (value.is_number() || value.is_string()));
    if (!ok) fail_usage("config key '" + path.substr(1) + "' has the wrong type");
  }
}

std::uint64_t get_u64(const json& j, const char* name) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() &&
                                 j.get<std::int64_t>() < 0)) {
    fail_usage(std::string("config value '") + name + "' must be a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

std::size_t get_size(const json& j, const char* name) {
  return static_cast<std::size_t>(get_u64(j, name));
}

double get_real(const json& j, const char* name) {
  if (!j.is_number()) fail_usage(std::string("config value '") + name + "' must be a number");
  return j.get<double>();
}

Range get_range(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 2) {
    fail_usage(std::string("config value '") + name + "' must be [lo, hi]");
  }
  return {get_real(j[0], name), get_real(j[1], name)};
}

RankSpec get_rank(const json& j, const char* name) {
  if (j.is_string()) return RankSpec::parse(j.get<std::string>());
  return RankSpec::of(get_size(j, name));
}

Dims3 get_dims(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 3) {
    fail_usage(std::string("config value '") + name + "' must be [I, J, K]");
  }
  return {get_size(j[0], name), get_size(j[1], name), get_size(j[2], name)};
}

RunConfig from_json(const json& m) {
  RunConfig c;
  c.seed = get_u64(m.at("seed"), "seed");

  const json& d = m.at("data");
  c.data.dims = get_dims(d.at("dims"), "data.dims");
  c.data.n_samples = get_size(d.at("n_samples"), "data.n_samples");
  c.data.depth_peak = get_range(d.at("depth_peak_range"), "data.depth_peak_range");
  c.data.lateral_sigma = get_range(d.at("lateral_sigma_range"), "data.lateral_sigma_range");
  c.data.amplitude = get_range(d.at("amplitude_range"), "data.amplitude_range");
  c.data.noise_floor = get_real(d.at("noise_floor"), "data.noise_floor");
  c.data.seed = c.seed;
  c.data.validate();

  const json& g = m.at("gan");
  c.gan.dims = c.data.dims;
  c.gan.rank = get_rank(g.at("rank"), "gan.rank");
  c.gan.latent_dim = get_size(g.at("latent_dim"), "gan.latent_dim");
  c.gan.batch_size = get_size(g.at("batch_size"), "gan.batch_size");
  c.gan.lr_g = get_real(g.at("lr_g"), "gan.lr_g");
  c.gan.lr_d = get_real(g.at("lr_d"), "gan.lr_d");
  c.gan.beta1 = get_real(g.at("beta1"), "gan.beta1");
  c.gan.beta2 = get_real(g.at("beta2"), "gan.beta2");
  c.gan.epochs = get_size(g.at("epochs"), "gan.epochs");
  c.gan.seed = c.seed;
  c.gan.validate();

  const json& f = m.at("diffusion");
  c.diffusion.dims = c.data.dims;
  c.diffusion.rank = get_rank(f.at("rank"), "diffusion.rank");
  c.diffusion.T = get_size(f.at("T"), "diffusion.T");
  c.diffusion.ddim_steps = get_size(f.at("ddim_steps"), "diffusion.ddim_steps");
  c.diffusion.beta_start = get_real(f.at("beta_start"), "diffusion.beta_start");
  c.diffusion.beta_end = get_real(f.at("beta_end"), "diffusion.beta_end");
  c.diffusion.lr = get_real(f.at("lr"), "diffusion.lr");
  c.diffusion.epochs = get_size(f.at("epochs"), "diffusion.epochs");
  c.diffusion.batch_size = get_size(f.at("batch_size"), "diffusion.batch_size");
  c.diffusion.seed = c.seed;
  c.diffusion.variant = c.diffusion.rank.is_full() ? DiffusionVariant::full_tensor
                                                   : DiffusionVariant::tensor_to_factor;
  c.diffusion.validate();
  (void)make_schedule(c.diffusion.T, c.diffusion.beta_start, c.diffusion.beta_end);

  const json& a = m.at("als");
  c.als.rank = get_size(a.at("rank"), "als.rank");
  c.als.max_iters = get_size(a.at("max_iters"), "als.max_iters");
  c.als.tol = get_real(a.at("tol"), "als.tol");
  c.als.seed = derive_seed(c.seed, stream::als);
  if (c.als.rank < 1) fail_usage("als.rank must be >= 1");
  if (c.als.max_iters < 1) fail_usage("als.max_iters must be >= 1");

  const json& e = m.at("eval");
  c.extractor_seed = get_u64(e.at("extractor_seed"), "eval.extractor_seed");
  c.eval_fraction = get_real(e.at("eval_fraction"), "eval.eval_fraction");
  c.n_gen = get_size(e.at("n_gen"), "eval.n_gen");
  if (!(c.eval_fraction > 0.0 && c.eval_fraction < 1.0)) {
    fail_usage("eval.eval_fraction must be in (0, 1)");
  }

  const json& s = m.at("sweep");
  c.sweep_model = parse_model_kind(s.at("model").get<std::string>());
  c.sweep_ranks.clear();
  for (const auto& r : s.at("ranks")) {
    c.sweep_ranks.push_back(get_size(r, "sweep.ranks"));
    if (c.sweep_ranks.back() < 1) fail_usage("sweep.ranks entries must be >= 1");
  }
  if (c.sweep_ranks.empty()) fail_usage("sweep.ranks must be nonempty");
  c.sweep_svg = s.at("svg").get<bool>();
  return c;
}

json to_json(const RunConfig& c) {
  json j = defaults_json();
  j["seed"] = c.seed;
  j["data"] = {{"dims", {c.data.dims.i, c.data.dims.j, c.data.dims.k}},
               {"n_samples", c.data.n_samples},
               {"depth_peak_range", range_json(c.data.depth_peak)},
               {"lateral_sigma_range", range_json(c.data.lateral_sigma)},
               {"amplitude_range", range_json(c.data.amplitude)},
               {"noise_floor", c.data.noise_floor}};
  j["gan"] = {{"rank", rank_json(c.gan.rank)},     {"latent_dim", c.gan.latent_dim},
              {"batch_size", c.gan.batch_size},    {"lr_g", c.gan.lr_g},
              {"lr_d", c.gan.lr_d},                {"beta1", c.gan.beta1},
              {"beta2", c.gan.beta2},              {"epochs", c.gan.epochs}};
  j["diffusion"] = {{"rank", rank_json(c.diffusion.rank)},
                    {"T", c.diffusion.T},
                    {"ddim_steps", c.diffusion.ddim_steps},
                    {"beta_start", c.diffusion.beta_start},
                    {"beta_end", c.diffusion.beta_end},
                    {"lr", c.diffusion.lr},
                    {"epochs", c.diffusion.epochs},
                    {"batch_size", c.diffusion.batch_size}};
  j["als"] = {{"rank", c.als.rank}, {"max_iters", c.als.max_iters}, {"tol", c.als.tol}};
  j["eval"] = {{"extractor_seed", c.extractor_seed},
               {"eval_fraction", c.eval_fraction},
               {"n_gen", c.n_gen}};
  j["sweep"] = {{"model", to_string(c.sweep_model)},
                {"ranks", c.sweep_ranks},
                {"svg", c.sweep_svg}};
  return j;
}

// ---------------------------------------------------------------------------
// Small file helpers

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail_data("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_json(const fs::path& path, const json& j) {
  detail::write_text(path, j.dump(2) + "\n");
}

json read_json(const fs::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    fail_data(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string tensor_name(std::size_t n, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu%s", n, ext);
  return buf;
}

void require_dir(const fs::path& dir, const char* what) {
  if (!fs::is_directory(dir)) fail_data(std::string(what) + " directory not found: " + dir.string());
}

}  // namespace

// ---------------------------------------------------------------------------

SweepConfig RunConfig::sweep_config() const {
  SweepConfig s;
  s.gan = gan;
  s.diffusion = diffusion;
  s.als = als;
  s.eval_fraction = eval_fraction;
  s.n_gen = n_gen;
  s.extractor_seed = extractor_seed;
  s.seed = seed;
  return s;
}

std::string default_config_text() { return defaults_json().dump(2) + "\n"; }

RunConfig resolve_config_text(const std::string& text) {
  json user = json::object();
  if (!text.empty()) {
    try {
      user = json::parse(text);
    } catch (const json::exception& e) {
      fail_usage(std::string("config is not valid JSON: ") + e.what());
    }
  }
  const json schema = defaults_json();
  check_against_schema(user, schema, "");
  json merged = schema;
  merged.merge_patch(user);
  try {
    return from_json(merged);
  } catch (const json::exception& e) {
    fail_usage(std::string("invalid config: ") + e.what());
  }
}

std::string config_to_text(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

const char* to_string(TrainKind k) {
  switch (k) {
    case TrainKind::gan: return "gan";
    case TrainKind::f2f: return "f2f";
    case TrainKind::t2f: return "t2f";
    case TrainKind::full: return "full";
  }
  return "?";
}

TrainKind parse_train_kind(const std::string& s) {
  if (s == "gan") return TrainKind::gan;
  if (s == "f2f") return TrainKind::f2f;
  if (s == "t2f") return TrainKind::t2f;
  if (s == "full") return TrainKind::full;
  fail_usage("unknown model '" + s + "' (expected gan, f2f, t2f or full)");
}

// ---------------------------------------------------------------------------

GenDataSummary gen_data(const RunConfig& cfg, const fs::path& out_dir) {
  std::vector<DenseTensor3> raw(cfg.data.n_samples);
  parallel_for(raw.size(), [&](std::size_t n) { raw[n] = synth_shower(cfg.data, n); });
  auto [data, scale] = normalize_dataset(raw);
  ensure_dir(out_dir);
  write_dataset(out_dir, data);
  GenDataSummary s{data.size(), dataset_digest(data), scale};
  json meta = to_json(cfg)["data"];
  meta["seed"] = cfg.seed;
  meta["scale"] = scale;
  meta["count"] = s.count;
  meta["digest"] = s.digest;
  write_json(out_dir / "meta.json", meta);
  return s;
}

double decompose(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out_dir) {
  require_dir(data_dir, "data");
  const auto files = list_files(data_dir, ".gt3");
  if (files.empty()) fail_data("no .gt3 tensors in " + data_dir.string());
  std::vector<DenseTensor3> xs(files.size());
  for (std::size_t n = 0; n < files.size(); ++n) xs[n] = read_tensor(files[n]);

  std::vector<CpAlsResult> results(xs.size());
  parallel_for(xs.size(), [&](std::size_t n) {
    CpAlsOptions o = cfg.als;
    o.seed = derive_seed(cfg.als.seed, n);
    results[n] = cp_als(xs[n], o);
  });

  ensure_dir(out_dir);
  std::string csv = "file,rank,sweeps,relative_error\n";
  double mean = 0.0;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    const std::string stem = files[n].stem().string();
    write_factors(out_dir / (stem + ".gtf"), results[n].factors);
    csv += stem + ".gt3," + std::to_string(cfg.als.rank) + "," +
           std::to_string(results[n].fit_history.size()) + "," + fmt(results[n].final_error()) +
           "\n";
    mean += results[n].final_error() / static_cast<double>(xs.size());
  }
  detail::write_text(out_dir / "errors.csv", csv);
  json run{{"command", "decompose"}, {"rank", cfg.als.rank}, {"count", xs.size()},
           {"config", to_json(cfg)}};
  write_json(out_dir / "run.json", run);
  return mean;
}

// ---------------------------------------------------------------------------
// Training

namespace {

std::string diffusion_metrics(const std::vector<double>& losses, std::size_t n_items,
                              std::size_t batch) {
  const std::size_t per_epoch = (n_items + batch - 1) / batch;
  std::string csv = "step,epoch,loss\n";
  for (std::size_t q = 0; q < losses.size(); ++q) {
    csv += std::to_string(q + 1) + "," + std::to_string(q / per_epoch + 1) + "," +
           fmt(losses[q]) + "\n";
  }
  return csv;
}

}  // namespace

void train(TrainKind kind, const RunConfig& cfg_in, const fs::path& data_dir,
           const fs::path& factors_dir, const fs::path& out_dir) {
  require_dir(data_dir, "data");
  const auto data = read_dataset(data_dir);
  const Dims3 dims = data.front().dims();
  RunConfig cfg = cfg_in;
  cfg.gan.dims = dims;
  cfg.diffusion.dims = dims;

  json run{{"command", std::string("train-") + (kind == TrainKind::gan ? "gan" : "diff-") +
                           (kind == TrainKind::gan ? "" : to_string(kind))},
           {"model", to_string(kind)},
           {"dims", {dims.i, dims.j, dims.k}},
           {"count", data.size()},
           {"dataset_digest", dataset_digest(data)}};

  if (kind == TrainKind::gan) {
    ensure_dir(out_dir);
    auto res = train_gan(data, cfg.gan);
    write_checkpoint(out_dir / "generator.gtck", res.model.generator_params());
    write_checkpoint(out_dir / "discriminator.gtck", res.model.discriminator_params());
    write_adam_state(out_dir / "generator.gtad", res.g_opt,
                     res.model.generator_params().step_count);
    write_adam_state(out_dir / "discriminator.gtad", res.d_opt,
                     res.model.discriminator_params().step_count);
    std::string csv = "epoch,d_loss,g_loss,d_out_real_mean,d_out_fake_mean\n";
    for (std::size_t e = 0; e < res.metrics.size(); ++e) {
      const auto& m = res.metrics[e];
      csv += std::to_string(e + 1) + "," + fmt(m.d_loss) + "," + fmt(m.g_loss) + "," +
             fmt(m.d_out_real_mean) + "," + fmt(m.d_out_fake_mean) + "\n";
    }
    detail::write_text(out_dir / "metrics.csv", csv);
  } else if (kind == TrainKind::f2f) {
    if (!fs::is_directory(factors_dir) || list_files(factors_dir, ".gtf").empty()) {
      fail_data("missing factors: no .gtf files in " + factors_dir.string() +
                " (run decompose first)");
    }
    const auto files = list_files(factors_dir, ".gtf");
    if (files.size() != data.size()) {
      fail_data("missing factors: " + factors_dir.string() + " holds " +
                std::to_string(files.size()) + " factor files for " +
                std::to_string(data.size()) + " tensors");
    }
    std::vector<CPFactors> factors;
    factors.reserve(files.size());
    for (const auto& f : files) factors.push_back(read_factors(f));
    if (cfg.diffusion.rank.is_full() || factors.front().rank() != cfg.diffusion.rank.value()) {
      fail_usage("diffusion.rank (" + cfg.diffusion.rank.to_string() +
                 ") does not match the factor rank (" +
                 std::to_string(factors.front().rank()) + ")");
    }
    cfg.diffusion.variant = DiffusionVariant::factor_to_factor;
    ensure_dir(out_dir);
    auto res = train_f2f(factors, cfg.diffusion);
    nn::ParamStore merged;
    for (const auto& store : res.model.params()) {
      for (const auto& seg : store.segments()) {
        merged[merged.add(seg.name, seg.shape)].values = seg.values;
      }
    }
    write_checkpoint(out_dir / "model.gtck", merged);
    const char* slots[3] = {"A", "B", "C"};
    for (std::size_t m = 0; m < 3; ++m) {
      write_adam_state(out_dir / (std::string("model_") + slots[m] + ".gtad"), res.opts[m],
                       res.model.params()[m].step_count);
    }
    const auto& st = res.model.standardizer();
    run["standardizer"] = {{"mean", st.mean}, {"stdev", st.stdev}};
    detail::write_text(out_dir / "metrics.csv",
                       diffusion_metrics(res.losses, factors.size(), cfg.diffusion.batch_size));
  } else {
    if (kind == TrainKind::full) {
      cfg.diffusion.rank = RankSpec::full();
      cfg.diffusion.variant = DiffusionVariant::full_tensor;
    } else {
      if (cfg.diffusion.rank.is_full()) {
        fail_usage("train-diff-t2f needs a numeric diffusion.rank (use train-diff-full)");
      }
      cfg.diffusion.variant = DiffusionVariant::tensor_to_factor;
    }
    ensure_dir(out_dir);
    auto res = train_tensor_denoiser(data, cfg.diffusion);
    write_checkpoint(out_dir / "model.gtck", res.model.params());
    write_adam_state(out_dir / "model.gtad", res.opt, res.model.params().step_count);
    detail::write_text(out_dir / "metrics.csv",
                       diffusion_metrics(res.losses, data.size(), cfg.diffusion.batch_size));
  }
  run["config"] = to_json(cfg);
  write_json(out_dir / "run.json", run);
}

// ---------------------------------------------------------------------------
// Sampling

std::string slices_pgm(const DenseTensor3& x) {
  const Dims3 d = x.dims();
  const std::size_t width = d.i * d.k + (d.i - 1);
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(d.j) + "\n255\n";
  std::string pixels(width * d.j, static_cast<char>(128));
  for (std::size_t i = 0; i < d.i; ++i) {
    for (std::size_t j = 0; j < d.j; ++j) {
      for (std::size_t k = 0; k < d.k; ++k) {
        const double v = std::clamp(x(i, j, k), 0.0, 1.0);
        pixels[j * width + i * (d.k + 1) + k] =
            static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
    }
  }
  return out + pixels;
}

void sample(const fs::path& checkpoint_dir, std::size_t n, std::optional<std::uint64_t> seed,
            const fs::path& out_dir, bool snapshots) {
  if (n < 1) fail_usage("sample: n must be >= 1");
  require_dir(checkpoint_dir, "checkpoint");
  const json run = read_json(checkpoint_dir / "run.json");
  if (!run.contains("model") || !run.contains("config") || !run.contains("dims")) {
    fail_data(checkpoint_dir.string() + "/run.json is not a training record");
  }
  const TrainKind kind = parse_train_kind(run.at("model").get<std::string>());
  RunConfig cfg = resolve_config_text(run.at("config").dump());
  const Dims3 dims{run["dims"][0].get<std::size_t>(), run["dims"][1].get<std::size_t>(),
                   run["dims"][2].get<std::size_t>()};
  cfg.gan.dims = dims;
  cfg.diffusion.dims = dims;
  const std::uint64_t s = seed.value_or(derive_seed(cfg.seed, stream::sample));

  std::vector<DenseTensor3> out(n);
  std::vector<std::string> snaps;
  auto keep_snapshot = [&](std::size_t, std::size_t, const DenseTensor3& x0, const CPFactors*) {
    snaps.push_back(slices_pgm(x0));
  };

  if (kind == TrainKind::gan) {
    if (snapshots) fail_usage("--snapshots needs a diffusion checkpoint (this one is a GAN)");
    FactorGan gan(cfg.gan);
    assign_params(gan.generator_params(), read_checkpoint(checkpoint_dir / "generator.gtck"));
    out = gan.sample(n, s);
  } else if (kind == TrainKind::f2f) {
    cfg.diffusion.variant = DiffusionVariant::factor_to_factor;
    F2FModel model(cfg.diffusion);
    const nn::ParamStore stored = read_checkpoint(checkpoint_dir / "model.gtck");
    for (auto& store : model.params()) assign_params(store, stored);
    if (!run.contains("standardizer")) fail_data("f2f run.json lacks the standardizer");
    const auto& st = run.at("standardizer");
    for (std::size_t m = 0; m < 3; ++m) {
      model.standardizer().mean[m] = st.at("mean").at(m).get<double>();
      model.standardizer().stdev[m] = st.at("stdev").at(m).get<double>();
    }
    const NoiseSchedule sched = cfg.diffusion.schedule();
    parallel_for(n, [&](std::size_t q) {
      Rng rng(derive_seed(s, q));
      out[q] = f2f_sample(model, sched, cfg.diffusion.ddim_steps, rng,
                          snapshots && q == 0 ? SnapshotFn(keep_snapshot) : SnapshotFn());
    });
  } else {
    if (kind == TrainKind::full) {
      cfg.diffusion.rank = RankSpec::full();
      cfg.diffusion.variant = DiffusionVariant::full_tensor;
    } else {
      cfg.diffusion.variant = DiffusionVariant::tensor_to_factor;
    }
    TensorDenoiserModel model(cfg.diffusion);
    assign_params(model.params(), read_checkpoint(checkpoint_dir / "model.gtck"));
    const NoiseSchedule sched = cfg.diffusion.schedule();
    parallel_for(n, [&](std::size_t q) {
      Rng rng(derive_seed(s, q));
      out[q] = t2f_sample(model, sched, cfg.diffusion.ddim_steps, rng,
                          snapshots && q == 0 ? SnapshotFn(keep_snapshot) : SnapshotFn());
    });
  }

  ensure_dir(out_dir);
  std::string csv = "index,file,frobenius_norm,min,max\n";
  for (std::size_t q = 0; q < n; ++q) {
    const std::string name = tensor_name(q, ".gt3");
    write_tensor(out_dir / name, out[q]);
    const auto v = out[q].values();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    csv += std::to_string(q) + "," + name + "," + fmt(frobenius_norm(out[q])) + "," + fmt(*lo) +
           "," + fmt(*hi) + "\n";
  }
  detail::write_text(out_dir / "samples.csv", csv);
  if (snapshots) {
    ensure_dir(out_dir / "snapshots");
    for (std::size_t q = 0; q < snaps.size(); ++q) {
      char name[32];
      std::snprintf(name, sizeof name, "step_%03zu.pgm", q);
      detail::write_text(out_dir / "snapshots" / name, snaps[q]);
    }
  }
  json rec{{"command", "sample"},     {"model", to_string(kind)}, {"n", n},
           {"seed", s},               {"snapshots", snaps.size()},
           {"config", to_json(cfg)}};
  write_json(out_dir / "run.json", rec);
}

// ---------------------------------------------------------------------------

double fid_dirs(const fs::path& real_dir, const fs::path& gen_dir, std::uint64_t extractor_seed,
                const fs::path& csv_path) {
  require_dir(real_dir, "real");
  require_dir(gen_dir, "generated");
  const auto real = read_dataset(real_dir);
  const auto gen = read_dataset(gen_dir);
  if (!(real.front().dims() == gen.front().dims())) {
    fail_usage("fid: real dims " + to_string(real.front().dims()) + " differ from generated " +
               to_string(gen.front().dims()));
  }
  const double value = fid(real, gen, extractor_seed);
  if (!csv_path.empty()) {
    if (csv_path.has_parent_path()) ensure_dir(csv_path.parent_path());
    detail::write_text(csv_path, "n_real,n_gen,extractor_seed,fid\n" +
                                     std::to_string(real.size()) + "," +
                                     std::to_string(gen.size()) + "," +
                                     std::to_string(extractor_seed) + "," + fmt(value) + "\n");
  }
  return value;
}

std::vector<SweepRow> sweep(const RunConfig& cfg, const fs::path& data_dir,
                            const fs::path& out_dir) {
  std::vector<DenseTensor3> data;
  if (data_dir.empty()) {
    std::vector<DenseTensor3> raw(cfg.data.n_samples);
    parallel_for(raw.size(), [&](std::size_t n) { raw[n] = synth_shower(cfg.data, n); });
    data = normalize_dataset(raw).first;
  } else {
    require_dir(data_dir, "data");
    data = read_dataset(data_dir);
  }
  const auto rows = run_sweep(data, cfg.sweep_model, cfg.sweep_ranks, cfg.sweep_config());
  ensure_dir(out_dir);
  detail::write_text(out_dir / "sweep.csv", sweep_csv(rows));
  if (cfg.sweep_svg) detail::write_text(out_dir / "sweep.svg", sweep_svg(rows));
  json run{{"command", "sweep"},
           {"count", data.size()},
           {"dataset_digest", dataset_digest(data)},
           {"config", to_json(cfg)}};
  write_json(out_dir / "run.json", run);
  return rows;
}

}  // namespace gtgen
