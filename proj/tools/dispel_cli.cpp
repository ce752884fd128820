/*
 * Copyright 2026 The Dispel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line driver binding the library modules into reproducible
// experiments. Every command writes CSV outputs plus one flat JSON
// manifest (<out>.manifest.json) recording the resolved parameters,
// duration, and output digests. Exit codes: 0 success, 2 usage,
// 3 validation, 4 numerical failure.

#include <charconv>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "dispel/dataset.hpp"
#include "dispel/errors.hpp"
#include "dispel/groupeval.hpp"
#include "dispel/io.hpp"
#include "dispel/linmodel.hpp"
#include "dispel/mixer.hpp"
#include "dispel/pipeline.hpp"
#include "dispel/rng.hpp"
#include "dispel/synthdata.hpp"
#include "dispel/theory.hpp"

namespace {

using dispel::Dataset;
using dispel::DistSpec;
using dispel::FileFormat;
using dispel::ManifestEntry;
using dispel::MixConfig;
using dispel::ModelWeights;
using dispel::RetrainConfig;
using dispel::TheoryParams;
using dispel::ValidationError;

// Problems with the command line itself (as opposed to the data it names).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised after partial outputs have been flushed on SIGINT.
struct Interrupted {};

volatile std::sig_atomic_t g_interrupted = 0;

void handle_interrupt(int) { g_interrupted = 1; }

// Sub-stream tags for the commands' independent random inputs.
constexpr std::uint64_t kTagFt = 0x46;
constexpr std::uint64_t kTagBal = 0x42;
constexpr std::uint64_t kTagMix = 0x4d;
constexpr std::uint64_t kTagPBlock = 0x70;

std::string num(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

std::string num(std::int64_t value) { return std::to_string(value); }

struct GlobalOpts {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string format = "csv";

  FileFormat file_format() const { return dispel::parse_format(format); }

  std::string path(const std::string& name) const {
    const std::filesystem::path p(name);
    if (p.is_absolute() || out_dir.empty() || out_dir == ".") return name;
    return (std::filesystem::path(out_dir) / p).string();
  }

  void prepare() const {
    if (!out_dir.empty() && out_dir != ".") {
      std::filesystem::create_directories(out_dir);
    }
  }
};

struct Timer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::out | std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ValidationError("short write to '" + path + "'");
}

std::string csv_table(const std::string& header,
                      const std::vector<std::string>& rows) {
  std::string text = header + "\n";
  for (const auto& row : rows) {
    text += row;
    text += '\n';
  }
  return text;
}

// "start:stop:step" with step > 0; the endpoint is included up to a 1e-9
// relative slack, and every value is snapped to 1e-12 so 0.1 grids print
// cleanly.
std::vector<double> parse_grid(const std::string& text) {
  const auto fail = [&]() -> std::vector<double> {
    throw UsageError("grid '" + text + "' is not start:stop:step");
  };
  const std::size_t first = text.find(':');
  const std::size_t second =
      first == std::string::npos ? std::string::npos
                                 : text.find(':', first + 1);
  if (second == std::string::npos) return fail();
  const auto parse = [&](std::size_t begin, std::size_t end) {
    double value = 0.0;
    const char* b = text.data() + begin;
    const char* e = text.data() + end;
    const auto result = std::from_chars(b, e, value);
    if (result.ec != std::errc() || result.ptr != e) fail();
    return value;
  };
  const double start = parse(0, first);
  const double stop = parse(first + 1, second);
  const double step = parse(second + 1, text.size());
  if (!(step > 0.0)) throw UsageError("grid step must be positive");
  if (stop < start) throw UsageError("grid stop is below its start");
  const auto count =
      static_cast<std::int64_t>((stop - start) / step + 1e-9) + 1;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    const double v = start + static_cast<double>(k) * step;
    values.push_back(std::round(v * 1e12) / 1e12);
  }
  return values;
}

std::vector<dispel::GroupId> parse_restrict(
    const std::vector<std::string>& names) {
  std::vector<dispel::GroupId> groups;
  groups.reserve(names.size());
  for (const auto& name : names) {
    try {
      groups.push_back(dispel::parse_group(name));
    } catch (const ValidationError& err) {
      throw UsageError(std::string("--restrict: ") + err.what());
    }
  }
  return groups;
}

// "label=weight" pairs for the per-class loss multipliers.
std::map<int, double> parse_class_weights(
    const std::vector<std::string>& entries) {
  std::map<int, double> weights;
  for (const auto& entry : entries) {
    const std::size_t eq = entry.find('=');
    const auto fail = [&]() {
      throw UsageError("--class-weight entries look like label=weight, got '" +
                       entry + "'");
    };
    if (eq == std::string::npos) fail();
    int label = 0;
    double weight = 0.0;
    auto r1 = std::from_chars(entry.data(), entry.data() + eq, label);
    auto r2 = std::from_chars(entry.data() + eq + 1,
                              entry.data() + entry.size(), weight);
    if (r1.ec != std::errc() || r1.ptr != entry.data() + eq ||
        r2.ec != std::errc() || r2.ptr != entry.data() + entry.size()) {
      fail();
    }
    weights[label] = weight;
  }
  return weights;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += num(values[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// gen

struct GenOpts {
  std::string kind = "iid";
  double mu = 0.9;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double sigma_xi = 0.0;
  std::int64_t d = 3;
  std::int64_t n = 1000;
  std::string mode = "present";
  int y = 1;
  int a = 1;
  std::string out;
};

void run_gen(const GlobalOpts& global, const GenOpts& opts) {
  Timer timer;
  global.prepare();
  DistSpec spec;
  spec.mu = opts.mu;
  spec.sigma1 = opts.sigma1;
  spec.sigma2 = opts.sigma2;
  spec.sigma_xi = opts.sigma_xi;
  spec.d = opts.d;
  spec.spurious_mode = opts.mode == "absent" ? dispel::SpuriousMode::absent
                                             : dispel::SpuriousMode::present;
  Dataset data;
  if (opts.kind == "iid") {
    data = dispel::sample_dataset(spec, opts.n, global.seed);
  } else if (opts.kind == "balanced") {
    data = dispel::sample_balanced(spec, opts.n, global.seed);
  } else {
    data = dispel::sample_single_group(spec, opts.y, opts.a, opts.n,
                                       global.seed);
  }
  const std::string out =
      global.path(opts.out.empty() ? "data." + global.format : opts.out);
  dispel::save_dataset(data, out, global.file_format());

  std::vector<ManifestEntry> params = {
      {"kind", opts.kind},         {"mu", num(opts.mu)},
      {"sigma1", num(opts.sigma1)}, {"sigma2", num(opts.sigma2)},
      {"sigma_xi", num(opts.sigma_xi)}, {"d", num(opts.d)},
      {"n", num(opts.n)},          {"mode", opts.mode},
      {"seed", std::to_string(global.seed)}, {"format", global.format}};
  if (opts.kind == "group") {
    params.push_back({"y", std::to_string(opts.y)});
    params.push_back({"a", std::to_string(opts.a)});
  }
  dispel::write_manifest(out + ".manifest.json", "gen", params, {out},
                         timer.seconds());
}

// ---------------------------------------------------------------------------
// mix

struct MixOpts {
  std::string ft;
  std::string bal;
  double alpha = 1.0;
  double s = 0.0;
  std::string out;
  std::string trace;
};

void run_mix(const GlobalOpts& global, const MixOpts& opts) {
  Timer timer;
  global.prepare();
  const FileFormat format = global.file_format();
  const Dataset d_ft = dispel::load_dataset(opts.ft, format);
  const Dataset d_bal = dispel::load_dataset(opts.bal, format);
  MixConfig cfg;
  cfg.alpha = opts.alpha;
  cfg.s = opts.s;
  cfg.seed = global.seed;
  const auto [mixed, trace] = dispel::mix(d_ft, d_bal, cfg);
  const std::string out =
      global.path(opts.out.empty() ? "mixed." + global.format : opts.out);
  dispel::save_dataset(mixed, out, format);
  std::vector<std::string> outputs = {out};
  if (!opts.trace.empty()) {
    std::vector<std::string> rows;
    rows.reserve(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
      rows.push_back(std::to_string(i) + "," +
                     (trace[i].mixed ? "1" : "0") + "," +
                     std::to_string(trace[i].partner) + "," +
                     (trace[i].cross_class ? "1" : "0"));
    }
    const std::string trace_path = global.path(opts.trace);
    write_text(trace_path, csv_table("row,mixed,partner,cross_class", rows));
    outputs.push_back(trace_path);
  }
  dispel::write_manifest(
      out + ".manifest.json", "mix",
      {{"ft", opts.ft},
       {"bal", opts.bal},
       {"alpha", num(opts.alpha)},
       {"s", num(opts.s)},
       {"seed", std::to_string(global.seed)},
       {"format", global.format}},
      outputs, timer.seconds());
}

// ---------------------------------------------------------------------------
// ridge

struct RidgeOpts {
  std::string data;
  double lambda = 0.0;
  std::string out = "weights.csv";
};

void run_ridge(const GlobalOpts& global, const RidgeOpts& opts) {
  Timer timer;
  global.prepare();
  const Dataset data = dispel::load_dataset(opts.data, global.file_format());
  const ModelWeights weights =
      dispel::ridge_fit(data, dispel::RidgeConfig{opts.lambda});
  const std::string out = global.path(opts.out);
  dispel::save_weights(weights, out);
  dispel::write_manifest(out + ".manifest.json", "ridge",
                         {{"data", opts.data},
                          {"lambda", num(opts.lambda)},
                          {"format", global.format}},
                         {out}, timer.seconds());
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string weights;
  std::string data;
  std::string metric = "acc";
  std::vector<std::string> restrict_names;
  std::string out = "report.csv";
};

void run_eval(const GlobalOpts& global, const EvalOpts& opts) {
  Timer timer;
  global.prepare();
  // Validate command-line syntax before touching any files.
  const auto restriction = opts.restrict_names.empty()
                               ? std::optional<std::vector<dispel::GroupId>>()
                               : parse_restrict(opts.restrict_names);
  const ModelWeights weights = dispel::load_weights(opts.weights);
  const Dataset data = dispel::load_dataset(opts.data, global.file_format());
  dispel::GroupUniverse universe = dispel::universe_of(data);
  universe.restriction = restriction;
  const dispel::GroupReport report =
      opts.metric == "acc" ? dispel::evaluate_accuracy(weights, data, universe)
                           : dispel::evaluate_mse(weights, data, universe);
  const std::string out = global.path(opts.out);
  dispel::save_report(report, out);
  std::vector<ManifestEntry> params = {{"weights", opts.weights},
                                       {"data", opts.data},
                                       {"metric", opts.metric},
                                       {"format", global.format}};
  if (!opts.restrict_names.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < opts.restrict_names.size(); ++i) {
      if (i > 0) joined += ',';
      joined += opts.restrict_names[i];
    }
    params.push_back({"restrict", joined});
  }
  dispel::write_manifest(out + ".manifest.json", "eval", params, {out},
                         timer.seconds());
}

// ---------------------------------------------------------------------------
// theory

struct TheoryOpts {
  std::vector<double> p = {0.9};
  std::string s_grid = "0:1:0.1";
  double sigma1 = 0.5;
  double r = 4.0;
  double lambda = 0.25;
  std::string variant = "derived";
  std::string out = "theory.csv";
};

dispel::Variant parse_variant(const std::string& name) {
  return name == "printed" ? dispel::Variant::as_printed
                           : dispel::Variant::derivation_consistent;
}

void run_theory(const GlobalOpts& global, const TheoryOpts& opts) {
  Timer timer;
  global.prepare();
  const std::vector<double> s_values = parse_grid(opts.s_grid);
  const dispel::Variant variant = parse_variant(opts.variant);
  std::vector<std::string> rows;
  for (const double p : opts.p) {
    for (const double s : s_values) {
      TheoryParams params;
      params.p = p;
      params.s = s;
      params.r = opts.r;
      params.sigma1 = opts.sigma1;
      params.lambda = opts.lambda;
      rows.push_back(num(p) + "," + num(s) + "," +
                     num(dispel::eval_wg_loss(params, variant)));
    }
  }
  const std::string out = global.path(opts.out);
  write_text(out, csv_table("p,s,loss", rows));
  dispel::write_manifest(out + ".manifest.json", "theory",
                         {{"p", join(opts.p)},
                          {"s_grid", opts.s_grid},
                          {"sigma1", num(opts.sigma1)},
                          {"r", num(opts.r)},
                          {"lambda", num(opts.lambda)},
                          {"variant", opts.variant}},
                         {out}, timer.seconds());
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  std::vector<double> p = {0.9};
  std::string s_grid = "0:1:0.1";
  double sigma1 = 0.5;
  double r = 4.0;
  double lambda = 0.25;
  std::int64_t n = 4096;
  std::int64_t d = 64;
  std::int64_t m = 16;
  int runs = 8;
  std::string out = "sim.csv";
};

// One p block at a time so an interrupt still flushes complete blocks.
std::vector<std::string> simulate_rows(const SimulateOpts& opts,
                                       const std::vector<double>& s_values,
                                       std::uint64_t seed, bool* partial) {
  std::vector<std::string> rows;
  for (std::size_t pi = 0; pi < opts.p.size(); ++pi) {
    if (g_interrupted) {
      *partial = true;
      break;
    }
    const auto block = dispel::simulate_wg_loss_grid(
        opts.p[pi], s_values, opts.sigma1, opts.lambda, opts.r, opts.n,
        opts.d, opts.m, opts.runs,
        dispel::rng::derive(seed, kTagPBlock, pi));
    for (std::size_t si = 0; si < s_values.size(); ++si) {
      rows.push_back(num(opts.p[pi]) + "," + num(s_values[si]) + "," +
                     num(block[si].mean) + "," + num(block[si].stderr) + "," +
                     std::to_string(opts.runs));
    }
  }
  return rows;
}

std::vector<ManifestEntry> simulate_params(const SimulateOpts& opts,
                                           std::uint64_t seed) {
  return {{"p", join(opts.p)},       {"s_grid", opts.s_grid},
          {"sigma1", num(opts.sigma1)}, {"r", num(opts.r)},
          {"lambda", num(opts.lambda)}, {"n", num(opts.n)},
          {"d", num(opts.d)},        {"m", num(opts.m)},
          {"runs", std::to_string(opts.runs)},
          {"seed", std::to_string(seed)}};
}

void run_simulate(const GlobalOpts& global, const SimulateOpts& opts) {
  Timer timer;
  global.prepare();
  const std::vector<double> s_values = parse_grid(opts.s_grid);
  bool partial = false;
  const auto rows = simulate_rows(opts, s_values, global.seed, &partial);
  const std::string out = global.path(opts.out);
  write_text(out, csv_table("p,s,mean,stderr,runs", rows));
  dispel::write_manifest(out + ".manifest.json", "simulate",
                         simulate_params(opts, global.seed), {out},
                         timer.seconds(), partial);
  if (partial) throw Interrupted{};
}

// ---------------------------------------------------------------------------
// figure1

struct Figure1Opts {
  std::string scale = "desk";
  SimulateOpts sim;  // n/d/m/runs of 0 defer to the scale preset
  std::string variant = "derived";
};

void run_figure1(const GlobalOpts& global, Figure1Opts opts) {
  Timer timer;
  global.prepare();
  auto& sim = opts.sim;
  if (sim.n == 0) sim.n = opts.scale == "paper" ? 120000 : 24000;
  if (sim.d == 0) sim.d = opts.scale == "paper" ? 8000 : 1600;
  if (sim.m == 0) sim.m = opts.scale == "paper" ? 128 : 64;
  if (sim.runs == 0) sim.runs = 20;
  const std::vector<double> s_values = parse_grid(sim.s_grid);
  const dispel::Variant variant = parse_variant(opts.variant);

  std::vector<std::string> theory_rows;
  std::map<std::pair<double, double>, double> theory_at;
  for (const double p : sim.p) {
    for (const double s : s_values) {
      TheoryParams params;
      params.p = p;
      params.s = s;
      params.r = sim.r;
      params.sigma1 = sim.sigma1;
      params.lambda = sim.lambda;
      const double loss = dispel::eval_wg_loss(params, variant);
      theory_at[{p, s}] = loss;
      theory_rows.push_back(num(p) + "," + num(s) + "," + num(loss));
    }
  }

  bool partial = false;
  const auto sim_rows = simulate_rows(sim, s_values, global.seed, &partial);

  std::vector<std::string> fig_rows;
  for (const auto& row : sim_rows) {
    // sim rows are p,s,mean,stderr,runs; splice the theory value in.
    const std::size_t c1 = row.find(',');
    const std::size_t c2 = row.find(',', c1 + 1);
    const std::size_t c3 = row.find(',', c2 + 1);
    const std::size_t c4 = row.find(',', c3 + 1);
    const double p = std::stod(row.substr(0, c1));
    const double s = std::stod(row.substr(c1 + 1, c2 - c1 - 1));
    fig_rows.push_back(row.substr(0, c2) + "," + num(theory_at.at({p, s})) +
                       "," + row.substr(c2 + 1, c4 - c2 - 1));
  }

  const std::string theory_path = global.path("theory.csv");
  const std::string sim_path = global.path("sim.csv");
  const std::string fig_path = global.path("fig1.csv");
  write_text(theory_path, csv_table("p,s,loss", theory_rows));
  write_text(sim_path, csv_table("p,s,mean,stderr,runs", sim_rows));
  write_text(fig_path, csv_table("p,s,theory,sim_mean,sim_stderr", fig_rows));

  auto params = simulate_params(sim, global.seed);
  params.push_back({"scale", opts.scale});
  params.push_back({"variant", opts.variant});
  dispel::write_manifest(fig_path + ".manifest.json", "figure1", params,
                         {theory_path, sim_path, fig_path}, timer.seconds(),
                         partial);
  if (partial) throw Interrupted{};
}

// ---------------------------------------------------------------------------
// figure2

struct Figure2Opts {
  double p = 0.9;
  std::string s_grid = "0:1:0.1";
  double sigma1 = 0.5;
  double r = 4.0;
  double lambda = 0.25;
  std::int64_t n = 24000;
  std::int64_t d = 1600;
  std::int64_t m = 64;
  int runs = 1;
  std::string out = "fig2.csv";
};

void run_figure2(const GlobalOpts& global, const Figure2Opts& opts) {
  Timer timer;
  global.prepare();
  const std::vector<double> s_values = parse_grid(opts.s_grid);
  DistSpec spec;
  spec.mu = opts.p;
  spec.sigma1 = opts.sigma1;
  spec.sigma2 = 0.0;
  spec.sigma_xi = std::sqrt(opts.r * static_cast<double>(opts.m));
  spec.d = opts.d;
  if (opts.runs < 1) throw ValidationError("figure2 needs at least one run");

  std::vector<std::string> rows;
  for (const double s : s_values) {
    Eigen::Vector2d core = Eigen::Vector2d::Zero();
    double noise = 0.0;
    double full = 0.0;
    for (int run = 0; run < opts.runs; ++run) {
      const auto k = static_cast<std::uint64_t>(run);
      const Dataset d_ft = dispel::sample_dataset(
          spec, opts.n, dispel::rng::derive(global.seed, k, kTagFt));
      const Dataset d_bal = dispel::sample_balanced(
          spec, opts.m, dispel::rng::derive(global.seed, k, kTagBal));
      MixConfig mc;
      mc.alpha = 1.0;
      mc.s = s;
      mc.seed = dispel::rng::derive(global.seed, k, kTagMix);
      const auto [mixed, trace] = dispel::mix(d_ft, d_bal, mc);
      const ModelWeights w =
          dispel::ridge_fit(mixed, dispel::RidgeConfig{opts.lambda});
      const auto parts = dispel::decompose(w);
      core += parts.core_spur_component;
      noise += parts.noise_component_norm;
      full += parts.full_norm;
    }
    const double scale = 1.0 / static_cast<double>(opts.runs);
    rows.push_back(num(s) + "," + num(core[0] * scale) + "," +
                   num(core[1] * scale) + "," + num(noise * scale) + "," +
                   num(full * scale));
  }
  const std::string out = global.path(opts.out);
  write_text(out, csv_table("s,core1,core2,noise_norm,full_norm", rows));
  dispel::write_manifest(out + ".manifest.json", "figure2",
                         {{"p", num(opts.p)},
                          {"s_grid", opts.s_grid},
                          {"sigma1", num(opts.sigma1)},
                          {"r", num(opts.r)},
                          {"lambda", num(opts.lambda)},
                          {"n", num(opts.n)},
                          {"d", num(opts.d)},
                          {"m", num(opts.m)},
                          {"runs", std::to_string(opts.runs)},
                          {"seed", std::to_string(global.seed)}},
                         {out}, timer.seconds());
}

// ---------------------------------------------------------------------------
// scenario2

struct Scenario2Opts {
  std::int64_t n = 9000000;
  std::int64_t m = 256;
  double alpha = 1.0;
  double s = 0.3;
  double sigma1 = 0.5;
  double sigma1_bal = 0.0;
  double sigma2_bal = 2.0;
  std::int64_t epochs = 4000;
  std::int64_t record_every = 10;
  double step_size = 0.0;
  std::vector<double> w0 = {1.0, 1.0};
  double b0 = 0.0;
  std::string out = "alignment.csv";
};

void run_scenario2(const GlobalOpts& global, const Scenario2Opts& opts) {
  Timer timer;
  global.prepare();
  if (opts.w0.size() != 2) {
    throw UsageError("--w0 takes exactly two values");
  }
  DistSpec ft_spec;
  ft_spec.mu = 0.5;
  ft_spec.sigma1 = opts.sigma1;
  ft_spec.sigma2 = 0.0;
  ft_spec.sigma_xi = 0.0;
  ft_spec.d = 2;
  ft_spec.spurious_mode = dispel::SpuriousMode::absent;
  DistSpec bal_spec;
  bal_spec.sigma1 = opts.sigma1_bal;
  bal_spec.sigma2 = opts.sigma2_bal;
  bal_spec.sigma_xi = 0.0;
  bal_spec.d = 2;

  const Dataset d_ft = dispel::sample_dataset(
      ft_spec, opts.n, dispel::rng::derive(global.seed, kTagFt));
  const Dataset d_bal = dispel::sample_single_group(
      bal_spec, 1, 1, opts.m, dispel::rng::derive(global.seed, kTagBal));
  MixConfig mc;
  mc.alpha = opts.alpha;
  mc.s = opts.s;
  mc.seed = dispel::rng::derive(global.seed, kTagMix);
  const auto [mixed, trace] = dispel::mix(d_ft, d_bal, mc);

  dispel::GdConfig gd;
  gd.step_size = opts.step_size;
  gd.epochs = opts.epochs;
  gd.record_every = opts.record_every;
  gd.init.w = Eigen::Vector2d(opts.w0[0], opts.w0[1]);
  gd.init.b = opts.b0;
  const auto unmixed_run = dispel::gd_finetune(d_ft, gd);
  const auto mixed_run = dispel::gd_finetune(mixed, gd);

  std::vector<std::string> rows;
  for (std::size_t i = 0; i < unmixed_run.trajectory.size(); ++i) {
    const auto& u = unmixed_run.trajectory[i];
    const auto& m = mixed_run.trajectory[i];
    rows.push_back(std::to_string(u.epoch) + "," +
                   num(dispel::alignment(u.weights, 2)) + "," +
                   num(dispel::alignment(m.weights, 2)));
  }
  const std::string out = global.path(opts.out);
  write_text(out, csv_table("epoch,unmixed_w2,mixed_w2", rows));
  dispel::write_manifest(out + ".manifest.json", "scenario2",
                         {{"n", num(opts.n)},
                          {"m", num(opts.m)},
                          {"alpha", num(opts.alpha)},
                          {"s", num(opts.s)},
                          {"sigma1", num(opts.sigma1)},
                          {"sigma1_bal", num(opts.sigma1_bal)},
                          {"sigma2_bal", num(opts.sigma2_bal)},
                          {"epochs", num(opts.epochs)},
                          {"record_every", num(opts.record_every)},
                          {"step_size", num(opts.step_size)},
                          {"w0", join(opts.w0)},
                          {"b0", num(opts.b0)},
                          {"seed", std::to_string(global.seed)}},
                         {out}, timer.seconds());
}

// ---------------------------------------------------------------------------
// retrain

struct RetrainOpts {
  std::string ft;
  std::string bal;
  std::string val;
  double alpha = 1.0;
  double s = 0.5;
  std::string optimizer = "sgd";
  double lr = 0.05;
  double l1 = 0.0;
  std::int64_t epochs = 60;
  std::int64_t patience = 10;
  int repeats = 10;
  std::vector<std::string> restrict_names;
  std::vector<std::string> class_weights;
  std::string out = "weights.csv";
  std::string report = "report.csv";
};

RetrainConfig retrain_config(const RetrainOpts& opts, std::uint64_t seed) {
  RetrainConfig cfg;
  cfg.optimizer = opts.optimizer == "l1avg"
                      ? RetrainConfig::Optimizer::l1_logreg_averaged
                      : RetrainConfig::Optimizer::sgd_early_stop;
  cfg.learning_rate = opts.lr;
  cfg.l1_strength = opts.l1;
  cfg.epochs = opts.epochs;
  cfg.patience = opts.patience;
  cfg.subset_repeats = opts.repeats;
  cfg.class_loss_weight = parse_class_weights(opts.class_weights);
  cfg.seed = seed;
  return cfg;
}

std::vector<ManifestEntry> retrain_params(const RetrainOpts& opts,
                                          std::uint64_t seed) {
  std::vector<ManifestEntry> params = {
      {"ft", opts.ft},
      {"bal", opts.bal},
      {"val", opts.val},
      {"optimizer", opts.optimizer},
      {"lr", num(opts.lr)},
      {"l1", num(opts.l1)},
      {"epochs", num(opts.epochs)},
      {"patience", num(opts.patience)},
      {"repeats", std::to_string(opts.repeats)},
      {"seed", std::to_string(seed)}};
  if (!opts.restrict_names.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < opts.restrict_names.size(); ++i) {
      if (i > 0) joined += ',';
      joined += opts.restrict_names[i];
    }
    params.push_back({"restrict", joined});
  }
  for (const auto& entry : opts.class_weights) {
    params.push_back({"class_weight:" + entry.substr(0, entry.find('=')),
                      entry.substr(entry.find('=') + 1)});
  }
  return params;
}

void run_retrain(const GlobalOpts& global, const RetrainOpts& opts) {
  Timer timer;
  global.prepare();
  const RetrainConfig cfg = retrain_config(opts, global.seed);
  const auto restriction = opts.restrict_names.empty()
                               ? std::optional<std::vector<dispel::GroupId>>()
                               : parse_restrict(opts.restrict_names);
  const FileFormat format = global.file_format();
  const Dataset d_ft = dispel::load_dataset(opts.ft, format);
  const Dataset d_bal = dispel::load_dataset(opts.bal, format);
  const Dataset val = dispel::load_dataset(opts.val, format);
  dispel::GroupUniverse universe = dispel::universe_of(val);
  universe.restriction = restriction;
  MixConfig mc;
  mc.alpha = opts.alpha;
  mc.s = opts.s;
  mc.seed = dispel::rng::derive(global.seed, kTagMix);
  const auto [mixed, trace] = dispel::mix(d_ft, d_bal, mc);
  const ModelWeights weights =
      dispel::retrain_head(mixed, val, cfg, universe);
  const auto report = dispel::evaluate_accuracy(weights, val, universe);

  const std::string out = global.path(opts.out);
  const std::string report_path = global.path(opts.report);
  dispel::save_weights(weights, out);
  dispel::save_report(report, report_path);
  auto params = retrain_params(opts, global.seed);
  params.push_back({"alpha", num(opts.alpha)});
  params.push_back({"s", num(opts.s)});
  params.push_back({"format", global.format});
  dispel::write_manifest(out + ".manifest.json", "retrain", params,
                         {out, report_path}, timer.seconds());
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOpts {
  RetrainOpts retrain;
  std::vector<double> alphas = {0.5, 1.0};
  std::vector<double> s_values = {0.3, 0.5, 0.7, 0.9, 1.0};
  std::string out = "sweep.csv";
  std::string best_weights = "best_weights.csv";
};

void run_sweep(const GlobalOpts& global, const SweepOpts& opts) {
  Timer timer;
  global.prepare();
  const RetrainConfig cfg = retrain_config(opts.retrain, global.seed);
  const auto restriction = opts.retrain.restrict_names.empty()
                               ? std::optional<std::vector<dispel::GroupId>>()
                               : parse_restrict(opts.retrain.restrict_names);
  const FileFormat format = global.file_format();
  const Dataset d_ft = dispel::load_dataset(opts.retrain.ft, format);
  const Dataset d_bal = dispel::load_dataset(opts.retrain.bal, format);
  const Dataset val = dispel::load_dataset(opts.retrain.val, format);
  dispel::GroupUniverse universe = dispel::universe_of(val);
  universe.restriction = restriction;
  dispel::SweepGrid grid;
  grid.alphas = opts.alphas;
  grid.s_values = opts.s_values;
  const auto swept = dispel::sweep(d_ft, d_bal, val, grid, cfg, universe);

  std::vector<std::string> rows;
  for (const auto& cell : swept.table) {
    rows.push_back(num(cell.alpha) + "," + num(cell.s) + "," +
                   num(cell.wg_val_acc));
  }
  const std::string out = global.path(opts.out);
  const std::string best_path = global.path(opts.best_weights);
  write_text(out, csv_table("alpha,s,wg_acc", rows));
  dispel::save_weights(swept.best_weights, best_path);

  auto params = retrain_params(opts.retrain, global.seed);
  params.push_back({"alphas", join(opts.alphas)});
  params.push_back({"s_values", join(opts.s_values)});
  params.push_back({"format", global.format});
  params.push_back({"best_alpha", num(swept.best_alpha)});
  params.push_back({"best_s", num(swept.best_s)});
  params.push_back({"best_acc", num(swept.best_acc)});
  dispel::write_manifest(out + ".manifest.json", "sweep", params,
                         {out, best_path}, timer.seconds());
}

// ---------------------------------------------------------------------------

void add_retrain_flags(CLI::App* cmd, RetrainOpts& opts) {
  cmd->add_option("--ft", opts.ft, "Fine-tune dataset file")->required();
  cmd->add_option("--bal", opts.bal, "Balanced dataset file")->required();
  cmd->add_option("--val", opts.val, "Validation dataset file")->required();
  cmd->add_option("--optimizer", opts.optimizer, "Head optimizer")
      ->check(CLI::IsMember({"sgd", "l1avg"}))
      ->capture_default_str();
  cmd->add_option("--lr", opts.lr, "SGD learning rate")
      ->capture_default_str();
  cmd->add_option("--l1", opts.l1, "L1 penalty strength")
      ->capture_default_str();
  cmd->add_option("--epochs", opts.epochs, "Epoch / iteration budget")
      ->capture_default_str();
  cmd->add_option("--patience", opts.patience, "Early-stopping patience")
      ->capture_default_str();
  cmd->add_option("--repeats", opts.repeats, "L1 subset repeats")
      ->capture_default_str();
  cmd->add_option("--restrict", opts.restrict_names,
                  "Worst-group reduction set, a|y pairs")
      ->delimiter(',');
  cmd->add_option("--class-weight", opts.class_weights,
                  "Per-class loss multipliers, label=weight")
      ->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, handle_interrupt);
  CLI::App app{"Data-mixing elimination of spurious correlations"};
  app.require_subcommand(1);

  GlobalOpts global;
  app.add_option("--seed", global.seed, "Root RNG seed")
      ->capture_default_str();
  app.add_option("--out-dir", global.out_dir, "Output directory")
      ->capture_default_str();
  app.add_option("--format", global.format, "Dataset file format")
      ->check(CLI::IsMember({"csv", "bin"}))
      ->capture_default_str();

  GenOpts gen;
  auto* cmd_gen = app.add_subcommand("gen", "Sample a synthetic dataset");
  cmd_gen->fallthrough();
  cmd_gen->add_option("--kind", gen.kind, "iid, balanced, or group")
      ->check(CLI::IsMember({"iid", "balanced", "group"}))
      ->capture_default_str();
  cmd_gen->add_option("--mu", gen.mu, "Label-attribute agreement rate")
      ->check(CLI::Range(0.5, 1.0))
      ->capture_default_str();
  cmd_gen->add_option("--sigma1", gen.sigma1, "Core coordinate noise std")
      ->capture_default_str();
  cmd_gen->add_option("--sigma2", gen.sigma2, "Spurious coordinate noise std")
      ->capture_default_str();
  cmd_gen->add_option("--sigma-xi", gen.sigma_xi, "Total tail noise std")
      ->capture_default_str();
  cmd_gen->add_option("--d", gen.d, "Feature dimension")
      ->capture_default_str();
  cmd_gen->add_option("--n", gen.n, "Rows to sample")->capture_default_str();
  cmd_gen->add_option("--mode", gen.mode, "Spurious attribute mode")
      ->check(CLI::IsMember({"present", "absent"}))
      ->capture_default_str();
  cmd_gen->add_option("--y", gen.y, "Label for --kind group")
      ->capture_default_str();
  cmd_gen->add_option("--a", gen.a, "Attribute for --kind group")
      ->capture_default_str();
  cmd_gen->add_option("--out", gen.out, "Output dataset file");
  cmd_gen->callback([&] { run_gen(global, gen); });

  MixOpts mix;
  auto* cmd_mix = app.add_subcommand("mix", "Blend a dataset toward a "
                                            "balanced partner set");
  cmd_mix->fallthrough();
  cmd_mix->add_option("--ft", mix.ft, "Fine-tune dataset file")->required();
  cmd_mix->add_option("--bal", mix.bal, "Balanced dataset file")->required();
  cmd_mix->add_option("--alpha", mix.alpha, "Per-row mix probability")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd_mix->add_option("--s", mix.s, "Mix weight toward the partner")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd_mix->add_option("--out", mix.out, "Output dataset file");
  cmd_mix->add_option("--trace", mix.trace, "Optional per-row trace CSV");
  cmd_mix->callback([&] { run_mix(global, mix); });

  RidgeOpts ridge;
  auto* cmd_ridge = app.add_subcommand("ridge", "Closed-form ridge fit");
  cmd_ridge->fallthrough();
  cmd_ridge->add_option("--data", ridge.data, "Training dataset file")
      ->required();
  cmd_ridge->add_option("--lambda", ridge.lambda, "Ridge penalty")
      ->capture_default_str();
  cmd_ridge->add_option("--out", ridge.out, "Output weights CSV")
      ->capture_default_str();
  cmd_ridge->callback([&] { run_ridge(global, ridge); });

  EvalOpts eval;
  auto* cmd_eval = app.add_subcommand("eval", "Per-group evaluation report");
  cmd_eval->fallthrough();
  cmd_eval->add_option("--weights", eval.weights, "Weights CSV")->required();
  cmd_eval->add_option("--data", eval.data, "Evaluation dataset file")
      ->required();
  cmd_eval->add_option("--metric", eval.metric, "acc or mse")
      ->check(CLI::IsMember({"acc", "mse"}))
      ->capture_default_str();
  cmd_eval->add_option("--restrict", eval.restrict_names,
                       "Worst-group reduction set, a|y pairs")
      ->delimiter(',');
  cmd_eval->add_option("--out", eval.out, "Output report CSV")
      ->capture_default_str();
  cmd_eval->callback([&] { run_eval(global, eval); });

  TheoryOpts theory;
  auto* cmd_theory =
      app.add_subcommand("theory", "Closed-form worst-group loss curves");
  cmd_theory->fallthrough();
  cmd_theory->add_option("--p", theory.p, "Correlation strengths")
      ->delimiter(',')
      ->check(CLI::Range(0.5, 1.0))
      ->capture_default_str();
  cmd_theory->add_option("--s-grid", theory.s_grid, "Mix weights, "
                                                    "start:stop:step")
      ->capture_default_str();
  cmd_theory->add_option("--sigma1", theory.sigma1, "Core noise std")
      ->capture_default_str();
  cmd_theory->add_option("--r", theory.r, "Tail noise ratio sigma_xi^2 / m")
      ->capture_default_str();
  cmd_theory->add_option("--lambda", theory.lambda, "Ridge penalty")
      ->capture_default_str();
  cmd_theory->add_option("--variant", theory.variant,
                         "printed or derived closed form")
      ->check(CLI::IsMember({"printed", "derived"}))
      ->capture_default_str();
  cmd_theory->add_option("--out", theory.out, "Output CSV")
      ->capture_default_str();
  cmd_theory->callback([&] { run_theory(global, theory); });

  SimulateOpts simulate;
  auto* cmd_simulate = app.add_subcommand(
      "simulate", "Monte Carlo worst-group loss over a (p, s) grid");
  cmd_simulate->fallthrough();
  auto add_sim_flags = [](CLI::App* cmd, SimulateOpts& opts,
                          bool preset_sizes) {
    cmd->add_option("--p", opts.p, "Correlation strengths")
        ->delimiter(',')
        ->check(CLI::Range(0.5, 1.0))
        ->capture_default_str();
    cmd->add_option("--s-grid", opts.s_grid, "Mix weights, start:stop:step")
        ->capture_default_str();
    cmd->add_option("--sigma1", opts.sigma1, "Core noise std")
        ->capture_default_str();
    cmd->add_option("--r", opts.r, "Tail noise ratio sigma_xi^2 / m")
        ->capture_default_str();
    cmd->add_option("--lambda", opts.lambda, "Ridge penalty")
        ->capture_default_str();
    auto* n = cmd->add_option("--n", opts.n, "Fine-tune rows per run");
    auto* d = cmd->add_option("--d", opts.d, "Feature dimension");
    auto* m = cmd->add_option("--m", opts.m, "Balanced set size");
    auto* runs = cmd->add_option("--runs", opts.runs, "Monte Carlo runs");
    if (!preset_sizes) {
      n->capture_default_str();
      d->capture_default_str();
      m->capture_default_str();
      runs->capture_default_str();
    }
  };
  add_sim_flags(cmd_simulate, simulate, false);
  cmd_simulate->add_option("--out", simulate.out, "Output CSV")
      ->capture_default_str();
  cmd_simulate->callback([&] { run_simulate(global, simulate); });

  Figure1Opts figure1;
  figure1.sim.p = {0.7, 0.8, 0.9, 0.95};
  figure1.sim.n = 0;
  figure1.sim.d = 0;
  figure1.sim.m = 0;
  figure1.sim.runs = 0;
  figure1.sim.sigma1 = 0.5;
  figure1.sim.r = 4.0;
  figure1.sim.lambda = 0.25;
  auto* cmd_figure1 = app.add_subcommand(
      "figure1", "Theory and simulation curves over the (p, s) grid");
  cmd_figure1->fallthrough();
  cmd_figure1->add_option("--scale", figure1.scale, "desk or paper preset")
      ->check(CLI::IsMember({"desk", "paper"}))
      ->capture_default_str();
  add_sim_flags(cmd_figure1, figure1.sim, true);
  cmd_figure1->add_option("--variant", figure1.variant,
                          "printed or derived closed form")
      ->check(CLI::IsMember({"printed", "derived"}))
      ->capture_default_str();
  cmd_figure1->callback([&] { run_figure1(global, figure1); });

  Figure2Opts figure2;
  auto* cmd_figure2 = app.add_subcommand(
      "figure2", "Fitted-head decomposition across the mix weight");
  cmd_figure2->fallthrough();
  cmd_figure2->add_option("--p", figure2.p, "Correlation strength")
      ->check(CLI::Range(0.5, 1.0))
      ->capture_default_str();
  cmd_figure2->add_option("--s-grid", figure2.s_grid,
                          "Mix weights, start:stop:step")
      ->capture_default_str();
  cmd_figure2->add_option("--sigma1", figure2.sigma1, "Core noise std")
      ->capture_default_str();
  cmd_figure2->add_option("--r", figure2.r, "Tail noise ratio sigma_xi^2 / m")
      ->capture_default_str();
  cmd_figure2->add_option("--lambda", figure2.lambda, "Ridge penalty")
      ->capture_default_str();
  cmd_figure2->add_option("--n", figure2.n, "Fine-tune rows per run")
      ->capture_default_str();
  cmd_figure2->add_option("--d", figure2.d, "Feature dimension")
      ->capture_default_str();
  cmd_figure2->add_option("--m", figure2.m, "Balanced set size")
      ->capture_default_str();
  cmd_figure2->add_option("--runs", figure2.runs, "Runs averaged per s")
      ->capture_default_str();
  cmd_figure2->add_option("--out", figure2.out, "Output CSV")
      ->capture_default_str();
  cmd_figure2->callback([&] { run_figure2(global, figure2); });

  Scenario2Opts scenario2;
  auto* cmd_scenario2 = app.add_subcommand(
      "scenario2", "Spurious-coordinate alignment, unmixed vs mixed");
  cmd_scenario2->fallthrough();
  cmd_scenario2->add_option("--n", scenario2.n, "Fine-tune rows")
      ->capture_default_str();
  cmd_scenario2->add_option("--m", scenario2.m, "Balanced set size")
      ->capture_default_str();
  cmd_scenario2->add_option("--alpha", scenario2.alpha,
                            "Per-row mix probability")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd_scenario2->add_option("--s", scenario2.s, "Mix weight")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd_scenario2->add_option("--sigma1", scenario2.sigma1,
                            "Fine-tune core noise std")
      ->capture_default_str();
  cmd_scenario2->add_option("--sigma1-bal", scenario2.sigma1_bal,
                            "Balanced-set core noise std")
      ->capture_default_str();
  cmd_scenario2->add_option("--sigma2-bal", scenario2.sigma2_bal,
                            "Balanced-set spurious noise std")
      ->capture_default_str();
  cmd_scenario2->add_option("--epochs", scenario2.epochs, "GD epochs")
      ->capture_default_str();
  cmd_scenario2->add_option("--record-every", scenario2.record_every,
                            "Trajectory stride")
      ->capture_default_str();
  cmd_scenario2->add_option("--step-size", scenario2.step_size,
                            "GD step (0 picks it from the curvature)")
      ->capture_default_str();
  cmd_scenario2->add_option("--w0", scenario2.w0, "Initial weights, two "
                                                  "values")
      ->delimiter(',')
      ->expected(2);
  cmd_scenario2->add_option("--b0", scenario2.b0, "Initial bias")
      ->capture_default_str();
  cmd_scenario2->add_option("--out", scenario2.out, "Output CSV")
      ->capture_default_str();
  cmd_scenario2->callback([&] { run_scenario2(global, scenario2); });

  RetrainOpts retrain;
  auto* cmd_retrain = app.add_subcommand(
      "retrain", "Mix once and retrain a logistic head");
  cmd_retrain->fallthrough();
  add_retrain_flags(cmd_retrain, retrain);
  cmd_retrain->add_option("--alpha", retrain.alpha, "Per-row mix probability")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd_retrain->add_option("--s", retrain.s, "Mix weight")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd_retrain->add_option("--out", retrain.out, "Output weights CSV")
      ->capture_default_str();
  cmd_retrain->add_option("--report", retrain.report, "Output report CSV")
      ->capture_default_str();
  cmd_retrain->callback([&] { run_retrain(global, retrain); });

  SweepOpts sweep;
  auto* cmd_sweep = app.add_subcommand(
      "sweep", "Grid search over (alpha, s) by worst-group accuracy");
  cmd_sweep->fallthrough();
  add_retrain_flags(cmd_sweep, sweep.retrain);
  cmd_sweep->add_option("--alphas", sweep.alphas, "Mix probabilities")
      ->delimiter(',')
      ->capture_default_str();
  cmd_sweep->add_option("--s-values", sweep.s_values, "Mix weights")
      ->delimiter(',')
      ->capture_default_str();
  cmd_sweep->add_option("--out", sweep.out, "Output table CSV")
      ->capture_default_str();
  cmd_sweep->add_option("--best-weights", sweep.best_weights,
                        "Best-cell weights CSV")
      ->capture_default_str();
  cmd_sweep->callback([&] { run_sweep(global, sweep); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  } catch (const dispel::NumericalError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 4;
  } catch (const Interrupted&) {
    std::cerr << "interrupted; partial outputs flushed\n";
    return 130;
  }
  return 0;
}
