// Copyright 2026 The ILA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// ila: generate synthetic data, train, evaluate, run ablations, print the
// cost model and check gradients. Data goes to files (or stdout where noted),
// progress to stderr. Exit status: 0 success, 1 runtime failure, 2 usage.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ila/config.hpp"
#include "ila/errors.hpp"
#include "ila/gradcheck.hpp"
#include "ila/metrics.hpp"
#include "ila/synth.hpp"
#include "ila/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config, out, data, test_data, checkpoint, axis, log, split = "train";
  std::optional<std::uint64_t> seed;
  bool probe_emd = false;
  std::size_t gradcheck_seeds = 10;
  ila::CostParams cost = ila::CostParams::vit_b32_8f();
};

void log(const std::string& msg) { std::cerr << "[ila] " << msg << '\n'; }

ila::RunConfig resolve_config(const Options& o) {
  ila::RunConfig cfg = o.config.empty() ? ila::RunConfig{} : ila::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

/// Reads `path`, or generates the split described by `cfg` when empty.
ila::Dataset load_or_generate(const std::string& path, const ila::RunConfig& cfg, bool test,
                              std::string* sha1) {
  if (!path.empty()) {
    if (sha1) *sha1 = ila::file_sha1(path);
    return ila::read_dataset(path);
  }
  ila::Dataset d = ila::generate(cfg.task(test), test ? cfg.test_samples : cfg.train_samples,
                                 cfg.threads);
  if (sha1) *sha1 = ila::git_blob_sha1(ila::serialize_dataset(d));
  return d;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ila::Error("cannot open " + path + " for writing");
  return out;
}

int cmd_gen(const Options& o) {
  const auto cfg = resolve_config(o);
  const bool test = o.split == "test";
  const auto data = load_or_generate("", cfg, test, nullptr);
  ila::write_dataset(o.out, data);
  log("wrote " + std::to_string(data.size()) + " " + o.split + " clips to " + o.out +
      " (sha1 " + ila::file_sha1(o.out) + ")");
  return 0;
}

int cmd_train(const Options& o) {
  const auto cfg = resolve_config(o);
  std::string sha1;
  const auto data = load_or_generate(o.data, cfg, false, &sha1);
  ila::IlaModel model(cfg.model, cfg.seed);
  const std::string log_path = o.log.empty() ? o.out + ".log.jsonl" : o.log;
  std::ofstream log_out = open_out(log_path);
  log("training " + std::to_string(model.params().scalar_count()) + " parameters for " +
      std::to_string(cfg.steps()) + " steps on " + std::to_string(data.size()) + " clips");
  const auto report = ila::train(model, cfg, data, [&](const ila::StepRecord& r) {
    log_out << ila::to_json_line(r) << '\n';
    log_out.flush();
    if (r.step % (cfg.log_every * 10) == 0 || r.step == cfg.steps()) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "step %zu total %.4f sim %.4f align %.4f lr %.2e", r.step,
                    r.total, r.sim, r.align, r.lr);
      log(buf);
    }
  });
  ila::save_checkpoint(o.out, {ila::serialize_config(cfg) + "# dataset_sha1 = " + sha1 + "\n",
                               model.params()});
  log("saved " + o.out + " after " + std::to_string(report.seconds) + " s");
  return 0;
}

int cmd_eval(const Options& o) {
  const auto ckpt = ila::load_checkpoint(o.checkpoint);
  ila::RunConfig cfg = ila::parse_config(ckpt.metadata);
  if (o.seed) cfg.seed = *o.seed;
  std::string sha1;
  const auto data = load_or_generate(o.data, cfg, true, &sha1);
  const ila::IlaModel model(cfg.model, ckpt.params);
  const auto ev = ila::evaluate(model, data, cfg.threads);
  json report{{"config", ila::serialize_config(cfg)},
              {"checkpoint", o.checkpoint},
              {"dataset_sha1", sha1},
              {"samples", ev.samples},
              {"top1", ev.top1},
              {"top5", ev.top5}};
  if (o.probe_emd) {
    const auto emd = ila::mi_probe(model, data, cfg.threads);
    report["emd_mean"] = emd.mean;
  }
  log("top1 " + std::to_string(ev.top1) + " on " + std::to_string(ev.samples) + " clips");
  if (o.out.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    open_out(o.out) << report.dump(2) << '\n';
  }
  return 0;
}

int cmd_ablate(const Options& o) {
  const auto cfg = resolve_config(o);
  std::string train_sha, test_sha;
  const auto train_data = load_or_generate(o.data, cfg, false, &train_sha);
  const auto test_data = load_or_generate(o.test_data, cfg, true, &test_sha);
  const auto rows = ila::run_ablation(cfg, o.axis, train_data, test_data, o.probe_emd,
                                      [](const ila::AblationRow& r) {
                                        log(r.axis + "=" + r.variant + " seed " +
                                            std::to_string(r.seed) + " top1 " +
                                            std::to_string(r.top1));
                                      });
  std::ofstream out = open_out(o.out);
  // Provenance as comment lines; read with e.g. pandas.read_csv(comment='#').
  std::istringstream cfg_lines(ila::serialize_config(cfg));
  for (std::string line; std::getline(cfg_lines, line);) out << "# " << line << '\n';
  out << "# train_sha1 = " << train_sha << "\n# test_sha1 = " << test_sha << '\n';
  ila::write_ablation_csv(out, rows);
  return 0;
}

int cmd_flops(const Options& o) {
  const ila::CostParams& p = o.cost;
  std::ostringstream table;
  table << "scheme,frames,grid_h,grid_w,dim,depth,kernel,macs,flops,gflops,asymptotic,"
           "macs_vs_spatial\n";
  const double base = ila::flops_estimate(ila::Scheme::SpatialOnly, p).macs;
  std::vector<std::pair<double, std::string>> order;
  for (auto s : ila::all_schemes()) {
    const auto r = ila::flops_estimate(s, p);
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%g,%g,%g,%g,%g,%g,%.0f,%.0f,%.3f,%.0f,%.4f\n",
                  ila::to_string(s).c_str(), p.frames, p.grid_h, p.grid_w, p.dim, p.depth,
                  p.kernel, r.macs, r.flops, r.flops / 1e9, r.asymptotic, r.macs / base);
    table << buf;
    order.emplace_back(r.asymptotic, ila::to_string(s));
  }
  std::sort(order.begin(), order.end());
  std::string ordering;
  for (const auto& [_, name] : order) ordering += (ordering.empty() ? "" : " < ") + name;
  table << "# asymptotic ordering: " << ordering << '\n';
  if (o.out.empty()) {
    std::cout << table.str();
  } else {
    open_out(o.out) << table.str();
  }
  return 0;
}

int cmd_gradcheck(const Options& o) {
  const std::uint64_t first = o.seed.value_or(0);
  bool ok = true;
  std::ostringstream lines;
  for (std::uint64_t s = first; s < first + o.gradcheck_seeds; ++s) {
    auto results = ila::check_ops(s);
    results.push_back(ila::check_model(s));
    for (const auto& r : results) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "%s seed=%llu %s rel_error=%.3e tol=%.0e\n",
                    r.passed ? "PASS" : "FAIL", static_cast<unsigned long long>(s),
                    r.name.c_str(), r.rel_error, r.tolerance);
      lines << buf;
      ok = ok && r.passed;
    }
  }
  if (o.out.empty()) {
    std::cout << lines.str();
  } else {
    open_out(o.out) << lines.str();
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ILA: implicit learnable alignment for video transformers"};
  app.require_subcommand(1);
  Options o;
  auto seed_flag = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { o.seed = s; },
                                            "Override the config seed");
  };

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset file");
  gen->add_option("--config", o.config, "Run config (key = value)")->check(CLI::ExistingFile);
  gen->add_option("--out", o.out, "Output dataset path")->required();
  gen->add_option("--split", o.split, "train or test")->check(CLI::IsMember({"train", "test"}));
  seed_flag(gen);

  auto* tr = app.add_subcommand("train", "Train a model and write a checkpoint");
  tr->add_option("--config", o.config, "Run config")->check(CLI::ExistingFile);
  tr->add_option("--data", o.data, "Training dataset (generated from the config if omitted)")
      ->check(CLI::ExistingFile);
  tr->add_option("--out", o.out, "Checkpoint path")->required();
  tr->add_option("--log", o.log, "JSON-lines training log (default <out>.log.jsonl)");
  seed_flag(tr);

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint path")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", o.data, "Test dataset (generated from the config if omitted)")
      ->check(CLI::ExistingFile);
  ev->add_option("--out", o.out, "JSON report path (stdout if omitted)");
  ev->add_flag("--probe-emd", o.probe_emd, "Also report the adjacent-frame EMD probe");
  seed_flag(ev);

  auto* ab = app.add_subcommand("ablate", "Train and evaluate every variant of one axis");
  ab->add_option("--config", o.config, "Run config")->check(CLI::ExistingFile);
  ab->add_option("--axis", o.axis, "strategy | blocks | mi_variant | gamma")
      ->required()
      ->check(CLI::IsMember(ila::ablation_axes()));
  ab->add_option("--data", o.data, "Training dataset")->check(CLI::ExistingFile);
  ab->add_option("--test-data", o.test_data, "Test dataset")->check(CLI::ExistingFile);
  ab->add_option("--out", o.out, "CSV path")->required();
  ab->add_flag("--probe-emd", o.probe_emd, "Add the EMD probe column");
  seed_flag(ab);

  auto* fl = app.add_subcommand("flops", "Cost model for all six attention schemes");
  fl->add_option("--frames", o.cost.frames);
  fl->add_option("--grid-h", o.cost.grid_h);
  fl->add_option("--grid-w", o.cost.grid_w);
  fl->add_option("--dim", o.cost.dim);
  fl->add_option("--depth", o.cost.depth);
  fl->add_option("--patch", o.cost.patch);
  fl->add_option("--kernel", o.cost.kernel);
  fl->add_flag("--deep-conv", o.cost.deep_conv);
  fl->add_option("--out", o.out, "CSV path (stdout if omitted)");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference checks of every op and the toy model");
  gc->add_option("--seeds", o.gradcheck_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  gc->add_option("--out", o.out, "Listing path (stdout if omitted)");
  seed_flag(gc);

  auto* defaults = app.add_subcommand("config", "Print the documented default config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*tr) return cmd_train(o);
    if (*ev) return cmd_eval(o);
    if (*ab) return cmd_ablate(o);
    if (*fl) return cmd_flops(o);
    if (*gc) return cmd_gradcheck(o);
    if (*defaults) {
      std::cout << ila::default_config_text();
      return 0;
    }
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return 1;
  }
  return 2;
}
