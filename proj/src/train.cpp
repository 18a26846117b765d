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


#include "ila/train.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>

#include "json.hpp"

#include "ila/errors.hpp"
#include "ila/objective.hpp"
#include "ila/parallel.hpp"
#include "ila/rng.hpp"

namespace ila {
namespace {

constexpr std::uint64_t kSamplerStream = 0x5A3B1E;

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

SampleLoss sample_loss(const IlaModel& model, const Tensor& clip, std::size_t label,
                       const LossConfig& loss, std::vector<Tensor>* grads) {
  Tape tape;
  const auto bound = model.params().bind(tape, grads != nullptr);
  const ForwardResult r = model.forward(tape, bound, clip);
  const Var sim = similarity_loss(r.scores, label, loss.label_smoothing);
  const Var align = alignment_loss(r.mi_tokens, tape);
  const Var total = total_loss(sim, align, loss.gamma);
  if (grads) {
    const Gradients g = tape.backward(total);
    grads->resize(bound.size());
    for (std::size_t i = 0; i < bound.size(); ++i) (*grads)[i] = g[bound[i]];
  }
  return {total.value().item(), sim.value().item(), align.value().item()};
}

std::string to_json_line(const StepRecord& r) {
  nlohmann::json j{{"step", r.step}, {"total", r.total}, {"sim", r.sim},
                   {"align", r.align}, {"lr", r.lr}};
  return j.dump();
}

TrainReport train(IlaModel& model, const RunConfig& cfg, const Dataset& data,
                  const std::function<void(const StepRecord&)>& on_record) {
  cfg.validate();
  if (data.size() == 0) throw EmptyDataset("no training clips");
  const auto& mc = model.config();
  if (data.frames != mc.frames || data.height != mc.height || data.width != mc.width) {
    throw ShapeMismatch("dataset clips do not match the model geometry");
  }
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  AdamW opt(cfg.optim);
  SplitMix64 sampler(derive_seed(cfg.seed, kSamplerStream));
  const std::size_t B = cfg.batch, P = model.params().size();
  std::vector<std::vector<Tensor>> slots(B);
  std::vector<double> totals(B), sims(B), aligns(B);
  std::vector<std::size_t> picks(B);
  std::vector<Tensor> sum(P);

  for (std::size_t step = 1; step <= cfg.steps(); ++step) {
    for (auto& p : picks) p = sampler.below(data.size());
    parallel_for(B, cfg.threads, [&](std::size_t i) {
      const std::size_t k = picks[i];
      const SampleLoss l =
          sample_loss(model, data.clip(k), data.samples[k].label, cfg.loss, &slots[i]);
      totals[i] = l.total;
      sims[i] = l.sim;
      aligns[i] = l.align;
    });
    for (std::size_t p = 0; p < P; ++p) {
      std::vector<double> acc(model.params().value(p).size(), 0.0);
      for (std::size_t i = 0; i < B; ++i) {
        auto g = slots[i][p].data();
        for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += g[e];
      }
      for (double& a : acc) a /= static_cast<double>(B);
      sum[p] = Tensor(model.params().value(p).shape(), std::move(acc));
    }
    const double lr = opt.step(model.params(), sum);
    if (step % cfg.log_every == 0 || step == cfg.steps()) {
      StepRecord rec{step, mean_of(totals), mean_of(sims), mean_of(aligns), lr};
      report.log.push_back(rec);
      if (on_record) on_record(rec);
    }
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<double> predict(const IlaModel& model, const Tensor& clip) {
  Tape tape;
  const auto bound = model.params().bind(tape, false);
  const ForwardResult r = model.forward(tape, bound, clip);
  auto s = r.scores.value().data();
  return {s.begin(), s.end()};
}

EvalReport evaluate(const IlaModel& model, const Dataset& data, std::size_t threads) {
  if (data.size() == 0) throw EmptyDataset("no evaluation clips");
  EvalReport r;
  r.samples = data.size();
  r.scores.resize(data.size());
  parallel_for(data.size(), threads,
               [&](std::size_t i) { r.scores[i] = predict(model, data.clip(i)); });
  const auto labels = data.labels();
  r.top1 = topk_accuracy(r.scores, labels, 1);
  r.top5 = topk_accuracy(r.scores, labels, std::min<std::size_t>(5, model.config().num_classes));
  return r;
}

EmdReport mi_probe(const IlaModel& model, const Dataset& data, std::size_t threads) {
  if (data.size() == 0) throw EmptyDataset("no clips to probe");
  const std::size_t hw = model.config().patches();
  EmdReport report;
  report.per_video.resize(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    Tape tape;
    const auto bound = model.params().bind(tape, false);
    const ForwardResult r = model.forward(tape, bound, data.clip(i));
    double acc = 0.0;
    for (std::size_t t = 0; t + 1 < r.tokens.size(); ++t) {
      acc += emd_pair(slice(r.tokens[t], 0, 1, 1 + hw).value(),
                      slice(r.tokens[t + 1], 0, 1, 1 + hw).value());
    }
    report.per_video[i] =
        r.tokens.size() > 1 ? acc / static_cast<double>(r.tokens.size() - 1) : 0.0;
  });
  report.mean = mean_of(report.per_video);
  return report;
}

std::string git_blob_sha1(std::span<const std::uint8_t> bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("SHA-1 computation failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string file_sha1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptFile("cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  return git_blob_sha1(buf);
}

const std::vector<std::string>& ablation_axes() {
  static const std::vector<std::string> kAxes{"strategy", "blocks", "mi_variant", "gamma"};
  return kAxes;
}

std::vector<AblationVariant> ablation_variants(const RunConfig& config, const std::string& axis) {
  RunConfig base = config;
  if (base.ablation_steps > 0) {
    base.optim.total_steps = base.ablation_steps;
    base.optim.warmup_steps = std::min(base.optim.warmup_steps, base.ablation_steps / 2);
  }
  std::vector<AblationVariant> out;
  if (axis == "strategy") {
    for (auto s : {AlignStrategy::Adjacent, AlignStrategy::AlignFirst, AlignStrategy::AlignMiddle}) {
      RunConfig c = base;
      c.model.align.strategy = s;
      out.push_back({to_string(s), c});
    }
  } else if (axis == "blocks") {
    const std::size_t L = base.model.depth;
    for (std::size_t lo = 1; lo <= L; lo += 3) {
      const std::size_t hi = std::min(L, lo + 2);
      RunConfig c = base;
      c.model.aligned_blocks.clear();
      for (std::size_t b = lo; b <= hi; ++b) c.model.aligned_blocks.push_back(b);
      out.push_back({lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi), c});
    }
    RunConfig full = base;
    full.model.aligned_blocks.clear();
    for (std::size_t b = 1; b <= L; ++b) full.model.aligned_blocks.push_back(b);
    out.push_back({"all", full});
  } else if (axis == "mi_variant") {
    for (auto v : {MiVariant::PoolConcat, MiVariant::ElementwiseAdd, MiVariant::DirectConcat,
                   MiVariant::AvgPoolNoAlign, MiVariant::None}) {
      RunConfig c = base;
      c.model.align.mi_variant = v;
      out.push_back({to_string(v), c});
    }
  } else if (axis == "gamma") {
    for (double g : {0.0, 0.05, 0.1, 0.5, 1.0}) {
      RunConfig c = base;
      c.loss.gamma = g;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", g);
      out.push_back({buf, c});
    }
  } else {
    throw ConfigError("unknown ablation axis '" + axis + "' (strategy, blocks, mi_variant, gamma)");
  }
  return out;
}

std::vector<AblationRow> run_ablation(const RunConfig& base, const std::string& axis,
                                      const Dataset& train_data, const Dataset& test_data,
                                      bool probe_emd,
                                      const std::function<void(const AblationRow&)>& on_row) {
  const auto variants = ablation_variants(base, axis);
  std::vector<AblationRow> rows;
  for (std::size_t s = 0; s < base.ablation_seeds; ++s) {
    for (const auto& v : variants) {
      RunConfig c = v.config;
      c.seed = base.seed + s;
      IlaModel model(c.model, c.seed);
      const TrainReport tr = train(model, c, train_data);
      const EvalReport ev = evaluate(model, test_data, c.threads);
      AblationRow row{axis, v.name, c.seed, c.steps(), tr.log.back().total, ev.top1, 0.0};
      if (probe_emd) row.emd_mean = mi_probe(model, test_data, c.threads).mean;
      rows.push_back(row);
      if (on_row) on_row(row);
    }
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "axis,variant,seed,steps,final_loss,top1,emd_mean\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%llu,%zu,%.10g,%.10g,%.10g\n", r.axis.c_str(),
                  r.variant.c_str(), static_cast<unsigned long long>(r.seed), r.steps,
                  r.final_loss, r.top1, r.emd_mean);
    out << buf;
  }
}

}  // namespace ila
