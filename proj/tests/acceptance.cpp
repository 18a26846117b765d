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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion, with
// the measured numbers, and exits nonzero if any criterion fails.
//
//   acceptance [--workdir DIR] [--criteria 1,2,...] [--ablation-steps N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ila/alignment.hpp"
#include "ila/config.hpp"
#include "ila/gradcheck.hpp"
#include "ila/metrics.hpp"
#include "ila/objective.hpp"
#include "ila/parallel.hpp"
#include "ila/rng.hpp"
#include "ila/train.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace ila;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Verdict {
  int id;
  std::string title;
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok " : "FAILED ") + what);
  }
  void note(const std::string& what) { notes.push_back(what); }
};

void report(const Verdict& v) {
  std::printf("criterion %d: %s  %s\n", v.id, v.pass ? "PASS" : "FAIL", v.title.c_str());
  for (const auto& n : v.notes) std::printf("    %s\n", n.c_str());
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------

Verdict gradient_integrity() {
  Verdict v{1, "gradient integrity (op < 1e-4, toy model < 1e-3, 10 seeds, < 60 s)"};
  const auto t0 = Clock::now();
  double worst_op = 0.0, worst_model = 0.0;
  std::string worst_name;
  std::size_t checks = 0, failed = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (const auto& r : check_ops(seed)) {
      ++checks;
      failed += !(r.rel_error < kOpTolerance);
      if (r.rel_error >= worst_op) {
        worst_op = r.rel_error;
        worst_name = r.name;
      }
    }
    const GradCheckResult m = check_model(seed);
    ++checks;
    failed += !(m.rel_error < kModelTolerance);
    worst_model = std::max(worst_model, m.rel_error);
  }
  const double elapsed = seconds_since(t0);
  v.require(failed == 0, std::to_string(checks - failed) + "/" + std::to_string(checks) +
                             " checks within tolerance");
  v.note("worst op rel error " + fmt("%.3e", worst_op) + " (" + worst_name + ")");
  v.note("worst model rel error " + fmt("%.3e", worst_model));
  v.require(elapsed < 60.0, "runtime " + fmt("%.1f", elapsed) + " s < 60 s");
  return v;
}

Verdict mask_geometry() {
  Verdict v{2, "mask geometry (plateau, range, monotone decay, hand values to 1e-12)"};
  const MaskParams p{1.0, 0.3, 1.0};
  v.require(std::abs(mask_weight(0.5, p) - 0.8) <= 1e-12,
            "w(s=0.5) = " + fmt("%.15f", mask_weight(0.5, p)));
  v.require(std::abs(mask_weight(2.0, p)) <= 1e-12, "w(s=2.0) = " + fmt("%.15f", mask_weight(2.0, p)));
  SplitMix64 rng(2);
  std::size_t masks = 0, range_bad = 0, plateau_bad = 0, monotone_bad = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const MaskParams q{0.1 + 2.0 * rng.uniform(), rng.uniform(), 0.05 + 3.0 * rng.uniform()};
    const InteractivePoint pt{2 * rng.uniform() - 1, 2 * rng.uniform() - 1};
    const std::size_t h = 1 + rng.below(8), w = 1 + rng.below(8);
    const AlignMask m = make_mask(pt, h, w, q);
    ++masks;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const InteractivePoint u = grid_position(i, j, h, w);
        const double s = std::hypot(u.x - pt.x, u.y - pt.y), wt = m.at(i, j);
        range_bad += !(wt >= 0.0 && wt <= q.eta);
        if (s <= q.delta) plateau_bad += std::abs(wt - q.eta) > 1e-12;
        if (s > q.delta + 1e-9) plateau_bad += !(wt < q.eta);
        pts.emplace_back(s, wt);
      }
    }
    std::sort(pts.begin(), pts.end());
    for (std::size_t k = 1; k < pts.size(); ++k) monotone_bad += pts[k].second > pts[k - 1].second;
  }
  v.require(range_bad == 0, "all weights in [0, eta] over " + std::to_string(masks) + " masks");
  v.require(plateau_bad == 0, "w = eta exactly inside delta, below eta outside");
  v.require(monotone_bad == 0, "weights non-increasing in distance");
  return v;
}

// Trained models shared by criteria 3, 4 and 5.
struct TrainedPair {
  RunConfig base_cfg, ila_cfg;
  std::optional<IlaModel> baseline, ila;
  Dataset test;
  double seconds = 0.0;
  double base_top1 = 0.0, ila_top1 = 0.0;
};

RunConfig baseline_config(const RunConfig& defaults) {
  RunConfig c = defaults;
  c.model.aligned_blocks.clear();
  c.model.align.mi_variant = MiVariant::None;
  return c;
}

TrainedPair& trained(const fs::path& workdir) {
  static std::optional<TrainedPair> cache;
  if (cache) return *cache;
  cache.emplace();
  TrainedPair& tp = *cache;
  const auto t0 = Clock::now();
  tp.ila_cfg = RunConfig{};
  tp.base_cfg = baseline_config(tp.ila_cfg);
  const Dataset train_data = generate(tp.ila_cfg.task(false), tp.ila_cfg.train_samples);
  tp.test = generate(tp.ila_cfg.task(true), tp.ila_cfg.test_samples);
  auto fit = [&](const RunConfig& cfg, const char* name) {
    IlaModel m(cfg.model, cfg.seed);
    std::ofstream log(workdir / (std::string(name) + ".log.jsonl"));
    const auto t = Clock::now();
    train(m, cfg, train_data, [&](const StepRecord& r) {
      log << to_json_line(r) << '\n';
      if (r.step % 250 == 0 || r.step == cfg.steps()) {
        std::fprintf(stderr, "[acceptance] %s step %zu loss %.4f (%.0f s)\n", name, r.step,
                     r.total, seconds_since(t));
      }
    });
    save_checkpoint(workdir / (std::string(name) + ".ckpt"), {serialize_config(cfg), m.params()});
    return m;
  };
  tp.baseline.emplace(fit(tp.base_cfg, "baseline"));
  tp.ila.emplace(fit(tp.ila_cfg, "ila"));
  tp.base_top1 = evaluate(*tp.baseline, tp.test).top1;
  tp.ila_top1 = evaluate(*tp.ila, tp.test).top1;
  tp.seconds = seconds_since(t0);
  return tp;
}

Verdict temporal_order(const fs::path& workdir) {
  Verdict v{3, "temporal-order separation (baseline <= 35%, ILA >= 85%, < 15 min on 4 cores)"};
  const TrainedPair& tp = trained(workdir);
  v.require(tp.base_top1 <= 0.35, "baseline top-1 " + fmt("%.4f", tp.base_top1) + " <= 0.35");
  v.require(tp.ila_top1 >= 0.85, "ILA top-1 " + fmt("%.4f", tp.ila_top1) + " >= 0.85");
  const unsigned threads = std::thread::hardware_concurrency();
  v.require(tp.seconds < 900.0, "runtime " + fmt("%.0f", tp.seconds) + " s on " +
                                    std::to_string(threads) +
                                    " hardware thread(s) (< 900 s budget is stated for 4 cores)");
  return v;
}

Verdict reversal(const fs::path& workdir) {
  Verdict v{4, "frame-reversal invariance (disabled: 1e-8 on 100 clips; enabled: > 1e-6 on >= 95)"};
  const TrainedPair& tp = trained(workdir);
  std::size_t invariant = 0, differ = 0;
  double worst_disabled = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    const Tensor clip = tp.test.clip(i);
    const Tensor rev = reverse_frames(clip);
    auto diff = [&](const IlaModel& m) {
      const auto a = predict(m, clip), b = predict(m, rev);
      double d = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
      return d;
    };
    const double dd = diff(*tp.baseline);
    worst_disabled = std::max(worst_disabled, dd);
    invariant += dd <= 1e-8;
    differ += diff(*tp.ila) > 1e-6;
  }
  v.require(invariant == 100, "disabled model invariant on " + std::to_string(invariant) +
                                  "/100 (max diff " + fmt("%.2e", worst_disabled) + ")");
  v.require(differ >= 95, "enabled model differs on " + std::to_string(differ) + "/100");
  return v;
}

Verdict emd_probe(const fs::path& workdir) {
  Verdict v{5, "EMD probe (exact solver = brute force for n <= 4; ILA < baseline after training)"};
  SplitMix64 rng(5);
  double worst = 0.0;
  std::size_t instances = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 250; ++trial) {
      Tensor a({n, 6}), b({n, 6});
      for (double& x : a.mutable_data()) x = rng.normal();
      for (double& x : b.mutable_data()) x = rng.normal();
      std::vector<double> pa(a.data().begin(), a.data().end()), pb(b.data().begin(), b.data().end());
      for (auto* p : {&pa, &pb}) {
        for (std::size_t r = 0; r < n; ++r) {
          double s = 0.0;
          for (std::size_t c = 0; c < 6; ++c) s += (*p)[r * 6 + c] * (*p)[r * 6 + c];
          for (std::size_t c = 0; c < 6; ++c) (*p)[r * 6 + c] /= std::sqrt(s);
        }
      }
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      double best = INFINITY;
      do {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          double d2 = 0.0;
          for (std::size_t c = 0; c < 6; ++c) d2 += std::pow(pa[i * 6 + c] - pb[perm[i] * 6 + c], 2);
          s += std::sqrt(d2);
        }
        best = std::min(best, s);
      } while (std::next_permutation(perm.begin(), perm.end()));
      worst = std::max(worst, std::abs(emd_pair(a, b) - best / n));
      ++instances;
    }
  }
  v.require(worst <= 1e-9, std::to_string(instances) + " instances, max |exact - brute force| " +
                               fmt("%.2e", worst));
  const TrainedPair& tp = trained(workdir);
  const double base = mi_probe(*tp.baseline, tp.test).mean;
  const double ila = mi_probe(*tp.ila, tp.test).mean;
  v.require(ila < base, "mean adjacent-frame EMD: ILA " + fmt("%.4f", ila) + " < baseline " +
                            fmt("%.4f", base));
  return v;
}

Verdict cost_model(const fs::path& workdir) {
  Verdict v{6, "cost model at ViT-B/32-8f (ordering, SpatialOnly ~37 GFLOPs, ILA/SpatialOnly <= 1.15)"};
  const auto t0 = Clock::now();
  const CostParams p = CostParams::vit_b32_8f();
  std::vector<CostReport> rows;
  for (Scheme s : all_schemes()) rows.push_back(flops_estimate(s, p));
  auto order_by = [&](auto key) {
    std::vector<CostReport> sorted = rows;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [&](const CostReport& a, const CostReport& b) { return key(a) < key(b); });
    std::string out;
    for (const auto& r : sorted) out += (out.empty() ? "" : " < ") + to_string(r.scheme);
    return out;
  };
  const std::string expected = "SpatialOnly < FrameLevel < ILA < DividedST < ATA < JointST";
  const std::string asymptotic = order_by([](const CostReport& r) { return r.asymptotic; });
  const std::string exact = order_by([](const CostReport& r) { return r.macs; });
  v.require(asymptotic == expected, "asymptotic ordering " + asymptotic + " (expected " + expected + ")");
  v.note("exact-count ordering " + exact);
  const double spatial = rows[0].flops, ila = rows[5].flops;
  v.require(spatial >= 37e9 / 1.5 && spatial <= 37e9 * 1.5,
            "SpatialOnly " + fmt("%.2f", spatial / 1e9) + " GFLOPs within 1.5x of 37");
  v.require(ila / spatial <= 1.15, "ILA/SpatialOnly " + fmt("%.4f", ila / spatial) + " <= 1.15");
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 1.0, "runtime " + fmt("%.2e", elapsed) + " s < 1 s");
  std::ofstream csv(workdir / "flops.csv");
  csv << "scheme,macs,flops,asymptotic\n";
  for (const auto& r : rows) {
    csv << to_string(r.scheme) << ',' << fmt("%.6e", r.macs) << ',' << fmt("%.6e", r.flops) << ','
        << fmt("%.6e", r.asymptotic) << '\n';
  }
  return v;
}

Verdict alignment_bound() {
  Verdict v{7, "alignment-loss bound on 1000 random token sets; identical tokens hit -A(T-1)"};
  SplitMix64 rng(7);
  std::size_t inside = 0, exact = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t A = 1 + rng.below(4), T = 2 + rng.below(7), d = 1 + rng.below(16);
    const double bound = static_cast<double>(A * (T - 1));
    Tape tape;
    std::vector<std::vector<Var>> random(A), same(A);
    Tensor shared({1, d});
    for (double& x : shared.mutable_data()) x = rng.normal();
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t t = 0; t < T; ++t) {
        Tensor tok({1, d});
        for (double& x : tok.mutable_data()) x = rng.normal();
        random[a].push_back(tape.constant(tok));
        same[a].push_back(tape.constant(shared));
      }
    }
    const double l = alignment_loss(random, tape).value().item();
    inside += l >= -bound && l <= bound;
    exact += alignment_loss(same, tape).value().item() == -bound;
  }
  v.require(inside == 1000, std::to_string(inside) + "/1000 within [-A(T-1), A(T-1)]");
  v.require(exact == 1000, std::to_string(exact) + "/1000 identical-token sets equal -A(T-1) exactly");
  return v;
}

Verdict ablations(const fs::path& workdir, std::size_t steps) {
  Verdict v{8, "ablation CSVs complete; Adjacent >= anchors and PoolConcat >= ElementwiseAdd in >= 2/3 seeds"};
  RunConfig base;
  base.ablation_steps = steps;
  const Dataset train_data = generate(base.task(false), base.train_samples);
  const Dataset test_data = generate(base.task(true), base.test_samples);
  std::map<std::string, std::vector<AblationRow>> results;
  const std::pair<const char*, std::size_t> axes[] = {{"strategy", 3}, {"mi_variant", 3}, {"blocks", 1}};
  for (auto [axis, seeds] : axes) {
    RunConfig cfg = base;
    cfg.ablation_seeds = seeds;
    const auto expected_rows = ablation_variants(cfg, axis).size() * seeds;
    const auto t0 = Clock::now();
    auto rows = run_ablation(cfg, axis, train_data, test_data, true, [&](const AblationRow& r) {
      std::fprintf(stderr, "[acceptance] %s %s seed %llu top1 %.4f (%.0f s)\n", axis,
                   r.variant.c_str(), static_cast<unsigned long long>(r.seed), r.top1,
                   seconds_since(t0));
    });
    std::ofstream csv(workdir / ("ablation_" + std::string(axis) + ".csv"));
    write_ablation_csv(csv, rows);
    bool finite = true;
    for (const auto& r : rows) finite = finite && std::isfinite(r.final_loss) && std::isfinite(r.emd_mean);
    v.require(rows.size() == expected_rows && finite,
              std::string(axis) + ": " + std::to_string(rows.size()) + "/" +
                  std::to_string(expected_rows) + " rows, all finite");
    results[axis] = std::move(rows);
  }
  auto top1 = [&](const std::string& axis, const std::string& variant, std::uint64_t seed) {
    for (const auto& r : results[axis]) {
      if (r.variant == variant && r.seed == seed) return r.top1;
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  std::size_t strategy_wins = 0, pool_wins = 0;
  std::string strategy_detail, pool_detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const double adj = top1("strategy", "Adjacent", seed);
    const double first = top1("strategy", "AlignFirst", seed);
    const double mid = top1("strategy", "AlignMiddle", seed);
    strategy_wins += adj >= first && adj >= mid;
    strategy_detail += " [" + fmt("%.3f", adj) + " vs " + fmt("%.3f", first) + ", " + fmt("%.3f", mid) + "]";
    const double pool = top1("mi_variant", "PoolConcat", seed);
    const double add = top1("mi_variant", "ElementwiseAdd", seed);
    pool_wins += pool >= add;
    pool_detail += " [" + fmt("%.3f", pool) + " vs " + fmt("%.3f", add) + "]";
  }
  v.require(strategy_wins >= 2, "Adjacent >= AlignFirst, AlignMiddle in " +
                                    std::to_string(strategy_wins) + "/3 seeds:" + strategy_detail);
  v.require(pool_wins >= 2, "PoolConcat >= ElementwiseAdd in " + std::to_string(pool_wins) +
                                "/3 seeds:" + pool_detail);
  v.note("ablation runs use " + std::to_string(steps) + " steps each");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ILA acceptance run"};
  std::string workdir = "acceptance";
  std::string criteria = "1,2,3,4,5,6,7,8";
  std::size_t ablation_steps = 500;
  app.add_option("--workdir", workdir, "Directory for logs, checkpoints and CSVs");
  app.add_option("--criteria", criteria, "Comma list of criteria to run");
  app.add_option("--ablation-steps", ablation_steps, "Training steps per ablation run");
  CLI11_PARSE(app, argc, argv);

  std::set<int> wanted;
  std::stringstream ss(criteria);
  for (std::string item; std::getline(ss, item, ',');) wanted.insert(std::stoi(item));
  fs::create_directories(workdir);

  std::vector<Verdict> verdicts;
  auto run = [&](int id, auto fn) {
    if (!wanted.count(id)) return;
    const auto t0 = Clock::now();
    try {
      verdicts.push_back(fn());
    } catch (const std::exception& e) {
      Verdict v{id, "error"};
      v.require(false, e.what());
      verdicts.push_back(v);
    }
    verdicts.back().note("took " + fmt("%.1f", seconds_since(t0)) + " s");
    report(verdicts.back());
  };
  const fs::path dir(workdir);
  run(1, [] { return gradient_integrity(); });
  run(2, [] { return mask_geometry(); });
  run(6, [&] { return cost_model(dir); });
  run(7, [] { return alignment_bound(); });
  run(3, [&] { return temporal_order(dir); });
  run(4, [&] { return reversal(dir); });
  run(5, [&] { return emd_probe(dir); });
  run(8, [&] { return ablations(dir, ablation_steps); });

  std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  nlohmann::json summary = nlohmann::json::array();
  std::size_t passed = 0;
  std::printf("\nsummary\n");
  for (const auto& v : verdicts) {
    std::printf("criterion %d: %s\n", v.id, v.pass ? "PASS" : "FAIL");
    passed += v.pass;
    summary.push_back({{"criterion", v.id}, {"pass", v.pass}, {"title", v.title}, {"notes", v.notes}});
  }
  std::printf("%zu/%zu criteria passed\n", passed, verdicts.size());
  std::ofstream(dir / "acceptance.json") << summary.dump(2) << '\n';
  return passed == verdicts.size() ? 0 : 1;
}
