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


#include "ila/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ila/errors.hpp"
#include "ila/rng.hpp"

namespace ila {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("expected a number, got '" + v + "'");
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

struct Key {
  const char* name;
  const char* doc;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define ILA_SIZE_KEY(name, field, doc)                                          \
  Key {                                                                         \
    name, doc, [](RunConfig& c, const std::string& v) { c.field = to_size(v); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }              \
  }
#define ILA_REAL_KEY(name, field, doc)                                            \
  Key {                                                                           \
    name, doc, [](RunConfig& c, const std::string& v) { c.field = to_double(v); }, \
        [](const RunConfig& c) { return fmt(c.field); }                           \
  }

// aligned_blocks is resolved after every key is read because "all" depends
// on depth; it is therefore not in this table.
const std::vector<Key>& keys() {
  static const std::vector<Key> kKeys{
      ILA_SIZE_KEY("frames", model.frames, "frames per clip (T)"),
      ILA_SIZE_KEY("height", model.height, "frame height in pixels"),
      ILA_SIZE_KEY("width", model.width, "frame width in pixels"),
      ILA_SIZE_KEY("patch", model.patch, "patch side in pixels"),
      ILA_SIZE_KEY("dim", model.dim, "token width d"),
      ILA_SIZE_KEY("depth", model.depth, "number of blocks L"),
      ILA_SIZE_KEY("heads", model.heads, "attention heads"),
      Key{"strategy", "Adjacent | AlignFirst | AlignMiddle",
          [](RunConfig& c, const std::string& v) { c.model.align.strategy = parse_strategy(v); },
          [](const RunConfig& c) { return to_string(c.model.align.strategy); }},
      Key{"mi_variant", "PoolConcat | ElementwiseAdd | DirectConcat | AvgPoolNoAlign | None",
          [](RunConfig& c, const std::string& v) { c.model.align.mi_variant = parse_mi_variant(v); },
          [](const RunConfig& c) { return to_string(c.model.align.mi_variant); }},
      Key{"conv_depth", "Standard | Deep point predictor",
          [](RunConfig& c, const std::string& v) { c.model.align.conv_depth = parse_conv_depth(v); },
          [](const RunConfig& c) { return to_string(c.model.align.conv_depth); }},
      ILA_SIZE_KEY("align_hidden", model.align.hidden, "point-predictor width, 0 = max(8, d/16)"),
      ILA_REAL_KEY("mask_eta", model.align.mask.eta, "mask plateau value"),
      ILA_REAL_KEY("mask_delta", model.align.mask.delta, "mask plateau radius"),
      ILA_REAL_KEY("mask_beta", model.align.mask.beta, "mask decay slope"),
      Key{"loss_mode", "CosineText | CrossEntropy",
          [](RunConfig& c, const std::string& v) { c.model.loss_mode = parse_loss_mode(v); },
          [](const RunConfig& c) { return to_string(c.model.loss_mode); }},
      ILA_REAL_KEY("temperature", model.temperature, "cosine-score temperature"),
      ILA_SIZE_KEY("num_classes", model.num_classes, "number of classes"),
      ILA_REAL_KEY("gamma", loss.gamma, "alignment-loss weight"),
      ILA_REAL_KEY("label_smoothing", loss.label_smoothing, "label smoothing in [0, 1)"),
      ILA_REAL_KEY("lr", optim.lr, "peak learning rate"),
      ILA_REAL_KEY("min_lr", optim.min_lr, "final learning rate"),
      ILA_REAL_KEY("beta1", optim.beta1, "AdamW beta1"),
      ILA_REAL_KEY("beta2", optim.beta2, "AdamW beta2"),
      ILA_REAL_KEY("adam_eps", optim.eps, "AdamW epsilon"),
      ILA_REAL_KEY("weight_decay", optim.weight_decay, "decoupled weight decay"),
      ILA_SIZE_KEY("warmup_steps", optim.warmup_steps, "linear warmup steps"),
      ILA_SIZE_KEY("steps", optim.total_steps, "training steps"),
      ILA_SIZE_KEY("batch", batch, "clips per step"),
      ILA_SIZE_KEY("seed", seed, "model init and batch sampling seed"),
      ILA_SIZE_KEY("threads", threads, "worker threads, 0 = all"),
      ILA_SIZE_KEY("train_samples", train_samples, "generated training clips"),
      ILA_SIZE_KEY("test_samples", test_samples, "generated test clips"),
      ILA_SIZE_KEY("log_every", log_every, "training-log stride"),
      ILA_SIZE_KEY("ablation_steps", ablation_steps, "steps per ablation run, 0 = steps"),
      ILA_SIZE_KEY("ablation_seeds", ablation_seeds, "seeds per ablation variant"),
      ILA_SIZE_KEY("shape_size", synth.shape_size, "synthetic shape side in pixels"),
      ILA_SIZE_KEY("speed", synth.speed, "synthetic displacement per frame in pixels"),
      ILA_REAL_KEY("noise", synth.noise, "synthetic pixel noise sigma"),
      ILA_SIZE_KEY("data_seed", synth.seed, "synthetic data seed"),
  };
  return kKeys;
}

#undef ILA_SIZE_KEY
#undef ILA_REAL_KEY

}  // namespace

SynthTaskSpec RunConfig::task(bool test_split) const {
  SynthTaskSpec s = synth;
  if (test_split) s.seed = derive_seed(synth.seed, kTestSplitStream);
  s.frames = model.frames;
  s.height = model.height;
  s.width = model.width;
  s.num_classes = model.num_classes;
  return s;
}

void RunConfig::validate() const {
  try {
    model.validate();
    loss.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (batch == 0) throw ConfigError("batch must be positive");
  if (optim.total_steps == 0) throw ConfigError("steps must be positive");
  if (!(optim.lr > 0.0) || !(optim.min_lr >= 0.0)) throw ConfigError("learning rates must be positive");
  if (!(optim.beta1 >= 0.0 && optim.beta1 < 1.0 && optim.beta2 >= 0.0 && optim.beta2 < 1.0)) {
    throw ConfigError("AdamW betas must lie in [0, 1)");
  }
  if (!(optim.eps > 0.0) || !(optim.weight_decay >= 0.0)) {
    throw ConfigError("adam_eps must be positive and weight_decay non-negative");
  }
  if (log_every == 0) throw ConfigError("log_every must be positive");
  if (ablation_seeds == 0) throw ConfigError("ablation_seeds must be positive");
}

std::vector<std::size_t> parse_block_list(const std::string& text, std::size_t depth) {
  const std::string t = trim(text);
  std::vector<std::size_t> out;
  if (t == "all") {
    for (std::size_t b = 1; b <= depth; ++b) out.push_back(b);
    return out;
  }
  if (t == "none" || t.empty()) return out;
  std::set<std::size_t> seen;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto dash = item.find('-');
    std::size_t lo, hi;
    if (dash == std::string::npos) {
      lo = hi = to_size(item);
    } else {
      lo = to_size(trim(item.substr(0, dash)));
      hi = to_size(trim(item.substr(dash + 1)));
    }
    if (lo == 0 || hi < lo || hi > depth) {
      throw ConfigError("block range '" + item + "' outside 1.." + std::to_string(depth));
    }
    for (std::size_t b = lo; b <= hi; ++b) seen.insert(b);
  }
  return {seen.begin(), seen.end()};
}

std::string format_block_list(const std::vector<std::size_t>& blocks) {
  if (blocks.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(blocks[i]);
  }
  return out;
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, const Key*> table;
  for (const auto& k : keys()) table[k.name] = &k;

  RunConfig cfg;
  std::string blocks_text = "all";
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      if (key == "aligned_blocks") {
        blocks_text = value;
      } else if (auto it = table.find(key); it != table.end()) {
        it->second->set(cfg, value);
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const Error& e) {
      throw ConfigError(where + e.what());
    }
  }
  cfg.model.aligned_blocks = parse_block_list(blocks_text, cfg.model.depth);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) {
    out += k.name;
    out += " = " + k.get(cfg) + "\n";
    if (std::string(k.name) == "heads") {
      out += "aligned_blocks = " + format_block_list(cfg.model.aligned_blocks) + "\n";
    }
  }
  return out;
}

std::string default_config_text() {
  const RunConfig def;
  std::string out;
  for (const auto& k : keys()) {
    out += std::string("# ") + k.doc + "\n" + k.name + " = " + k.get(def) + "\n";
    if (std::string(k.name) == "heads") {
      out += "# 1-based aligned blocks: all | none | a-b | comma list\naligned_blocks = all\n";
    }
  }
  return out;
}

}  // namespace ila
