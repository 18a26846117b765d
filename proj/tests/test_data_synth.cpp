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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "ila/errors.hpp"
#include "ila/synth.hpp"
#include "test_util.hpp"

using namespace ila;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "ila_test_synth";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Per-patch channel means of one frame: 16 patches x 3 channels on a 32x32 frame.
std::vector<double> frame_features(const VideoSample& s, const Dataset& d, std::size_t t) {
  const std::size_t P = 8, gh = d.height / P, gw = d.width / P;
  std::vector<double> f(gh * gw * 3, 0.0);
  for (std::size_t i = 0; i < d.height; ++i)
    for (std::size_t j = 0; j < d.width; ++j)
      for (std::size_t c = 0; c < 3; ++c)
        f[((i / P) * gw + j / P) * 3 + c] +=
            s.pixels[((t * d.height + i) * d.width + j) * 3 + c] / (255.0 * P * P);
  return f;
}

// Multinomial logistic regression by full-batch gradient descent.
struct Probe {
  std::size_t classes, dim;
  std::vector<double> w;  // classes x (dim + 1)
  Probe(std::size_t k, std::size_t d) : classes(k), dim(d), w(k * (d + 1), 0.0) {}

  std::vector<double> probs(const std::vector<double>& x) const {
    std::vector<double> z(classes);
    for (std::size_t k = 0; k < classes; ++k) {
      double s = w[k * (dim + 1) + dim];
      for (std::size_t i = 0; i < dim; ++i) s += w[k * (dim + 1) + i] * x[i];
      z[k] = s;
    }
    const double m = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) total += (v = std::exp(v - m));
    for (double& v : z) v /= total;
    return z;
  }

  void fit(const std::vector<std::vector<double>>& xs, const std::vector<std::size_t>& ys,
           std::size_t iters, double lr) {
    std::vector<double> g(w.size());
    for (std::size_t it = 0; it < iters; ++it) {
      std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t n = 0; n < xs.size(); ++n) {
        const auto p = probs(xs[n]);
        for (std::size_t k = 0; k < classes; ++k) {
          const double e = p[k] - (k == ys[n] ? 1.0 : 0.0);
          for (std::size_t i = 0; i < dim; ++i) g[k * (dim + 1) + i] += e * xs[n][i];
          g[k * (dim + 1) + dim] += e;
        }
      }
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i] / static_cast<double>(xs.size());
    }
  }

  std::size_t predict(const std::vector<double>& x) const {
    const auto p = probs(x);
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  }
};

}  // namespace

TEST_CASE("spec validation") {
  SynthTaskSpec s;
  CHECK_NOTHROW(s.validate());
  s.shape_size = 25;
  CHECK_THROWS_AS(s.validate(), InfeasibleSpec);
  s = {};
  s.num_classes = 6;
  CHECK_THROWS_AS(s.validate(), InfeasibleSpec);
  s = {};
  s.frames = 1;
  CHECK_THROWS_AS(generate(s, 1), InfeasibleSpec);
}

TEST_CASE("generation is deterministic, balanced and thread independent") {
  SynthTaskSpec s;
  s.seed = 42;
  const Dataset a = generate(s, 37, 1), b = generate(s, 37, 4);
  CHECK(serialize_dataset(a) == serialize_dataset(b));
  std::vector<std::size_t> counts(8, 0);
  for (const auto& smp : a.samples) ++counts[smp.label];
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  CHECK(*hi - *lo <= 1);
  s.seed = 43;
  CHECK(serialize_dataset(generate(s, 37, 1)) != serialize_dataset(a));
}

TEST_CASE("every frame shows the whole shape") {
  SynthTaskSpec s;
  s.noise = 0.0;
  const Dataset d = generate(s, 64, 1);
  const std::uint8_t background = static_cast<std::uint8_t>(std::lround(0.1 * 255));
  for (const auto& smp : d.samples) {
    const std::size_t expected = smp.label < 4 ? 64 : 2 * 8 * 4 - 16;
    for (std::size_t t = 0; t < s.frames; ++t) {
      std::size_t lit = 0;
      for (std::size_t p = 0; p < s.height * s.width; ++p)
        lit += smp.pixels[(t * s.height * s.width + p) * 3] != background;
      CHECK(lit == expected);
    }
  }
}

TEST_CASE("backward classes are frame reversals of forward classes") {
  for (std::size_t label = 0; label < 8; ++label) {
    CHECK(reversed_label(reversed_label(label)) == label);
    CHECK(reversed_label(label) / 4 == label / 4);
    const auto m = static_cast<Motion>(label % 4);
    const auto r = static_cast<Motion>(reversed_label(label) % 4);
    for (std::size_t phase = 0; phase < 4; ++phase) {
      bool found = false;
      for (std::size_t q = 0; q < 4 && !found; ++q) {
        bool all = true;
        for (std::size_t t = 0; t < 4; ++t) all = all && corner_at(r, q, t) == corner_at(m, phase, 3 - t);
        found = all;
      }
      CHECK(found);
    }
  }
  // With T = 4 every motion visits the same set of corners.
  for (std::size_t m = 0; m < 4; ++m) {
    std::set<std::size_t> seen;
    for (std::size_t t = 0; t < 4; ++t) seen.insert(corner_at(static_cast<Motion>(m), 1, t));
    CHECK(seen.size() == 4);
  }
  // Byte-level reversal.
  const std::vector<std::uint8_t> px{1, 2, 3, 4, 5, 6};
  CHECK(reverse_frames(px, 3) == std::vector<std::uint8_t>{5, 6, 3, 4, 1, 2});
}

TEST_CASE("file layout, round trip and corruption") {
  SynthTaskSpec s;
  const Dataset d = generate(s, 10, 1);
  const auto path = temp_file("ten.ilav");
  write_dataset(path, d);
  CHECK(std::filesystem::file_size(path) == 2 + 2 + 4 * 5 + 10 * (2 + 12288));
  CHECK(kDatasetHeaderBytes == 24);
  const Dataset back = read_dataset(path);
  CHECK(back.size() == 10);
  CHECK(serialize_dataset(back) == serialize_dataset(d));
  CHECK(back.frames == 4);
  CHECK(back.clip(3).shape() == Shape{4, 32, 32, 3});
  CHECK(back.clip(3)[0] == d.samples[3].pixels[0] / 255.0);

  auto bytes = serialize_dataset(d);
  CHECK_THROWS_AS(parse_dataset(std::span(bytes).first(bytes.size() - 1)), CorruptFile);
  CHECK_THROWS_AS(parse_dataset(std::span(bytes).first(10)), CorruptFile);
  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(parse_dataset(extra), CorruptFile);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(parse_dataset(magic), CorruptFile);
  auto version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(parse_dataset(version), CorruptFile);
  auto label = bytes;
  label[24] = 200;
  CHECK_THROWS_AS(parse_dataset(label), CorruptFile);

  {
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), 100);
  }
  CHECK_THROWS_AS(read_dataset(path), CorruptFile);
  CHECK_THROWS_AS(read_dataset(temp_file("missing.ilav")), CorruptFile);
  std::filesystem::remove_all(path.parent_path());
}

TEST_CASE("single frames do not reveal the motion class") {
  SynthTaskSpec train_spec, test_spec;
  test_spec.seed = 99;
  const Dataset train = generate(train_spec, 1024), test = generate(test_spec, 256);
  std::vector<std::vector<double>> xs;
  std::vector<std::size_t> ys;
  for (const auto& s : train.samples)
    for (std::size_t t = 0; t < train.frames; ++t) {
      xs.push_back(frame_features(s, train, t));
      ys.push_back(s.label % 4);
    }
  // Standardise with training statistics.
  const std::size_t dim = xs[0].size();
  std::vector<double> mu(dim, 0.0), sd(dim, 0.0);
  for (const auto& x : xs)
    for (std::size_t i = 0; i < dim; ++i) mu[i] += x[i] / xs.size();
  for (const auto& x : xs)
    for (std::size_t i = 0; i < dim; ++i) sd[i] += (x[i] - mu[i]) * (x[i] - mu[i]) / xs.size();
  auto standardise = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < dim; ++i) x[i] = (x[i] - mu[i]) / std::sqrt(sd[i] + 1e-12);
  };
  for (auto& x : xs) standardise(x);

  Probe probe(4, dim);
  probe.fit(xs, ys, 300, 0.5);
  std::size_t train_hits = 0;
  for (std::size_t n = 0; n < xs.size(); ++n) train_hits += probe.predict(xs[n]) == ys[n];

  std::size_t hits = 0, total = 0;
  for (const auto& s : test.samples)
    for (std::size_t t = 0; t < test.frames; ++t) {
      auto x = frame_features(s, test, t);
      standardise(x);
      hits += probe.predict(x) == s.label % 4;
      ++total;
    }
  const double acc = static_cast<double>(hits) / total;
  MESSAGE("single-frame probe: train " << static_cast<double>(train_hits) / xs.size()
                                       << ", test " << acc);
  CHECK(acc <= 0.30);
}
