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


#include "ila/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "ila/errors.hpp"
#include "ila/parallel.hpp"
#include "ila/rng.hpp"

namespace ila {
namespace {

constexpr std::array<std::array<std::size_t, 4>, 4> kCornerOrder{{
    {0, 1, 2, 3},  // Z forward
    {3, 2, 1, 0},  // Z backward
    {0, 2, 1, 3},  // N forward
    {3, 1, 2, 0},  // N backward
}};

constexpr double kBackground = 0.1;
constexpr std::uint16_t kDatasetVersion = 1;

bool shape_covers(ShapeKind s, std::size_t i, std::size_t j, std::size_t size) {
  if (s == ShapeKind::Square) return true;
  const std::size_t lo = size / 3, hi = size - size / 3;
  return (i >= lo && i < hi) || (j >= lo && j < hi);
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

VideoSample render(const SynthTaskSpec& spec, std::size_t index) {
  SplitMix64 rng(derive_seed(spec.seed, index));
  const std::size_t label = index % kSynthClasses;
  const auto shape = static_cast<ShapeKind>(label / 4);
  const auto motion = static_cast<Motion>(label % 4);
  const std::size_t phase = rng.below(4);
  const std::size_t x0 = rng.below(spec.width - spec.shape_size - spec.speed + 1);
  const std::size_t y0 = rng.below(spec.height - spec.shape_size - spec.speed + 1);
  std::array<double, 3> color{};
  const double brightness = 0.6 + 0.4 * rng.uniform();
  for (double& c : color) c = brightness * (0.8 + 0.2 * rng.uniform());

  VideoSample out;
  out.label = static_cast<std::uint16_t>(label);
  out.pixels.resize(spec.pixels_per_clip());
  const std::size_t H = spec.height, W = spec.width;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const std::size_t corner = corner_at(motion, phase, t);
    const std::size_t left = x0 + (corner % 2) * spec.speed;
    const std::size_t top = y0 + (corner / 2) * spec.speed;
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < W; ++j) {
        const bool inside = i >= top && i < top + spec.shape_size && j >= left &&
                            j < left + spec.shape_size &&
                            shape_covers(shape, i - top, j - left, spec.shape_size);
        for (std::size_t c = 0; c < 3; ++c) {
          const double base = inside ? color[c] : kBackground;
          out.pixels[((t * H + i) * W + j) * 3 + c] = quantize(base + spec.noise * rng.normal());
        }
      }
    }
  }
  return out;
}

template <class T>
void put(std::vector<std::uint8_t>& buf, T v) {
  for (std::size_t b = 0; b < sizeof(T); ++b) buf.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

template <class T>
T get(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw CorruptFile("truncated dataset");
  T v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) v |= static_cast<T>(T(bytes[pos + b]) << (8 * b));
  pos += sizeof(T);
  return v;
}

}  // namespace

void SynthTaskSpec::validate() const {
  if (num_classes != kSynthClasses) {
    throw InfeasibleSpec("the synthetic task has exactly 8 classes, got " +
                         std::to_string(num_classes));
  }
  if (frames < 2) throw InfeasibleSpec("need at least 2 frames");
  if (shape_size == 0 || speed == 0) throw InfeasibleSpec("shape size and speed must be positive");
  if (shape_size + speed > width || shape_size + speed > height) {
    throw InfeasibleSpec("a " + std::to_string(shape_size) + " px shape moving " +
                         std::to_string(speed) + " px cannot stay inside " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw InfeasibleSpec("noise must be >= 0");
}

std::size_t corner_at(Motion m, std::size_t phase, std::size_t t) {
  return kCornerOrder[static_cast<std::size_t>(m)][(phase + t) % 4];
}

Dataset generate(const SynthTaskSpec& spec, std::size_t n, std::size_t threads) {
  spec.validate();
  Dataset d;
  d.frames = spec.frames;
  d.height = spec.height;
  d.width = spec.width;
  d.num_classes = spec.num_classes;
  d.samples.resize(n);
  parallel_for(n, threads, [&](std::size_t i) { d.samples[i] = render(spec, i); });
  return d;
}

Tensor Dataset::clip(std::size_t i) const {
  if (i >= samples.size()) throw BadIndex("sample " + std::to_string(i));
  const auto& px = samples[i].pixels;
  std::vector<double> v(px.size());
  for (std::size_t k = 0; k < px.size(); ++k) v[k] = px[k] / 255.0;
  return Tensor({frames, height, width, 3}, std::move(v));
}

std::vector<std::size_t> Dataset::labels() const {
  std::vector<std::size_t> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

std::vector<std::uint8_t> reverse_frames(std::span<const std::uint8_t> pixels,
                                         std::size_t frames) {
  if (frames == 0 || pixels.size() % frames != 0) throw ShapeMismatch("pixels do not split into frames");
  const std::size_t per = pixels.size() / frames;
  std::vector<std::uint8_t> out(pixels.size());
  for (std::size_t t = 0; t < frames; ++t) {
    std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>((frames - 1 - t) * per), per,
                out.begin() + static_cast<std::ptrdiff_t>(t * per));
  }
  return out;
}

Tensor reverse_frames(const Tensor& clip) {
  if (clip.rank() < 1) throw ShapeMismatch("clip has no frame axis");
  const std::size_t frames = clip.dim(0), per = clip.size() / frames;
  std::vector<double> out(clip.size());
  auto src = clip.data();
  for (std::size_t t = 0; t < frames; ++t) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((frames - 1 - t) * per), per,
                out.begin() + static_cast<std::ptrdiff_t>(t * per));
  }
  return Tensor(clip.shape(), std::move(out));
}

std::vector<std::uint8_t> serialize_dataset(const Dataset& data) {
  const std::size_t per = data.frames * data.height * data.width * 3;
  std::vector<std::uint8_t> buf;
  buf.reserve(kDatasetHeaderBytes + data.size() * (2 + per));
  for (char c : {'I', 'L', 'A', 'V'}) buf.push_back(static_cast<std::uint8_t>(c));
  put<std::uint16_t>(buf, kDatasetVersion);
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(data.num_classes));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(data.size()));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(data.frames));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(data.height));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(data.width));
  for (const auto& s : data.samples) {
    if (s.pixels.size() != per) throw SizeMismatch("sample pixel count does not match header");
    put<std::uint16_t>(buf, s.label);
    buf.insert(buf.end(), s.pixels.begin(), s.pixels.end());
  }
  return buf;
}

Dataset parse_dataset(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kDatasetHeaderBytes || std::memcmp(bytes.data(), "ILAV", 4) != 0) {
    throw CorruptFile("missing ILAV header");
  }
  std::size_t pos = 4;
  if (get<std::uint16_t>(bytes, pos) != kDatasetVersion) throw CorruptFile("unsupported version");
  Dataset d;
  d.num_classes = get<std::uint16_t>(bytes, pos);
  const std::size_t n = get<std::uint32_t>(bytes, pos);
  d.frames = get<std::uint32_t>(bytes, pos);
  d.height = get<std::uint32_t>(bytes, pos);
  d.width = get<std::uint32_t>(bytes, pos);
  const std::size_t per = d.frames * d.height * d.width * 3;
  if (per == 0 || d.num_classes == 0) throw CorruptFile("empty clip geometry");
  if (bytes.size() != kDatasetHeaderBytes + n * (2 + per)) {
    throw CorruptFile("expected " + std::to_string(kDatasetHeaderBytes + n * (2 + per)) +
                      " bytes, found " + std::to_string(bytes.size()));
  }
  d.samples.resize(n);
  for (auto& s : d.samples) {
    s.label = get<std::uint16_t>(bytes, pos);
    if (s.label >= d.num_classes) throw CorruptFile("label " + std::to_string(s.label) + " out of range");
    s.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + per));
    pos += per;
  }
  return d;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  const auto buf = serialize_dataset(data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorruptFile("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw CorruptFile("write failed: " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptFile("cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_dataset(buf);
}

}  // namespace ila
