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


#pragma once

// Synthetic clips whose class is recoverable only from frame order.
//
// A shape (filled square or plus sign) walks the four corners of a square
// path. The four motion classes visit the corners in "Z" or "N" order,
// forwards or backwards, starting at a random phase:
//
//   Z forward  TL TR BL BR      N forward  TL BL TR BR
//   Z backward BR BL TR TL      N backward BR TR BL TL
//
// With a uniform phase every frame's corner is uniform for every class, so a
// single frame carries no class information beyond the shape, and with
// T = 4 the unordered set of frames is identical for all four motions. Each
// backward class is the exact frame reversal of its forward class.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ila/tensor.hpp"

namespace ila {

enum class Motion { ZForward = 0, ZBackward = 1, NForward = 2, NBackward = 3 };
enum class ShapeKind { Square = 0, Plus = 1 };

inline constexpr std::size_t kSynthClasses = 8;

/// label = 4 * shape + motion.
inline std::size_t synth_label(ShapeKind s, Motion m) {
  return 4 * static_cast<std::size_t>(s) + static_cast<std::size_t>(m);
}
/// Class whose clips are the frame reversals of `label`'s clips.
inline std::size_t reversed_label(std::size_t label) { return label ^ 1U; }

struct SynthTaskSpec {
  std::size_t frames = 4;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t num_classes = kSynthClasses;  // fixed
  std::size_t shape_size = 8;   // px
  std::size_t speed = 12;       // px per frame along the path edges
  double noise = 0.05;          // Gaussian pixel noise sigma, in [0,1] units
  std::uint64_t seed = 0;

  /// Throws InfeasibleSpec if the path cannot stay inside the frame.
  void validate() const;
  std::size_t pixels_per_clip() const { return frames * height * width * 3; }
};

struct VideoSample {
  std::uint16_t label = 0;
  std::vector<std::uint8_t> pixels;  // [T, H, W, 3] row-major
};

struct Dataset {
  std::size_t frames = 0, height = 0, width = 0;
  std::size_t num_classes = kSynthClasses;
  std::vector<VideoSample> samples;

  std::size_t size() const { return samples.size(); }
  /// Pixels of sample i as a [T, H, W, 3] tensor scaled to [0, 1].
  Tensor clip(std::size_t i) const;
  std::vector<std::size_t> labels() const;
};

/// Corner visited at frame t (0 TL, 1 TR, 2 BL, 3 BR) for a motion and phase.
std::size_t corner_at(Motion m, std::size_t phase, std::size_t t);

/// Sample i draws from its own stream derive_seed(spec.seed, i); label i % 8.
/// Deterministic for a fixed spec regardless of `threads`.
Dataset generate(const SynthTaskSpec& spec, std::size_t n, std::size_t threads = 0);

/// Reverses the frame order of a [T, H, W, 3] pixel buffer.
std::vector<std::uint8_t> reverse_frames(std::span<const std::uint8_t> pixels, std::size_t frames);
Tensor reverse_frames(const Tensor& clip);

/// Dataset file layout (little-endian):
///   "ILAV" | u16 version=1 | u16 num_classes | u32 n | u32 T | u32 H | u32 W
///   | n x { u16 label | T*H*W*3 pixel bytes }
inline constexpr std::size_t kDatasetHeaderBytes = 24;

void write_dataset(const std::filesystem::path& path, const Dataset& data);
/// Throws CorruptFile on bad magic, version, label or length.
Dataset read_dataset(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_dataset(const Dataset& data);
Dataset parse_dataset(std::span<const std::uint8_t> bytes);

}  // namespace ila
