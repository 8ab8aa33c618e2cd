// Copyright 2026 the plaf authors
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

#include "plaf/core.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace plaf {

// Resolves pixels covered by several masks. With binary masks every covering
// mask ties, so the strategy picks the winner.
enum class AssignmentStrategy {
  kSmallestMask,  // fewest foreground pixels wins, ties to the lowest mask ID
};

struct AssignmentPolicy {
  AssignmentStrategy strategy = AssignmentStrategy::kSmallestMask;
};

// Accepts "smallest" / "smallest-mask". Throws kInvalidArgument otherwise.
AssignmentPolicy parseAssignmentPolicy(std::string_view name);
std::string_view policyName(AssignmentPolicy policy);

// Channel-wise bilinear resize with the align-corners-false convention:
// output sample i reads source coordinate (i + 0.5) * in / out - 0.5, clamped
// to the valid range.
DenseFeatureMap upsampleBilinear(const DenseFeatureMap& feat,
                                 std::size_t targetHeight,
                                 std::size_t targetWidth);

// Mean feature over each mask's foreground pixels. Sums accumulate in double.
std::vector<FeatureVector> aggregateMaskFeatures(const DenseFeatureMap& feat,
                                                 const MaskSet& masks);

// Row-major H×W map of mask IDs (1..K), 0 where no mask covers the pixel.
std::vector<std::uint16_t> assignPixels(const MaskSet& masks,
                                        AssignmentPolicy policy = {});

// Full 2D pipeline. Features whose size differs from the masks are bilinearly
// resampled to mask resolution first. Masks that end up owning no pixel are
// dropped and the remaining IDs compacted in their original order.
MaskIndexedFrame buildFrame(const DenseFeatureMap& feat, const MaskSet& masks,
                            AssignmentPolicy policy = {});

struct DenseReconstruction {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t dim = 0;
  std::vector<float> data;          // H×W×C, zero where invalid
  std::vector<std::uint8_t> valid;  // 1 where the pixel carries a mask feature

  std::span<const float> at(std::size_t row, std::size_t col) const {
    return {data.data() + (row * width + col) * dim, dim};
  }
};

// Per-pixel lookup into the feature table; background pixels are invalid.
DenseReconstruction reconstructDense(const MaskIndexedFrame& frame);

}  // namespace plaf
